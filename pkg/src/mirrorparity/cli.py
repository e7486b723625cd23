"""Command-line entry point: ``mirrorparity {simulate,sweep,feasibility,clicks}``.

All quantities are SI (kg, rad/s, K, m, s, Hz); eta and ratios are
dimensionless. Exit codes: 0 success, 2 configuration error, 3 empty
post-selected data set, 4 convergence or truncation failure.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import ExperimentConfig, load_config
from .constants import HBAR
from .decoherence import GRW, Localization, NoDecoherence
from .detection import analytic_branch_probabilities, simulate_clicks
from .errors import ConfigError, ConvergenceError, EmptyDataSetError, MirrorParityError, TruncationError
from .feasibility import (
    COLUMNS as FEASIBILITY_COLUMNS,
    DEFAULT_ETAS,
    DEFAULT_WAVELENGTHS_M,
    log_grid,
    nucleons_for_resolution,
    photon_energy,
    resolution_curve,
    resolution_point,
)
from .pipeline import run_experiment

log = logging.getLogger("mirrorparity")

EXIT_OK, EXIT_CONFIG, EXIT_EMPTY, EXIT_CONVERGENCE = 0, 2, 3, 4

SUMMARY_FIELDS = (
    "parity_expectation",
    "acceptance_probability",
    "d2_fraction_accepted",
    "d2_fraction_total",
    "eta",
    "omega_rad_s",
    "mass_kg",
    "n_nucleons",
    "temperature_K",
    "x_zpf_m",
    "decoherence_model",
    "decoherence_strength",
    "ensemble_dim",
    "working_dim",
    "max_norm_loss",
    "resolution_adequate",
)
SWEEP_AXES = {
    "temperature": "mirror.temperature_K",
    "eta": "optics.eta",
    "loc_strength": "decoherence.lambda_loc",
    "grw_rate": "decoherence.rate_per_nucleon_hz",
}
CLICK_FIELDS = (
    "n_events",
    "n_accepted",
    "acceptance_fraction",
    "d2_count_accepted",
    "d2_fraction_accepted",
    "d2_fraction_accepted_ci95",
    "d2_count_total",
    "d2_fraction_total",
    "d2_fraction_total_ci95",
    "analytic_d2_fraction_total",
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, (list, tuple)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def write_table(rows, columns, fh) -> None:
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fh.write(",".join(fmt(row.get(c)) for c in columns) + "\n")


def write_doc(doc, fh) -> None:
    json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
    fh.write("\n")


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(rows, columns, fmt_name, doc=None) -> str:
    buf = io.StringIO()
    if fmt_name == "csv":
        write_table(rows, columns, buf)
    else:
        write_doc(doc if doc is not None else rows, buf)
    return buf.getvalue()


def _model_description(model, mirror):
    if isinstance(model, Localization):
        return "localization", model.strength(mirror)
    if isinstance(model, GRW):
        return "grw", model.expected_hits(mirror)
    return "none", 0.0


def cmd_simulate(config: ExperimentConfig) -> dict:
    """Run the density-matrix pipeline and return the summary document."""
    config.validate()
    ensemble, eta = config.ensemble()
    mirror = ensemble.params
    model = config.decoherence_model()
    rule = config.post_selection()
    res = run_experiment(
        ensemble, eta, model, rule,
        pad=config["fock.pad"], trunc_tol=config["fock.trunc_tol"],
        n_trajectories=config["run.n_trajectories"], seed=config["run.seed"] or 0,
        threads=config["run.threads"],
    )
    name, strength = _model_description(model, mirror)
    lam = config["optics.lambda_m"]
    adequate = None
    if lam is not None:
        adequate = rule.resolution_adequate(HBAR * mirror.omega_rad_s / photon_energy(lam))
    summary = res.summary()
    summary.update(
        eta=eta.eta,
        omega_rad_s=mirror.omega_rad_s,
        mass_kg=mirror.mass_kg,
        n_nucleons=mirror.n_nucleons,
        temperature_K=mirror.temperature_K,
        x_zpf_m=mirror.x_zpf,
        decoherence_model=name,
        decoherence_strength=strength,
        resolution_adequate=adequate,
    )
    return summary


def cmd_sweep(config: ExperimentConfig, axis: str, grid) -> list[dict]:
    """One :func:`cmd_simulate` summary per grid value, in grid order."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid must not be empty")
    key = SWEEP_AXES[axis]
    extra = {}
    if axis == "eta" and config["mirror.omega_rad_s"] is not None:
        extra["optics.lambda_m"] = None
    if axis == "loc_strength" and config["decoherence.model"] == "none":
        extra["decoherence.model"] = "localization"
    if axis == "grw_rate" and config["decoherence.model"] == "none":
        extra["decoherence.model"] = "grw"
    configs = [config.with_overrides({**extra, key: value}) for value in grid]
    for c in configs:
        c.validate()

    def run(c):
        return cmd_simulate(c.with_overrides({"run.threads": 1}))

    threads = config["run.threads"]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            summaries = list(pool.map(run, configs))
    else:
        summaries = [run(c) for c in configs]
    return [{axis: float(v), **s} for v, s in zip(grid, summaries)]


def cmd_feasibility(lambdas=DEFAULT_WAVELENGTHS_M, etas=DEFAULT_ETAS, n_range=None, target_ratio=None) -> list[dict]:
    """Resolution-curve rows per (wavelength, eta), plus solved mirror sizes for a target."""
    if n_range is None:
        n_range = log_grid(1e6, 1e14, 4)
    rows = []
    for lam in lambdas:
        for eta in etas:
            for p in resolution_curve(n_range, lam, eta):
                rows.append({**dict(zip(FEASIBILITY_COLUMNS, p.row())), "kind": "curve"})
    if target_ratio is not None:
        for lam in lambdas:
            for eta in etas:
                p = resolution_point(nucleons_for_resolution(target_ratio, lam, eta), lam, eta)
                rows.append({**dict(zip(FEASIBILITY_COLUMNS, p.row())), "kind": "target"})
    return rows


def cmd_clicks(config: ExperimentConfig):
    """Monte Carlo click stream and its summary document."""
    config.validate(stochastic=True)
    ensemble, eta = config.ensemble()
    mirror = ensemble.params
    model = config.decoherence_model()
    stream = simulate_clicks(
        ensemble, eta, model, config.post_selection(), config["run.n_events"], config["run.seed"],
        pad=config["fock.pad"], trunc_tol=config["fock.trunc_tol"], threads=config["run.threads"],
    )
    summary = stream.summary()
    sym, asym = analytic_branch_probabilities(ensemble, eta, pad=config["fock.pad"], trunc_tol=config["fock.trunc_tol"])
    summary["analytic_d2_fraction_total"] = asym / (sym + asym) if isinstance(model, NoDecoherence) else None
    name, strength = _model_description(model, mirror)
    summary.update(eta=eta.eta, decoherence_model=name, decoherence_strength=strength, seed=config["run.seed"])
    return stream, summary


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML file with flat dotted keys (SI units)")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override a dotted config key, e.g. --set mirror.temperature_K=1e-6")
    common.add_argument("--seed", type=int, help="run.seed")
    common.add_argument("--threads", type=int, help="run.threads")
    common.add_argument("--out", metavar="PATH", help="output.path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json-doc"), help="output.format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mirrorparity",
        description="Parity interferometry with a thermal movable mirror. Units are SI; "
                    "environment overrides use MIRRORPARITY_<KEY> (e.g. MIRRORPARITY_RUN__SEED).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="post-selected photon parity (density matrices)")
    sw = sub.add_parser("sweep", parents=[common], help="simulate over a grid of one parameter")
    sw.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sw.add_argument("--grid", required=True, help="comma or space separated values (SI)")
    fe = sub.add_parser("feasibility", parents=[common], help="required energy resolution vs mirror size")
    fe.add_argument("--lambda", dest="lambdas", default=None, help="wavelengths in m (default 1e-10,7e-7)")
    fe.add_argument("--eta", dest="etas", default=None, help="Lamb-Dicke parameters (default 0.1,1.0)")
    fe.add_argument("--n-min", type=float, default=1e6)
    fe.add_argument("--n-max", type=float, default=1e14)
    fe.add_argument("--per-decade", type=int, default=4)
    fe.add_argument("--target-ratio", type=float, default=None, help="solve for nucleon count at this dE/E_p")
    sub.add_parser("clicks", parents=[common], help="Monte Carlo D1/D2 click stream")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config, args.sets)
    flags = {"run.seed": args.seed, "run.threads": args.threads, "output.path": args.out, "output.format": args.format}
    return cfg.with_overrides({k: v for k, v in flags.items() if v is not None})


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        out, fmt_name = cfg["output.path"], cfg["output.format"]
        if args.command == "simulate":
            summary = cmd_simulate(cfg)
            _emit(_render([summary], SUMMARY_FIELDS, fmt_name, summary), out)
        elif args.command == "sweep":
            rows = cmd_sweep(cfg, args.axis, _floats(args.grid))
            doc = {"axis": args.axis, "rows": rows}
            _emit(_render(rows, (args.axis,) + SUMMARY_FIELDS, args.format or "csv", doc), out)
        elif args.command == "feasibility":
            lambdas = _floats(args.lambdas) if args.lambdas else DEFAULT_WAVELENGTHS_M
            etas = _floats(args.etas) if args.etas else DEFAULT_ETAS
            rows = cmd_feasibility(lambdas, etas, log_grid(args.n_min, args.n_max, args.per_decade), args.target_ratio)
            _emit(_render(rows, FEASIBILITY_COLUMNS + ("kind",), args.format or "csv"), out)
        else:
            stream, summary = cmd_clicks(cfg)
            events = io.StringIO()
            stream.write(events)
            _emit(events.getvalue(), out)
            text = _render([summary], CLICK_FIELDS, fmt_name, summary)
            (sys.stdout if out else sys.stderr).write(text)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except EmptyDataSetError as exc:
        log.error("empty data set: %s", exc)
        return EXIT_EMPTY
    except (ConvergenceError, TruncationError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_CONVERGENCE
    except MirrorParityError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())
