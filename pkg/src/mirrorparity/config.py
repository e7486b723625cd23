"""Experiment configuration: flat dotted keys, SI units.

Sources are layered ``defaults < file < environment < --set < flags``. The
file is YAML with flat dotted keys::

    mirror.n_nucleons: 1000000000
    mirror.omega_rad_s: 1.0e5
    optics.eta: 0.5
    decoherence.model: localization

Environment overrides use the prefix ``MIRRORPARITY_`` followed by the
upper-cased key, with ``.`` optionally written as ``__``
(``MIRRORPARITY_RUN__SEED=7``).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Any, Mapping

import yaml

from .decoherence import GRW, DecoherenceModel, Localization, NoDecoherence
from .detection import PostSelection
from .errors import ConfigError, MirrorParityError, TruncationError
from .feasibility import omega_from_eta
from .fock import LambDicke
from .thermal import MirrorEnsemble, MirrorParams, boltzmann_ensemble

ENV_PREFIX = "MIRRORPARITY_"
MODELS = ("none", "localization", "grw")
FORMATS = ("csv", "json-doc")

# key -> (type, default); a None default marks the key optional
SCHEMA: dict[str, tuple[type, Any]] = {
    "mirror.n_nucleons": (int, None),
    "mirror.mass_kg": (float, None),
    "mirror.omega_rad_s": (float, None),
    "mirror.temperature_K": (float, 0.0),
    "optics.eta": (float, None),
    "optics.lambda_m": (float, None),
    "optics.geometry_factor": (float, 2.0),
    "thermal.tail_tol": (float, 1e-10),
    "fock.pad": (int, 20),
    "fock.trunc_tol": (float, 1e-10),
    "decoherence.model": (str, "none"),
    "decoherence.lambda_loc": (float, 0.0),
    "decoherence.duration_s": (float, 0.0),
    "decoherence.rate_per_nucleon_hz": (float, 1e-16),
    "decoherence.width_m": (float, 1e-7),
    "post_selection.j_max": (int, None),
    "post_selection.resolution_ratio": (float, None),
    "run.n_events": (int, 100000),
    "run.n_trajectories": (int, 1000),
    "run.seed": (int, None),
    "run.threads": (int, 1),
    "output.path": (str, None),
    "output.format": (str, "json-doc"),
}
_BY_UPPER = {k.upper(): k for k in SCHEMA}


def _coerce(key: str, value):
    kind, _ = SCHEMA[key]
    # "none" is a legal decoherence.model, so string keys only treat null/~ as unset
    nulls = ("null", "~") if kind is str else ("", "null", "none", "~")
    if value is None or (isinstance(value, str) and value.strip().lower() in nulls):
        return None
    try:
        if kind is int:
            if isinstance(value, bool):
                raise ValueError
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r} as {kind.__name__}") from None


def canonical_key(key: str) -> str:
    k = key.strip().replace("__", ".")
    if k in SCHEMA:
        return k
    if k.upper() in _BY_UPPER:
        return _BY_UPPER[k.upper()]
    raise ConfigError(f"unknown configuration key {key!r}")


def _flatten(data, prefix=""):
    # nested YAML tables are accepted too
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    values: Mapping[str, Any]

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_mapping(cls, data: Mapping | None = None, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        values = dict(base.values) if base else {k: d for k, (_, d) in SCHEMA.items()}
        for k, v in _flatten(data or {}).items():
            key = canonical_key(k)
            values[key] = _coerce(key, v)
        return cls(values)

    def with_overrides(self, data: Mapping) -> "ExperimentConfig":
        return ExperimentConfig.from_mapping(data, base=self)

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        data = yaml.safe_load(text) or {}
        if not isinstance(data, Mapping):
            raise ConfigError("configuration file must be a mapping of dotted keys")
        return cls.from_mapping(data)

    def emit(self) -> str:
        return yaml.safe_dump(dict(self.values), sort_keys=True)

    # -- derived physics objects ------------------------------------------

    def mirror_and_eta(self) -> tuple[MirrorParams, LambDicke]:
        v = self.values
        n_nuc, mass = v["mirror.n_nucleons"], v["mirror.mass_kg"]
        if (n_nuc is None) == (mass is None):
            raise ConfigError("give exactly one of mirror.n_nucleons, mirror.mass_kg")
        omega, eta, lam, g = v["mirror.omega_rad_s"], v["optics.eta"], v["optics.lambda_m"], v["optics.geometry_factor"]
        try:
            if omega is None:
                if eta is None or lam is None:
                    raise ConfigError("without mirror.omega_rad_s both optics.eta and optics.lambda_m are required")
                m = mass if mass is not None else MirrorParams.from_nucleons(n_nuc, 1.0).mass_kg
                # eta = g (2 pi / lambda) x_zpf, i.e. the g = 2 formula at lambda * 2 / g
                omega = omega_from_eta(eta, lam * 2 / g, m)
            elif (eta is None) == (lam is None):
                raise ConfigError("with mirror.omega_rad_s give exactly one of optics.eta, optics.lambda_m")
            T = v["mirror.temperature_K"]
            mirror = (MirrorParams.from_nucleons(n_nuc, omega, T) if n_nuc is not None
                      else MirrorParams(mass, omega, T))
            ld = LambDicke(eta) if eta is not None else LambDicke.from_wavelength(lam, mirror.x_zpf, g)
        except ConfigError:
            raise
        except MirrorParityError as exc:
            raise ConfigError(str(exc)) from exc
        return mirror, ld

    def ensemble(self) -> tuple[MirrorEnsemble, LambDicke]:
        mirror, eta = self.mirror_and_eta()
        try:
            return boltzmann_ensemble(mirror, self.values["thermal.tail_tol"]), eta
        except TruncationError:
            raise
        except MirrorParityError as exc:
            raise ConfigError(str(exc)) from exc

    def decoherence_model(self) -> DecoherenceModel:
        v = self.values
        model = v["decoherence.model"]
        try:
            if model == "none":
                return NoDecoherence()
            if model == "localization":
                return Localization(v["decoherence.lambda_loc"], v["decoherence.duration_s"])
            if model == "grw":
                return GRW(v["decoherence.rate_per_nucleon_hz"], v["decoherence.width_m"], v["decoherence.duration_s"])
        except MirrorParityError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"decoherence.model must be one of {MODELS}, got {model!r}")

    def post_selection(self) -> PostSelection:
        try:
            return PostSelection(self.values["post_selection.j_max"], self.values["post_selection.resolution_ratio"])
        except MirrorParityError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self, stochastic: bool = False) -> None:
        v = self.values
        for key, (kind, _) in SCHEMA.items():
            if kind is float and v[key] is not None and not math.isfinite(v[key]):
                raise ConfigError(f"{key} must be finite")
        self.mirror_and_eta()
        model = self.decoherence_model()
        self.post_selection()
        if v["output.format"] not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
        for key in ("run.n_events", "run.n_trajectories", "run.threads", "fock.pad"):
            if v[key] is None or v[key] < (0 if key == "fock.pad" else 1):
                raise ConfigError(f"{key} out of range")
        if (stochastic or isinstance(model, GRW)) and v["run.seed"] is None:
            raise ConfigError("run.seed is required when a stochastic path is enabled")


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            out[canonical_key(name[len(ENV_PREFIX):])] = value
    return out


def load_config(path=None, sets=(), environ=None) -> ExperimentConfig:
    cfg = ExperimentConfig.from_mapping({})
    if path is not None:
        try:
            with open(path) as fh:
                cfg = ExperimentConfig.parse(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    cfg = cfg.with_overrides(env_overrides(environ))
    pairs = {}
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs[key] = value
    return cfg.with_overrides(pairs)
