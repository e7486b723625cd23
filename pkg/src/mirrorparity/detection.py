"""Energy post-selection, reduction to the photon, parity readout and click streams.

Detector D1 registers the symmetric photon (parity +1), D2 the
antisymmetric one (parity -1). An event is accepted into the data set when
the photon lost or gained an even number of trap quanta, i.e. the mirror
level changed by an even ``shift_j = m - n`` with ``|shift_j| <= j_max``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .decoherence import (
    GRW,
    DecoherenceModel,
    Localization,
    apply_localization,
    CHUNK,
    draw_hits,
    is_identity,
    propagate_hits,
)
from .errors import EmptyDataSetError, InvalidArgumentError
from .fock import DEFAULT_TRUNC_TOL
from .scattering import DEFAULT_PAD, scatter, working_dim
from .thermal import MirrorEnsemble

EMPTY_TOL = 1e-15
D1, D2 = "D1", "D2"


@dataclass(frozen=True)
class PostSelection:
    """Keep only even energy shifts ``Delta E = 2 m hbar omega``.

    ``j_max=None`` places no bound on the size of the shift.
    ``resolution_ratio`` is the detector's fractional energy resolution
    ``dE / E_p``; see :meth:`resolution_adequate`.
    """

    j_max: int | None = None
    resolution_ratio: float | None = None
    parity_rule: str = field(default="even shifts", init=False)

    def __post_init__(self):
        if self.j_max is not None and (int(self.j_max) != self.j_max or self.j_max < 0):
            raise InvalidArgumentError(f"j_max must be a non-negative integer, got {self.j_max!r}")
        if self.resolution_ratio is not None and not (self.resolution_ratio > 0):
            raise InvalidArgumentError("resolution_ratio must be positive")

    def resolution_adequate(self, quantum_over_photon_energy: float) -> bool:
        """True when the detector resolves single trap quanta (``hbar omega / E_p``)."""
        return self.resolution_ratio is not None and self.resolution_ratio < quantum_over_photon_energy

    def accepted_levels(self, n: int, dim: int) -> np.ndarray:
        shift = np.arange(dim) - n
        ok = shift % 2 == 0
        if self.j_max is not None:
            ok &= np.abs(shift) <= self.j_max
        return ok


@dataclass(frozen=True)
class ClickRecord:
    detector: str
    shift_j: int
    accepted: bool
    trajectory_id: int


def partial_trace_mirror(rho: np.ndarray, photon_dim: int = 2) -> np.ndarray:
    """Reduce a photon-major joint operator to the photon (``Tr_m``)."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] % photon_dim:
        raise InvalidArgumentError(f"cannot split operator of shape {rho.shape} into photon_dim={photon_dim}")
    dim = rho.shape[0] // photon_dim
    return np.einsum("imjm->ij", rho.reshape(photon_dim, dim, photon_dim, dim))


def post_select(rho, levels, weights, rule: PostSelection):
    """Project per-level joint operators onto the accepted mirror levels and mix.

    ``rho`` is a stack ``(L, 2 dim, 2 dim)`` of joint operators, one for each
    initial level in ``levels``, mixed with ``weights``. Returns the
    unnormalized accepted joint operator and its trace, the acceptance
    probability.
    """
    rho = np.asarray(rho)
    if rho.ndim == 2:
        rho = rho[None]
    levels = np.atleast_1d(levels)
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if not (len(rho) == len(levels) == len(weights)):
        raise InvalidArgumentError("rho stack, levels and weights must have equal length")
    dim = rho.shape[1] // 2
    out = np.zeros(rho.shape[1:], dtype=complex)
    for r, n, w in zip(rho, levels, weights):
        keep = np.tile(rule.accepted_levels(int(n), dim), 2)
        out += w * (r * np.outer(keep, keep))
    acceptance = float(np.trace(out).real)
    if acceptance < EMPTY_TOL:
        raise EmptyDataSetError(f"acceptance probability {acceptance:.3g} leaves an empty data set")
    return out, acceptance


def photon_parity_expectation(photon_rho: np.ndarray) -> float:
    """``Tr(P rho) / Tr(rho)`` with ``P = diag(+1, -1)`` on {S, AS}."""
    s, a = photon_rho[0, 0].real, photon_rho[1, 1].real
    if s + a < EMPTY_TOL:
        raise EmptyDataSetError("photon state has zero trace")
    return float((s - a) / (s + a))


def wilson_interval(count: int, nobs: int, alpha: float = 0.05):
    if nobs == 0:
        return (0.0, 1.0)
    lo, hi = proportion_confint(count, nobs, alpha=alpha, method="wilson")
    return (float(lo), float(hi))


@dataclass
class ClickStream:
    """Columnar click data; index ``i`` is the event with ``trajectory_id == i``."""

    detector: np.ndarray  # 0 -> D1, 1 -> D2
    shift_j: np.ndarray
    accepted: np.ndarray
    initial_level: np.ndarray
    hits: np.ndarray | None = None
    fallbacks: int = 0

    def __len__(self):
        return len(self.detector)

    def __iter__(self) -> Iterator[ClickRecord]:
        for i, (d, s, a) in enumerate(zip(self.detector.tolist(), self.shift_j.tolist(), self.accepted.tolist())):
            yield ClickRecord(D2 if d else D1, s, a, i)

    @property
    def records(self) -> list[ClickRecord]:
        return list(self)

    def write(self, fh) -> None:
        fh.write("trajectory_id,detector,shift_j,accepted\n")
        for i, (d, s, a) in enumerate(zip(self.detector.tolist(), self.shift_j.tolist(), self.accepted.tolist())):
            fh.write(f"{i},{'D2' if d else 'D1'},{s},{'true' if a else 'false'}\n")

    def summary(self) -> dict:
        n = len(self)
        n_acc = int(self.accepted.sum())
        d2_acc = int((self.detector.astype(bool) & self.accepted).sum())
        d2_all = int(self.detector.sum())
        out = {
            "n_events": n,
            "n_accepted": n_acc,
            "acceptance_fraction": n_acc / n,
            "d2_count_accepted": d2_acc,
            "d2_fraction_accepted": d2_acc / n_acc if n_acc else None,
            "d2_fraction_accepted_ci95": list(wilson_interval(d2_acc, n_acc)),
            "d2_count_total": d2_all,
            "d2_fraction_total": d2_all / n,
            "d2_fraction_total_ci95": list(wilson_interval(d2_all, n)),
        }
        if self.hits is not None:
            out["mean_grw_hits"] = float(self.hits.mean())
            out["grw_fallbacks"] = self.fallbacks
        return out


def _event_seed(seed: int, i: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(1, i))


def _sample_index(cdf: np.ndarray, u) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)


def simulate_clicks(ensemble: MirrorEnsemble, eta, model: DecoherenceModel, rule: PostSelection,
                    n_events: int, seed: int, *, pad: int = DEFAULT_PAD,
                    trunc_tol: float = DEFAULT_TRUNC_TOL, threads: int = 1) -> ClickStream:
    """Monte Carlo detection events for single photons scattered off the thermal mirror.

    Initial levels and, for deterministic channels, outcomes are drawn from
    one stream seeded by ``(seed, 0)``; each GRW event ``i`` owns its
    generator seeded by ``(seed, 1, i)`` (hit draws, then the outcome
    uniform), so results do not depend on ``threads`` or batching.
    """
    if n_events < 1:
        raise InvalidArgumentError("n_events must be at least 1")
    mirror = ensemble.params
    dim = working_dim(ensemble, eta, pad, trunc_tol)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    initial = rng.choice(ensemble.levels, size=n_events, p=ensemble.probabilities)
    outcome = np.empty(n_events, dtype=np.int64)
    hits = None
    fallbacks = 0

    if isinstance(model, GRW) and not is_identity(model, mirror):
        draws, u_out = [], np.empty(n_events)
        for i in range(n_events):
            g = np.random.default_rng(_event_seed(seed, i))
            draws.append(draw_hits(g, model, mirror))
            u_out[i] = g.random()
        hits = np.array([len(t) for t, _ in draws])
        jobs = []
        for n in np.unique(initial):
            st = scatter(int(n), eta, dim, pad, trunc_tol)
            start = np.stack([st.amp_sym, st.amp_asym])
            idx = np.flatnonzero(initial == n)
            jobs += [(start, idx[i:i + CHUNK]) for i in range(0, len(idx), CHUNK)]

        def run(job):
            start, idx = job
            amps = np.broadcast_to(start, (len(idx),) + start.shape)
            out, fb = propagate_hits(amps, [draws[i][0] for i in idx], [draws[i][1] for i in idx],
                                     model, mirror, ids=idx)
            cdf = np.cumsum(np.abs(out.reshape(len(idx), -1)) ** 2, axis=1)
            pick = np.sum(cdf <= (u_out[idx] * cdf[:, -1])[:, None], axis=1)
            return idx, np.minimum(pick, cdf.shape[1] - 1), fb

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(j) for j in jobs]
        for idx, pick, fb in results:
            outcome[idx] = pick
            fallbacks += fb
    else:
        u = rng.random(n_events)
        for n in np.unique(initial):
            st = scatter(int(n), eta, dim, pad, trunc_tol)
            if isinstance(model, Localization) and not is_identity(model, mirror):
                probs = np.diag(apply_localization(st.projector(), model, mirror)).real
            else:
                probs = np.abs(st.vector()) ** 2
            sel = initial == n
            outcome[sel] = _sample_index(np.cumsum(probs), u[sel])

    branch = outcome // dim
    shift = outcome % dim - initial
    ok = shift % 2 == 0
    if rule.j_max is not None:
        ok &= np.abs(shift) <= rule.j_max
    return ClickStream(branch.astype(np.int8), shift.astype(np.int64), ok, initial, hits, fallbacks)


def analytic_branch_probabilities(ensemble: MirrorEnsemble, eta, *, pad: int = DEFAULT_PAD,
                                  trunc_tol: float = DEFAULT_TRUNC_TOL):
    """Thermally averaged S and AS weights, ``sum_n l_n sum_m P(n -> m)`` per branch."""
    dim = working_dim(ensemble, eta, pad, trunc_tol)
    sym = asym = 0.0
    for n, w in ensemble.weights:
        st = scatter(n, eta, dim, pad, trunc_tol)
        sym += w * float(np.sum(np.abs(st.amp_sym) ** 2))
        asym += w * float(np.sum(np.abs(st.amp_asym) ** 2))
    return sym, asym

