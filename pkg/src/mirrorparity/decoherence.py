"""Symmetry-breaking channels acting on the mirror after scattering.

Two mechanisms are provided:

* ``Localization`` -- position-localization master equation
  ``d rho/dt = -(i/hbar)[H, rho] - lambda_loc [x, [x, rho]]`` with the free
  oscillator Hamiltonian ``H``.
* ``GRW`` -- spontaneous Gaussian localization hits arriving as a Poisson
  process at ``rate_per_nucleon_hz * n_nucleons``.

Both act on mirror indices only; joint operators are photon-major
(``b * dim + m``). Results are returned in the frame co-rotating with the
free oscillator, so a zero-strength channel is exactly the identity and
Fock-basis populations are unaffected by the choice of frame.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np

from .errors import ConvergenceError, InvalidArgumentError, InvalidStateError
from .fock import position_eigensystem
from .scattering import JointState
from .thermal import MirrorParams

STATE_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-8
DEFAULT_PHASE_STEP = 0.05
MAX_STEPS = 1_000_000
MAX_FALLBACKS = 100
CHUNK = 4096

# Literature defaults, offered for configuration only.
GRW_DEFAULT_RATE_HZ = 1e-16
GRW_DEFAULT_WIDTH_M = 1e-7


def _check_nonneg(**values):
    for name, v in values.items():
        if not (math.isfinite(v) and v >= 0):
            raise InvalidArgumentError(f"{name} must be finite and non-negative, got {v!r}")


@dataclass(frozen=True)
class NoDecoherence:
    pass


@dataclass(frozen=True)
class Localization:
    lambda_loc: float  # 1 / (m^2 s)
    duration_s: float

    def __post_init__(self):
        _check_nonneg(lambda_loc=self.lambda_loc, duration_s=self.duration_s)

    def strength(self, mirror: MirrorParams) -> float:
        """Dimensionless ``lambda_loc * x_zpf^2 * t``."""
        return self.lambda_loc * mirror.x_zpf ** 2 * self.duration_s


@dataclass(frozen=True)
class GRW:
    rate_per_nucleon_hz: float = GRW_DEFAULT_RATE_HZ
    width_m: float = GRW_DEFAULT_WIDTH_M
    duration_s: float = 1.0

    def __post_init__(self):
        _check_nonneg(rate_per_nucleon_hz=self.rate_per_nucleon_hz, duration_s=self.duration_s)
        if not (math.isfinite(self.width_m) and self.width_m > 0):
            raise InvalidArgumentError(f"width_m must be finite and positive, got {self.width_m!r}")

    def expected_hits(self, mirror: MirrorParams) -> float:
        return self.rate_per_nucleon_hz * mirror.nucleon_count() * self.duration_s


DecoherenceModel = Union[NoDecoherence, Localization, GRW]


def is_identity(model: DecoherenceModel, mirror: MirrorParams) -> bool:
    if isinstance(model, NoDecoherence):
        return True
    if isinstance(model, Localization):
        return model.lambda_loc == 0 or model.duration_s == 0
    return model.expected_hits(mirror) == 0


def validate_density(rho: np.ndarray, tol: float = STATE_TOL) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density operator must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density operator is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise InvalidStateError(f"density operator trace is {tr!r}, expected 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lo < -tol:
        raise InvalidStateError(f"density operator has negative eigenvalue {lo:.3g}")


def linear_entropy(rho: np.ndarray) -> float:
    return float(1.0 - np.real(np.trace(rho @ rho)))


@lru_cache(maxsize=16)
def _position_basis(dim: int):
    nodes, vecs = position_eigensystem(dim)
    nodes.setflags(write=False)
    vecs.setflags(write=False)
    return nodes, vecs


def _lift(mirror_op: np.ndarray, photon_dim: int) -> np.ndarray:
    return np.kron(np.eye(photon_dim), mirror_op) if photon_dim > 1 else mirror_op


def _rotating_frame_phases(dim: int, photon_dim: int, omega_t: float) -> np.ndarray:
    # exp(-i omega t m) per joint index, zero-point phase dropped
    return np.tile(np.exp(-1j * omega_t * np.arange(dim)), photon_dim)


def apply_localization(rho: np.ndarray, model: Localization, mirror: MirrorParams, *,
                       photon_dim: int = 2, include_hamiltonian: bool = True,
                       phase_step: float = DEFAULT_PHASE_STEP, n_steps: int | None = None,
                       validate: bool = True) -> np.ndarray:
    """Evolve the mirror factor of ``rho`` under the localization master equation.

    Strang splitting: the free evolution is diagonal in the Fock basis, the
    double commutator is diagonal in the eigenbasis of the truncated
    position operator, where it multiplies coherences by
    ``exp(-lambda (x_i - x_j)^2 dt)``. Both factors are applied exactly.
    ``validate=False`` skips the state checks so the (linear) channel can be
    applied to unnormalized sums of states.
    """
    rho = np.asarray(rho, dtype=complex)
    if validate:
        validate_density(rho)
    if rho.shape[0] % photon_dim:
        raise InvalidArgumentError(f"operator size {rho.shape[0]} is not a multiple of photon_dim={photon_dim}")
    if model.lambda_loc == 0 or model.duration_s == 0:
        return rho.copy()

    dim = rho.shape[0] // photon_dim
    nodes, vecs = _position_basis(dim)
    x = nodes * mirror.x_zpf
    sep2 = np.subtract.outer(x, x) ** 2
    to_x = _lift(vecs, photon_dim)

    omega_t = mirror.omega_rad_s * model.duration_s if include_hamiltonian else 0.0
    if n_steps is None:
        n_steps = max(1, math.ceil(omega_t / phase_step))
    if n_steps > MAX_STEPS:
        raise ConvergenceError(f"{n_steps} Trotter steps needed (omega*t = {omega_t:.3g}); shorten duration_s")
    dt = model.duration_s / n_steps
    decay = np.tile(np.exp(-model.lambda_loc * sep2 * dt), (photon_dim, photon_dim))
    half = _rotating_frame_phases(dim, photon_dim, omega_t / n_steps / 2)
    half_op = np.outer(half, half.conj())

    tr0 = np.trace(rho).real
    out = rho
    for _ in range(n_steps):
        if omega_t:
            out = out * half_op
        out = to_x @ ((to_x.T @ out @ to_x) * decay) @ to_x.T
        if omega_t:
            out = out * half_op
    if omega_t:
        back = _rotating_frame_phases(dim, photon_dim, -omega_t)
        out = out * np.outer(back, back.conj())
    out = (out + out.conj().T) / 2

    drift = abs(np.trace(out).real - tr0)
    if drift > TRACE_DRIFT_TOL * max(1.0, abs(tr0)):
        raise ConvergenceError(f"trace drifted by {drift:.3g}; use a smaller phase_step")
    return out


class GRWTrajectory(NamedTuple):
    state: JointState
    hit_count: int
    fallbacks: int


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trajectory_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Independent per-trajectory seed sequences derived from ``(seed, i)``."""
    return [np.random.SeedSequence(seed, spawn_key=(i,)) for i in range(count)]


def draw_hits(rng: np.random.Generator, model: GRW, mirror: MirrorParams):
    """Poisson hit times and the uniforms that will pick each hit center.

    Every random number a trajectory needs is taken here, up front, so
    trajectories can be propagated in batches without touching their
    generators again.
    """
    n = int(rng.poisson(model.expected_hits(mirror)))
    u = rng.random(2 * n)
    return np.sort(u[:n]) * model.duration_s, u[n:]


def propagate_hits(amps: np.ndarray, times: list, uniforms: list, model: GRW, mirror: MirrorParams,
                   ids=None) -> tuple[np.ndarray, int]:
    """Apply pre-drawn GRW hits to a batch of joint states.

    ``amps`` has shape ``(B, 2, dim)`` (branch, mirror level) in the
    co-rotating frame. Hit centers are drawn from the mirror position
    distribution just before each hit (photon branch summed over), on the
    spectrum of the truncated position operator. Hits are processed in
    rounds: round ``r`` updates every trajectory with more than ``r`` hits.
    Returns the new amplitudes and the number of zero-norm fallbacks.
    """
    amps = np.array(amps, dtype=complex)
    batch, _, dim = amps.shape
    counts = np.array([len(t) for t in times])
    if counts.max(initial=0) == 0:
        return amps, 0
    ids = np.arange(batch) if ids is None else np.asarray(ids)
    nodes, vecs = _position_basis(dim)
    x = nodes * mirror.x_zpf
    levels = np.arange(dim)
    inv_two_w2 = 1.0 / (2 * model.width_m ** 2)
    fallbacks = 0
    for r in range(counts.max()):
        sel = np.flatnonzero(counts > r)
        t = np.array([times[b][r] for b in sel])
        u = np.array([uniforms[b][r] for b in sel])
        rot = np.exp(-1j * mirror.omega_rad_s * np.outer(t, levels))[:, None, :]
        coeffs = (amps[sel] * rot) @ vecs  # Schroedinger picture, position basis
        cdf = np.cumsum(np.sum(np.abs(coeffs) ** 2, axis=1), axis=1)
        k = np.minimum(np.sum(cdf <= (u * cdf[:, -1])[:, None], axis=1), dim - 1)
        hit = coeffs * np.exp(-((x[None, :] - x[k][:, None]) ** 2) * inv_two_w2)[:, None, :]
        norm = np.sqrt(np.sum(np.abs(hit) ** 2, axis=(1, 2)))
        for j in np.flatnonzero(norm < 1e-150):
            hit[j], norm[j], used = _resample_hit(coeffs[j], cdf[j], x, inv_two_w2, (int(ids[sel[j]]), r))
            fallbacks += used
        amps[sel] = ((hit / norm[:, None, None]) @ vecs.T) * rot.conj()
    return amps, fallbacks


def _resample_hit(coeffs, cdf, x, inv_two_w2, key):
    rng = np.random.default_rng(np.random.SeedSequence(key[0], spawn_key=(key[1], 7919)))
    for attempt in range(1, MAX_FALLBACKS + 1):
        k = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(x) - 1)
        hit = coeffs * np.exp(-((x - x[k]) ** 2) * inv_two_w2)
        norm = math.sqrt(np.sum(np.abs(hit) ** 2))
        if norm >= 1e-150:
            return hit, norm, attempt
    raise ConvergenceError("GRW hit repeatedly collapsed the state to zero norm")


def grw_trajectory(psi: JointState, model: GRW, mirror: MirrorParams, rng_seed) -> GRWTrajectory:
    """One stochastic GRW history applied to a joint pure state."""
    rng = _as_generator(rng_seed)
    times, uniforms = draw_hits(rng, model, mirror)
    if len(times) == 0:
        return GRWTrajectory(psi, 0, 0)
    amps = np.stack([psi.amp_sym, psi.amp_asym])[None]
    out, fallbacks = propagate_hits(amps, [times], [uniforms], model, mirror)
    return GRWTrajectory(JointState(psi.initial_level, out[0, 0], out[0, 1], psi.trunc_tol), len(times), fallbacks)


def grw_average(psi: JointState, model: GRW, mirror: MirrorParams, n_traj: int, seed: int,
                threads: int = 1) -> np.ndarray:
    """Monte Carlo average of GRW trajectory projectors (joint density operator).

    Trajectory ``i`` uses the seed sequence ``(seed, i)``; the result does
    not depend on ``threads``.
    """
    if n_traj < 1:
        raise InvalidArgumentError("n_traj must be at least 1")
    if model.expected_hits(mirror) == 0:
        return psi.projector()

    draws = [draw_hits(np.random.default_rng(s), model, mirror) for s in trajectory_seeds(seed, n_traj)]
    start = np.stack([psi.amp_sym, psi.amp_asym])
    chunks = [range(i, min(i + CHUNK, n_traj)) for i in range(0, n_traj, CHUNK)]

    def run(chunk):
        amps = np.broadcast_to(start, (len(chunk),) + start.shape)
        out, _ = propagate_hits(amps, [draws[i][0] for i in chunk], [draws[i][1] for i in chunk],
                                model, mirror, ids=list(chunk))
        return out.reshape(len(chunk), -1)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vecs = list(pool.map(run, chunks))
    else:
        vecs = [run(c) for c in chunks]
    mat = np.concatenate(vecs).T
    rho = mat @ mat.conj().T / n_traj
    return (rho + rho.conj().T) / 2
