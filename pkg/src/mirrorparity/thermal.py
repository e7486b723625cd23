"""Thermal initial state of the trapped mirror."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_B, NUCLEON_MASS
from .errors import InvalidArgumentError, TruncationError

DEFAULT_TAIL_TOL = 1e-10
MAX_THERMAL_DIM = 5000


@dataclass(frozen=True)
class MirrorParams:
    mass_kg: float
    omega_rad_s: float
    temperature_K: float = 0.0
    n_nucleons: int | None = None

    def __post_init__(self):
        for name in ("mass_kg", "omega_rad_s", "temperature_K"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
        if self.mass_kg <= 0 or self.omega_rad_s <= 0:
            raise InvalidArgumentError("mass_kg and omega_rad_s must be positive")
        if self.temperature_K < 0:
            raise InvalidArgumentError("temperature_K must be non-negative")
        if self.n_nucleons is not None and self.n_nucleons < 1:
            raise InvalidArgumentError("n_nucleons must be a positive integer")
        if not (math.isfinite(self.x_zpf) and self.x_zpf > 0):
            raise InvalidArgumentError("zero-point spread is not finite")

    @classmethod
    def from_nucleons(cls, n_nucleons: int, omega_rad_s: float, temperature_K: float = 0.0) -> "MirrorParams":
        return cls(n_nucleons * NUCLEON_MASS, omega_rad_s, temperature_K, int(n_nucleons))

    @property
    def x_zpf(self) -> float:
        """Ground-state position spread sqrt(hbar / 2 m omega), in meters."""
        return math.sqrt(HBAR / (2 * self.mass_kg * self.omega_rad_s))

    @property
    def quantum_over_kT(self) -> float:
        """hbar omega / k_B T (``inf`` at zero temperature)."""
        if self.temperature_K == 0:
            return math.inf
        return HBAR * self.omega_rad_s / (K_B * self.temperature_K)

    def nucleon_count(self) -> float:
        return self.n_nucleons if self.n_nucleons is not None else self.mass_kg / NUCLEON_MASS


@dataclass(frozen=True)
class MirrorEnsemble:
    """Occupation weights ``l_n`` of the initial mirror levels ``n = 0 .. dim-1``."""

    params: MirrorParams
    weights: tuple  # ((n, l_n), ...)
    dim: int

    @property
    def levels(self) -> np.ndarray:
        return np.array([n for n, _ in self.weights], dtype=int)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([w for _, w in self.weights], dtype=float)

    def mean_occupation(self) -> float:
        return float(np.dot(self.levels, self.probabilities))


def tail_dim(ratio: float, tail_tol: float) -> int:
    """Smallest N with Boltzmann tail probability ``exp(-N ratio) < tail_tol``."""
    return max(1, math.floor(-math.log(tail_tol) / ratio) + 1)


def boltzmann_ensemble(params: MirrorParams, tail_tol: float = DEFAULT_TAIL_TOL) -> MirrorEnsemble:
    """Normalized geometric weights ``l_n ∝ exp(-n hbar omega / k_B T)``.

    The zero-point factor ``exp(-hbar omega / 2 k_B T)`` is common to every
    level and drops out on normalization.
    """
    if not (0 < tail_tol < 1):
        raise InvalidArgumentError(f"tail_tol must lie in (0, 1), got {tail_tol!r}")
    ratio = params.quantum_over_kT
    if math.isinf(ratio):
        return MirrorEnsemble(params, ((0, 1.0),), 1)

    dim = tail_dim(ratio, tail_tol)
    if dim > MAX_THERMAL_DIM:
        raise TruncationError(
            f"thermal state needs {dim} levels (k_B T / hbar omega = {1 / ratio:.3g}); "
            f"limit is {MAX_THERMAL_DIM}",
            required_dim=dim,
        )
    n = np.arange(dim)
    w = np.exp(-ratio * n)
    w /= w.sum()
    return MirrorEnsemble(params, tuple(zip(n.tolist(), w.tolist())), dim)


def bose_einstein_occupation(params: MirrorParams) -> float:
    ratio = params.quantum_over_kT
    return 0.0 if math.isinf(ratio) else 1.0 / math.expm1(ratio)
