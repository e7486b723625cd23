"""Required photon-energy resolution versus mirror size.

Keeping the Lamb-Dicke parameter ``eta = (4 pi / lambda) sqrt(hbar / 2 m omega)``
fixed while the mirror mass grows forces the trap frequency down, and the
detector must resolve ``dE = hbar omega`` against the photon energy
``E_p = 2 pi hbar c / lambda``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import C_LIGHT, HBAR, NUCLEON_MASS
from .errors import InvalidArgumentError

DEFAULT_WAVELENGTHS_M = (1e-10, 7e-7)  # x-ray, red
DEFAULT_ETAS = (0.1, 1.0)
COLUMNS = ("n_nucleons", "lambda_m", "eta", "omega_rad_s", "resolution_ratio")


def _positive(**values):
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise InvalidArgumentError(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class FeasibilityPoint:
    n_nucleons: float
    lambda_m: float
    eta: float
    omega_rad_s: float
    resolution_ratio: float

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in COLUMNS)


def omega_from_eta(eta: float, lambda_m: float, mass_kg: float) -> float:
    """Trap frequency giving Lamb-Dicke parameter ``eta`` at wavelength ``lambda_m``."""
    _positive(eta=eta, lambda_m=lambda_m, mass_kg=mass_kg)
    return 8 * math.pi ** 2 * HBAR / (mass_kg * lambda_m ** 2 * eta ** 2)


def eta_from_omega(omega_rad_s: float, lambda_m: float, mass_kg: float) -> float:
    _positive(omega_rad_s=omega_rad_s, lambda_m=lambda_m, mass_kg=mass_kg)
    return 4 * math.pi / lambda_m * math.sqrt(HBAR / (2 * mass_kg * omega_rad_s))


def photon_energy(lambda_m: float) -> float:
    return 2 * math.pi * HBAR * C_LIGHT / lambda_m


def resolution_point(n_nucleons: float, lambda_m: float, eta: float) -> FeasibilityPoint:
    _positive(n_nucleons=n_nucleons)
    omega = omega_from_eta(eta, lambda_m, n_nucleons * NUCLEON_MASS)
    return FeasibilityPoint(n_nucleons, lambda_m, eta, omega, omega * lambda_m / (2 * math.pi * C_LIGHT))


def resolution_curve(n_range, lambda_m: float, eta: float) -> list[FeasibilityPoint]:
    n_range = list(n_range)
    if not n_range:
        raise InvalidArgumentError("n_range must not be empty")
    if any(b <= a for a, b in zip(n_range, n_range[1:])):
        raise InvalidArgumentError("n_range must be strictly increasing")
    return [resolution_point(n, lambda_m, eta) for n in n_range]


def nucleons_for_resolution(target_ratio: float, lambda_m: float, eta: float) -> float:
    """Largest mirror (in nucleons) whose quantum ``hbar omega`` is still ``target_ratio * E_p``."""
    _positive(target_ratio=target_ratio, lambda_m=lambda_m, eta=eta)
    return 4 * math.pi * HBAR / (NUCLEON_MASS * lambda_m * eta ** 2 * C_LIGHT * target_ratio)


def log_grid(start: float, stop: float, per_decade: int = 4) -> list[float]:
    """Logarithmically spaced nucleon counts from ``start`` to ``stop`` inclusive."""
    _positive(start=start, stop=stop)
    lo, hi = math.log10(start), math.log10(stop)
    count = max(2, round((hi - lo) * per_decade) + 1)
    return [10 ** (lo + (hi - lo) * i / (count - 1)) for i in range(count)]
