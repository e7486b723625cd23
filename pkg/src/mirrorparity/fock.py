"""Operators on a truncated harmonic-oscillator (Fock) basis.

All matrices are indexed ``[m, n] = <m|A|n>`` with ``m, n = 0 .. dim-1``.
The position operator is measured in units of the zero-point spread
``x_zpf = sqrt(hbar / 2 m omega)``, so that ``x / x_zpf = a + a^dagger`` and
``k x = eta (a + a^dagger)`` for a Lamb-Dicke parameter ``eta = k x_zpf``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import InvalidArgumentError, InvalidDimensionError

DEFAULT_TRUNC_TOL = 1e-10
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on a truncated Fock basis.

    ``trunc_tol`` records the largest truncation artifact the operator is
    allowed to carry; ``hermitian`` and ``diagonal`` are declarations that
    are checked on construction.
    """

    entries: np.ndarray
    trunc_tol: float = DEFAULT_TRUNC_TOL
    hermitian: bool = False
    diagonal: bool = False
    name: str = field(default="", compare=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {entries.shape}")
        if self.trunc_tol < 0:
            raise InvalidArgumentError("trunc_tol must be non-negative")
        if self.hermitian:
            err = np.max(np.abs(entries - entries.conj().T), initial=0.0)
            if err > HERMITIAN_TOL:
                raise InvalidArgumentError(f"{self.name or 'operator'} is not Hermitian (err={err:.3g})")
        if self.diagonal and np.count_nonzero(entries - np.diag(np.diag(entries))):
            raise InvalidArgumentError(f"{self.name or 'operator'} has off-diagonal entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self.entries

    def dag(self) -> "FockOperator":
        return FockOperator(self.entries.conj().T, self.trunc_tol, self.hermitian, self.diagonal)


@dataclass(frozen=True)
class LambDicke:
    """Lamb-Dicke parameter of the total momentum transfer, ``eta = k_delta * x_zpf``."""

    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise InvalidArgumentError(f"Lamb-Dicke parameter must be finite and positive, got {self.eta!r}")

    @classmethod
    def from_wavelength(cls, lambda_m: float, x_zpf_m: float, geometry_factor: float = 2.0) -> "LambDicke":
        """Build eta from the optical wavelength.

        ``geometry_factor`` is ``|k1 + k2| / k`` for incoming/outgoing wave
        vectors of magnitude ``k = 2 pi / lambda``; 2 is normal retro-reflection,
        giving ``eta = (4 pi / lambda) x_zpf``.
        """
        if not (0 < geometry_factor <= 2):
            raise InvalidArgumentError("geometry_factor must lie in (0, 2]")
        if not (lambda_m > 0 and x_zpf_m > 0):
            raise InvalidArgumentError("wavelength and x_zpf must be positive")
        return cls(geometry_factor * (2 * math.pi / lambda_m) * x_zpf_m)


def eta_value(eta) -> float:
    """Accept a :class:`LambDicke` or a bare non-negative float."""
    value = eta.eta if isinstance(eta, LambDicke) else float(eta)
    if not (math.isfinite(value) and value >= 0):
        raise InvalidArgumentError(f"invalid Lamb-Dicke parameter {eta!r}")
    return value


def _check_dim(dim, minimum):
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < minimum:
        raise InvalidDimensionError(f"dim must be an integer >= {minimum}, got {dim!r}")


def ladder_lowering(dim: int) -> FockOperator:
    _check_dim(dim, 2)
    return FockOperator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1), name="a")


def position_quadrature(dim: int) -> FockOperator:
    """``a + a^dagger``, i.e. position in units of ``x_zpf``."""
    _check_dim(dim, 2)
    off = np.sqrt(np.arange(1, dim, dtype=float))
    return FockOperator(np.diag(off, 1) + np.diag(off, -1), hermitian=True, name="x")


def position_eigensystem(dim: int):
    """Eigenvalues and eigenvectors (columns) of the truncated ``a + a^dagger``.

    The eigenvalues are the Gauss-Hermite nodes scaled by sqrt(2).
    """
    _check_dim(dim, 2)
    nodes, vecs = eigh_tridiagonal(np.zeros(dim), np.sqrt(np.arange(1, dim, dtype=float)))
    return nodes, vecs


def _displacement_magnitudes(x: float, dim: int) -> np.ndarray:
    """``g[k, a] = sqrt(k!/(k+a)!) x^(a/2) e^(-x/2) L_k^(a)(x)`` for ``x = |alpha|^2``.

    Three-term Laguerre recurrence run directly on the normalized quantity;
    the starting row is formed in log space so no factorial ever overflows.
    """
    a = np.arange(dim, dtype=float)
    g = np.zeros((dim, dim))
    g[0] = np.exp(-0.5 * x + 0.5 * a * math.log(x) - 0.5 * gammaln(a + 1))
    prev = np.zeros(dim)
    for k in range(dim - 1):
        nxt = ((2 * k + 1 + a - x) * g[k] - np.sqrt(k * (k + a)) * prev) / np.sqrt((k + 1) * (k + 1 + a))
        prev = g[k]
        g[k + 1] = nxt
    return g


def _unit_powers(u: complex, count: int) -> np.ndarray:
    # repeated multiplication keeps powers of +-1, +-1j exact
    out = np.empty(count, dtype=complex)
    out[0] = 1.0
    for i in range(1, count):
        out[i] = out[i - 1] * u
    return out


def displacement(alpha: complex, dim: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> FockOperator:
    """Displacement operator ``D(alpha) = exp(alpha a^dagger - alpha^* a)``.

    Entries are the exact (untruncated) matrix elements, so cropping to
    ``dim`` introduces no error in the retained block.
    """
    _check_dim(dim, 2)
    alpha = complex(alpha)
    if not cmath.isfinite(alpha):
        raise InvalidArgumentError(f"alpha must be finite, got {alpha!r}")
    if alpha == 0:
        return FockOperator(np.eye(dim), trunc_tol, name="D(0)")

    r = abs(alpha)
    u = alpha / r
    g = _displacement_magnitudes(r * r, dim)
    lower = _unit_powers(u, dim)  # alpha^(m-n) phase, m >= n
    upper = _unit_powers(-u.conjugate(), dim)  # (-alpha^*)^(n-m) phase, m < n

    m, n = np.indices((dim, dim))
    shift = np.abs(m - n)
    mags = g[np.minimum(m, n), shift]
    phases = np.where(m >= n, lower[shift], upper[shift])
    return FockOperator(phases * mags, trunc_tol, name=f"D({alpha})")


def cos_kx(eta, dim: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> FockOperator:
    """``cos(eta (a + a^dagger))``; couples only levels with ``m + n`` even."""
    e = eta_value(eta)
    plus = displacement(1j * e, dim).entries
    minus = displacement(-1j * e, dim).entries
    return FockOperator((plus + minus) / 2, trunc_tol, hermitian=True, name="cos(kx)")


def sin_kx(eta, dim: int, trunc_tol: float = DEFAULT_TRUNC_TOL) -> FockOperator:
    """``sin(eta (a + a^dagger))``; couples only levels with ``m + n`` odd."""
    e = eta_value(eta)
    plus = displacement(1j * e, dim).entries
    minus = displacement(-1j * e, dim).entries
    return FockOperator((plus - minus) / 2j, trunc_tol, hermitian=True, name="sin(kx)")


def parity_operator(dim: int) -> FockOperator:
    """Oscillator parity, eigenvalue ``(-1)^n`` on ``|n>``."""
    _check_dim(dim, 1)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    return FockOperator(np.diag(signs), 0.0, hermitian=True, diagonal=True, name="P")
