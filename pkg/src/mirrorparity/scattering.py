"""Photon-mirror scattering: joint state after one photon hits the two-sided mirror.

The photon lives in the two-dimensional parity space {S, AS}. For an initial
mirror level ``n`` the outgoing state is

    cos(k x)|n> (x) |S>  +  i sin(k x)|n> (x) |AS>

so the symmetric branch only carries even level changes and the
antisymmetric branch only odd ones. Joint vectors and matrices are laid
out photon-major: index ``b * dim + m`` with ``b = 0`` for S, ``1`` for AS.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError, TruncationError
from .fock import DEFAULT_TRUNC_TOL, cos_kx, displacement, eta_value, sin_kx
from .thermal import MirrorEnsemble

DEFAULT_PAD = 20
SYM, ASYM = 0, 1


@dataclass(frozen=True)
class JointState:
    initial_level: int
    amp_sym: np.ndarray
    amp_asym: np.ndarray
    trunc_tol: float = DEFAULT_TRUNC_TOL

    def __post_init__(self):
        if self.amp_sym.shape != self.amp_asym.shape or self.amp_sym.ndim != 1:
            raise InvalidArgumentError("branch amplitude vectors must be 1-D and of equal length")

    @property
    def dim(self) -> int:
        return self.amp_sym.shape[0]

    @property
    def norm_loss(self) -> float:
        return 1.0 - float(np.vdot(self.amp_sym, self.amp_sym).real + np.vdot(self.amp_asym, self.amp_asym).real)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.amp_sym, self.amp_asym])

    def projector(self) -> np.ndarray:
        v = self.vector()
        return np.outer(v, v.conj())

    @classmethod
    def from_vector(cls, n: int, vec: np.ndarray, trunc_tol: float = DEFAULT_TRUNC_TOL) -> "JointState":
        dim = vec.shape[0] // 2
        return cls(n, vec[:dim].copy(), vec[dim:].copy(), trunc_tol)


@lru_cache(maxsize=32)
def _branch_operators(eta: float, dim: int):
    return cos_kx(eta, dim).entries, sin_kx(eta, dim).entries


def column_norm_loss(eta, dim: int, levels) -> np.ndarray:
    """``1 - sum_m |<m|exp(i k x)|n>|^2`` over the retained ``m < dim`` for each n."""
    d = displacement(1j * eta_value(eta), dim).entries
    return 1.0 - np.sum(np.abs(d[:, list(levels)]) ** 2, axis=0)


def required_dim(n_max: int, eta, pad: int = DEFAULT_PAD, trunc_tol: float = DEFAULT_TRUNC_TOL) -> int:
    """Smallest basis (on a geometric grid) holding all levels up to ``n_max`` to ``trunc_tol``."""
    dim = n_max + 1 + pad
    levels = range(n_max + 1)
    while column_norm_loss(eta, dim, levels).max() > trunc_tol:
        dim = math.ceil(dim * 1.25) + 1
    return dim


def scatter(n: int, eta, dim: int, pad: int = DEFAULT_PAD, trunc_tol: float = DEFAULT_TRUNC_TOL) -> JointState:
    """Joint photon-mirror state after scattering off initial level ``n``."""
    if n < 0 or int(n) != n:
        raise InvalidArgumentError(f"initial level must be a non-negative integer, got {n!r}")
    n = int(n)
    e = eta_value(eta)
    if n >= dim - pad:
        need = required_dim(n, e, pad, trunc_tol)
        raise TruncationError(f"level {n} too close to the basis edge (dim={dim}, pad={pad}); need dim >= {need}", need)
    c, s = _branch_operators(e, dim)
    state = JointState(n, c[:, n].copy(), 1j * s[:, n], trunc_tol)
    if state.norm_loss > trunc_tol:
        need = required_dim(n, e, pad, trunc_tol)
        raise TruncationError(f"norm loss {state.norm_loss:.3g} for level {n} exceeds {trunc_tol:g}; need dim >= {need}", need)
    return state


def transition_probabilities(n: int, eta, dim: int, pad: int = DEFAULT_PAD, trunc_tol: float = DEFAULT_TRUNC_TOL):
    """``(even_probs, odd_probs)``: ``P(n -> m)`` on the S and AS branches."""
    st = scatter(n, eta, dim, pad, trunc_tol)
    return np.abs(st.amp_sym) ** 2, np.abs(st.amp_asym) ** 2


def working_dim(ensemble: MirrorEnsemble, eta, pad: int = DEFAULT_PAD, trunc_tol: float = DEFAULT_TRUNC_TOL) -> int:
    """Mirror basis size able to hold every scattered level of the ensemble."""
    return required_dim(int(ensemble.levels.max()), eta, pad, trunc_tol)


def level_states(ensemble: MirrorEnsemble, eta, dim: int | None = None, pad: int = DEFAULT_PAD,
                 trunc_tol: float = DEFAULT_TRUNC_TOL) -> list[JointState]:
    if dim is None:
        dim = working_dim(ensemble, eta, pad, trunc_tol)
    return [scatter(n, eta, dim, pad, trunc_tol) for n in ensemble.levels]


def joint_density_matrix(ensemble: MirrorEnsemble, eta, dim: int | None = None, pad: int = DEFAULT_PAD,
                         trunc_tol: float = DEFAULT_TRUNC_TOL) -> np.ndarray:
    """Thermal mixture ``sum_n l_n |Omega_n><Omega_n|`` on the 2*dim joint space."""
    states = level_states(ensemble, eta, dim, pad, trunc_tol)
    psi = np.stack([st.vector() for st in states], axis=1) * np.sqrt(ensemble.probabilities)
    return psi @ psi.conj().T
