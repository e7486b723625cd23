"""Parity-interferometry simulator for a harmonically trapped, thermal movable mirror."""

from .decoherence import GRW, Localization, NoDecoherence, apply_localization, grw_average, grw_trajectory
from .detection import (
    ClickRecord,
    PostSelection,
    partial_trace_mirror,
    photon_parity_expectation,
    post_select,
    simulate_clicks,
)
from .feasibility import nucleons_for_resolution, omega_from_eta, resolution_curve
from .fock import (
    FockOperator,
    LambDicke,
    cos_kx,
    displacement,
    ladder_lowering,
    parity_operator,
    sin_kx,
)
from .pipeline import run_experiment
from .scattering import JointState, joint_density_matrix, scatter, transition_probabilities
from .thermal import MirrorEnsemble, MirrorParams, boltzmann_ensemble

__version__ = "0.1.0"
