import math

import numpy as np
import pytest
import scipy.linalg

from mirrorparity.decoherence import (
    GRW,
    Localization,
    NoDecoherence,
    apply_localization,
    grw_average,
    grw_trajectory,
    linear_entropy,
    propagate_hits,
)
from mirrorparity.detection import PostSelection, partial_trace_mirror
from mirrorparity.fock import position_eigensystem
from mirrorparity.errors import ConvergenceError, InvalidArgumentError, InvalidStateError
from mirrorparity.pipeline import run_experiment
from mirrorparity.scattering import JointState, scatter
from mirrorparity.thermal import MirrorParams, boltzmann_ensemble


def loc_for(mirror, strength, duration=1e-4):
    return Localization(strength / (mirror.x_zpf ** 2 * duration), duration)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def liouvillian_oracle(rho, lam, omega, t, x):
    """Exact exp(L t) on the vectorized mirror operator, then rotated to the co-moving frame."""
    dim = rho.shape[0]
    eye = np.eye(dim)
    h = np.diag(omega * np.arange(dim))
    # row-major vec: vec(A rho B) = kron(A, B.T) vec(rho)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    x2 = x @ x
    lv += -lam * (np.kron(x2, eye) - 2 * np.kron(x, x.T) + np.kron(eye, x2.T))
    out = (scipy.linalg.expm(lv * t) @ rho.reshape(-1)).reshape(dim, dim)
    u = np.exp(-1j * omega * t * np.arange(dim))
    return u.conj()[:, None] * out * u[None, :]


def test_zero_strength_is_exact_identity(mirror):
    rho = scatter(0, 0.5, 21).projector()
    assert np.array_equal(apply_localization(rho, Localization(0.0, 1.0), mirror), rho)
    assert np.array_equal(apply_localization(rho, Localization(5.0, 0.0), mirror), rho)


def test_pure_dephasing_two_levels(ground_mirror):
    # truncated x on two levels has eigenvalues -x_zpf, +x_zpf with eigenvectors (|0> -+ |1>)/sqrt 2
    rho = random_density(2, 1)
    model = loc_for(ground_mirror, 0.3)
    out = apply_localization(rho, model, ground_mirror, photon_dim=1, include_hamiltonian=False)
    basis = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)
    before, after = basis.T @ rho @ basis, basis.T @ out @ basis
    factor = math.exp(-model.lambda_loc * (2 * ground_mirror.x_zpf) ** 2 * model.duration_s)
    assert after[0, 1] == pytest.approx(before[0, 1] * factor, abs=1e-14)
    assert np.allclose(np.diag(after), np.diag(before), atol=1e-15)


def test_strang_splitting_matches_liouvillian(ground_mirror):
    dim = 6
    rho = random_density(dim, 2)
    model = loc_for(ground_mirror, 0.2, duration=2e-5)  # omega t = 2
    out = apply_localization(rho, model, ground_mirror, photon_dim=1)
    x = (np.diag(np.sqrt(np.arange(1, dim)), 1) + np.diag(np.sqrt(np.arange(1, dim)), -1)) * ground_mirror.x_zpf
    ref = liouvillian_oracle(rho, model.lambda_loc, ground_mirror.omega_rad_s, model.duration_s, x)
    assert np.max(np.abs(out - ref)) < 1e-4
    finer = apply_localization(rho, model, ground_mirror, photon_dim=1, phase_step=0.005)
    assert np.max(np.abs(finer - ref)) < np.max(np.abs(out - ref)) / 50


def test_trace_and_hermiticity_preserved(mirror):
    rho = scatter(2, 0.5, 30).projector()
    out = apply_localization(rho, loc_for(mirror, 0.1), mirror)
    assert np.trace(out).real == pytest.approx(1, abs=1e-10)
    assert np.max(np.abs(out - out.conj().T)) <= 1e-12


def test_channel_touches_mirror_only(mirror):
    rho = scatter(1, 0.7, 30).projector()
    model = loc_for(mirror, 0.4)
    joint_then_trace = apply_localization(rho, model, mirror)
    mirror_joint = np.einsum("imin->mn", joint_then_trace.reshape(2, 30, 2, 30))
    mirror_first = apply_localization(np.einsum("imin->mn", rho.reshape(2, 30, 2, 30)), model, mirror, photon_dim=1)
    assert np.max(np.abs(mirror_joint - mirror_first)) <= 1e-12
    # photon reduced state is untouched by a mirror-only channel
    assert np.max(np.abs(partial_trace_mirror(joint_then_trace) - partial_trace_mirror(rho))) <= 1e-12


@pytest.mark.parametrize("n", [0, 1, 3])
def test_localization_increases_linear_entropy(mirror, n):
    rho = scatter(n, 0.5, 30).projector()
    prev = linear_entropy(rho)
    for s in (0.01, 0.05, 0.2, 1.0):
        cur = linear_entropy(apply_localization(rho, loc_for(mirror, s), mirror))
        assert cur > prev
        prev = cur


def test_invalid_state_rejected(mirror):
    bad = np.diag([1.5, -0.5, 0, 0]).astype(complex)
    with pytest.raises(InvalidStateError):
        apply_localization(bad, loc_for(mirror, 0.1), mirror)
    with pytest.raises(InvalidStateError):
        apply_localization(np.eye(4) / 2, loc_for(mirror, 0.1), mirror)


def test_too_many_steps_is_convergence_error(mirror):
    rho = scatter(0, 0.5, 21).projector()
    with pytest.raises(ConvergenceError):
        apply_localization(rho, Localization(1.0, 1e3), mirror)


def test_model_validation():
    with pytest.raises(InvalidArgumentError):
        Localization(-1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        GRW(1.0, 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        GRW(float("nan"), 1e-7, 1.0)


def test_grw_zero_rate_unchanged(ground_mirror):
    psi = scatter(0, 0.5, 21)
    traj = grw_trajectory(psi, GRW(0.0, 1e-7, 1.0), ground_mirror, 3)
    assert traj.state is psi and traj.hit_count == 0


def test_grw_wide_gaussian_barely_changes_state(ground_mirror):
    psi = scatter(0, 0.5, 21)
    model = GRW(1.0, 1e3 * ground_mirror.x_zpf, 1e-3)
    start = np.stack([psi.amp_sym, psi.amp_asym])[None]
    out, fallbacks = propagate_hits(start, [np.array([4e-4])], [np.array([0.37])], model, ground_mirror)
    after = JointState.from_vector(0, out[0].reshape(-1))
    fidelity = abs(np.vdot(psi.vector(), after.vector())) ** 2
    assert 1 - fidelity < 1e-6 and fallbacks == 0


def test_grw_mean_hit_count_is_poisson(ground_mirror):
    psi = scatter(0, 0.5, 21)
    model = GRW(2.0 / (1e9 * 1e-3), 3e-11, 1e-3)
    mu = model.expected_hits(ground_mirror)
    hits = [grw_trajectory(psi, model, ground_mirror, s).hit_count for s in range(10_000)]
    assert abs(np.mean(hits) - mu) <= 3 * math.sqrt(mu / len(hits))


def test_grw_trajectory_deterministic_and_normalized(ground_mirror):
    psi = scatter(0, 0.5, 21)
    model = GRW(10 / (1e9 * 1e-3), 3e-11, 1e-3)
    a = grw_trajectory(psi, model, ground_mirror, 11)
    b = grw_trajectory(psi, model, ground_mirror, 11)
    assert np.array_equal(a.state.vector(), b.state.vector()) and a.hit_count == b.hit_count
    assert np.linalg.norm(a.state.vector()) == pytest.approx(1, abs=1e-12)


def test_grw_average_zero_rate_is_projector(ground_mirror):
    psi = scatter(0, 0.5, 21)
    assert np.array_equal(grw_average(psi, GRW(0.0, 1e-7, 1.0), ground_mirror, 50, 1), psi.projector())
    with pytest.raises(InvalidArgumentError):
        grw_average(psi, GRW(0.0, 1e-7, 1.0), ground_mirror, 0, 1)


def position_coherence(rho, dim):
    """Total off-diagonal weight of the mirror state in the position eigenbasis."""
    mirror = np.einsum("imin->mn", rho.reshape(2, dim, 2, dim))
    _, vecs = position_eigensystem(dim)
    r = vecs.T @ mirror @ vecs
    return float(np.sum(np.abs(r - np.diag(np.diag(r)))))


def test_grw_average_coherence_decays_with_hits(ground_mirror):
    psi = scatter(0, 0.5, 21)
    for n_traj in (1000, 10_000):
        prev = position_coherence(psi.projector(), 21)
        for mu in (0.5, 2.0, 8.0):
            model = GRW(mu / (1e9 * 1e-3), 3e-11, 1e-3)
            rho = grw_average(psi, model, ground_mirror, n_traj, seed=5)
            assert np.trace(rho).real == pytest.approx(1, abs=1e-10)
            cur = position_coherence(rho, 21)
            assert cur < prev
            prev = cur


def test_grw_average_independent_of_threads(ground_mirror):
    psi = scatter(1, 0.5, 22)
    model = GRW(5 / (1e9 * 1e-3), 3e-11, 1e-3)
    one = grw_average(psi, model, ground_mirror, 9000, seed=2, threads=1)
    many = grw_average(psi, model, ground_mirror, 9000, seed=2, threads=3)
    assert np.array_equal(one, many)


def test_batched_hits_match_single_trajectory(ground_mirror):
    psi = scatter(0, 0.5, 21)
    model = GRW(6 / (1e9 * 1e-3), 3e-11, 1e-3)
    avg = grw_average(psi, model, ground_mirror, 3, seed=4)
    vecs = [grw_trajectory(psi, model, ground_mirror, np.random.SeedSequence(4, spawn_key=(i,))).state.vector()
            for i in range(3)]
    ref = sum(np.outer(v, v.conj()) for v in vecs) / 3
    assert np.max(np.abs(avg - ref)) < 1e-14


@pytest.mark.parametrize("model", [Localization(0.0, 1.0), GRW(0.0, 1e-7, 1.0), NoDecoherence()])
def test_zero_strength_reproduces_unitary_pipeline(thermal_ensemble, model):
    ref = run_experiment(thermal_ensemble, 0.5, NoDecoherence(), PostSelection())
    got = run_experiment(thermal_ensemble, 0.5, model, PostSelection())
    assert np.max(np.abs(got.photon_rho - ref.photon_rho)) <= 1e-14
    assert got.parity_expectation == ref.parity_expectation


def test_grw_width_default_literature_values():
    model = GRW()
    assert model.rate_per_nucleon_hz == 1e-16 and model.width_m == 1e-7
    assert MirrorParams.from_nucleons(10**9, 1.0).nucleon_count() == 10**9
    assert boltzmann_ensemble(MirrorParams.from_nucleons(10**9, 1.0)).dim == 1
