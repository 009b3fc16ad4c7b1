import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilocal.entanglement import closed_form_steady, log_negativity
from quasilocal.errors import InvalidInput, NoUniqueSteadyState
from quasilocal.gaussian import (
    ComplexCoupling,
    purity,
    squeezed_covariance,
    symplectic_form,
    two_mode_squeezed_covariance,
    vacuum,
)
from quasilocal.lyapunov import solve_lyapunov
from quasilocal.systems import (
    EprParams,
    ExtendedSystem,
    TargetSystem,
    build_adiabatic_target,
    build_epr_coupling,
    build_extended_drift,
    build_perturbed_epr,
    build_target_drift,
    check_theorem1,
    check_theorem2,
    epr_extended,
    epr_state,
    epr_target,
    kernel_coupling,
    random_pure_target,
    target_steady_state,
    with_damping,
)

from conftest import maxabs

# single-mode squeezer coupling mu (a + r a^dag), written in quadratures
R = 0.8
SQUEEZER_C = np.array([[1 + R, 1j * (1 - R)]]) / np.sqrt(2)


def vacuum_damping(n):
    return ComplexCoupling.from_ladder(np.eye(n), np.zeros((n, n)))


def test_target_drift_of_zero_coupling():
    A1, B1 = build_target_drift(TargetSystem.from_coupling(ComplexCoupling.zeros(1, 2)))
    assert not A1.any() and not B1.any()


def test_squeezer_target_steady_state():
    sys = TargetSystem.from_coupling(SQUEEZER_C)
    V = target_steady_state(sys)
    assert maxabs(V - squeezed_covariance(np.arctanh(R))) < 1e-12


def test_epr_coupling_matrix():
    r = 0.8
    C = build_epr_coupling(EprParams(r)).C
    ref = np.array([[1, r, 1j, -1j * r], [r, 1, -1j * r, 1j]]) / np.sqrt(2)
    assert maxabs(1j * C - ref) < 1e-15


def test_epr_coupling_epsilon_scales_second_ensemble():
    r, e = 0.7, 1.3
    C = build_epr_coupling(EprParams(r, epsilon=e)).C
    s = np.sqrt(2)
    # row 1: a1 + e r a2^dag ; row 2: r a1^dag + e a2
    ref = np.array([
        [1 / s, e * r / s, 1j / s, -1j * e * r / s],
        [r / s, e / s, -1j * r / s, 1j * e / s],
    ])
    assert maxabs(1j * C - ref) < 1e-15


def test_extended_drift_structure():
    kappa = 2.0
    ext = ExtendedSystem(TargetSystem.from_coupling(SQUEEZER_C), kappa)
    A, B = build_extended_drift(ext)
    cb = ext.target.coupling.cbar
    S = symplectic_form(1)
    assert np.allclose(A[:2, 2:], S @ cb.T)
    assert np.allclose(A[2:, :2], S @ cb)
    assert np.allclose(A[2:, 2:], -kappa / 2 * np.eye(2))
    assert np.allclose(B, -np.vstack([np.zeros((2, 2)), np.sqrt(kappa) * np.eye(2)]))

    A_g, B_g = build_extended_drift(ExtendedSystem(ext.target, kappa, gamma=0.1))
    assert np.allclose(A_g[:2, :2], -0.05 * np.eye(2))
    assert np.allclose(B_g, np.diag([np.sqrt(0.1)] * 2 + [np.sqrt(kappa)] * 2))


def test_zero_coupling_relaxes_auxiliary_only():
    ext = ExtendedSystem(TargetSystem.from_coupling(ComplexCoupling.zeros(1, 1)), 1.0)
    A, B = build_extended_drift(ext)
    assert np.allclose(A, np.diag([0, 0, -0.5, -0.5]))
    with pytest.raises(NoUniqueSteadyState):
        check_theorem2(ext)


def test_theorem1_epr():
    cert = check_theorem1(None, epr_target(EprParams(0.8)))
    assert cert.passed
    assert cert.kernel_residual < 1e-10 and cert.hamiltonian_residual < 1e-10
    assert cert.purity == pytest.approx(1.0, abs=1e-10)


def test_theorem1_zero_coupling_raises():
    with pytest.raises(NoUniqueSteadyState):
        check_theorem1(None, TargetSystem.from_coupling(ComplexCoupling.zeros(1, 1)))


def test_theorem1_detects_incompatible_hamiltonian(rng):
    sys = epr_target(EprParams(0.8))
    M = rng.normal(size=(4, 4)) * 0.05
    G = M + M.T
    cert = check_theorem1(two_mode_squeezed_covariance(np.arctanh(0.8)), TargetSystem(G, sys.coupling))
    assert not cert.passed
    assert cert.hamiltonian_residual > 1e-4


def test_theorem1_epsilon_mismatch_breaks_purity():
    cert = check_theorem1(None, epr_target(EprParams(0.8, epsilon=np.sqrt(1.1))))
    assert not cert.passed
    assert cert.kernel_residual > 1e-3
    assert cert.purity < 0.99


@pytest.mark.parametrize("kappa", [0.3, 1.0, 4.0])
def test_theorem2_epr(kappa):
    cert = check_theorem2(epr_extended(EprParams(0.8, kappa)))
    assert cert.passed and cert.applicable
    assert max(cert.offdiag_residual, cert.auxiliary_residual, cert.target_residual) < 1e-10


def test_theorem2_single_mode_squeezer():
    cert = check_theorem2(ExtendedSystem(TargetSystem.from_coupling(SQUEEZER_C), 1.0))
    assert cert.passed
    assert maxabs(cert.V[:2, :2] - squeezed_covariance(np.arctanh(R))) < 1e-10


def test_theorem2_with_compatible_hamiltonian():
    # oscillator Hamiltonian omega (q^2 + p^2)/2 leaves the vacuum invariant
    sys = TargetSystem(1.7 * np.eye(4), vacuum_damping(2))
    cert = check_theorem2(ExtendedSystem(sys, 0.8))
    assert cert.theorem1.passed and cert.passed
    assert maxabs(cert.V1 - vacuum(2)) < 1e-12


def test_theorem2_not_applicable_for_mixed_target():
    cert = check_theorem2(epr_extended(EprParams(0.8, epsilon=np.sqrt(1.1))))
    assert not cert.applicable
    assert not cert.passed
    assert cert.notes


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.floats(0.2, 5.0), st.integers(0, 2**32 - 1))
def test_theorem2_random_pure_targets(n, kappa, seed):
    sys, V = random_pure_target(n, np.random.default_rng(seed))
    assert maxabs(target_steady_state(sys) - V) < 1e-8
    cert = check_theorem2(ExtendedSystem(sys, kappa), tol=1e-7)
    assert cert.passed


def test_kernel_coupling_rejects_mixed_state():
    with pytest.raises(InvalidInput):
        kernel_coupling(np.eye(2))


def test_steady_state_invariant_under_coupling_rescaling():
    sys = epr_target(EprParams(0.6))
    V = target_steady_state(sys)
    V3 = target_steady_state(TargetSystem(sys.G, sys.coupling.scaled(3.0)))
    assert maxabs(V - V3) < 1e-12


def test_r_zero_gives_vacuum():
    V = epr_state(EprParams(0.0, 1.0)).cov
    assert maxabs(V - vacuum(2)) < 1e-12
    assert log_negativity(V).E_N == pytest.approx(0.0, abs=1e-12)


def test_epr_params_validation_and_normalisation():
    with pytest.raises(InvalidInput):
        EprParams(1.0)
    with pytest.raises(InvalidInput):
        EprParams(0.5, kappa=0.0)
    with pytest.raises(InvalidInput):
        EprParams(0.5, gamma=-1.0)
    q = EprParams(0.5, kappa=2.0, gamma=0.2, mu=2.0).normalized()
    assert (q.kappa, q.gamma, q.mu) == (1.0, 0.1, 1.0)
    assert epr_state(EprParams(0.5, 2.0, 0.2, mu=2.0)).cov == pytest.approx(epr_state(EprParams(0.5, 1.0, 0.1)).cov)


def test_perturbed_model_reduces_to_ideal_extended():
    p = EprParams(0.8, 1.5)
    A, B = build_extended_drift(epr_extended(p))
    Ap, Bp = build_perturbed_epr(p)
    assert np.allclose(A, Ap)
    assert np.allclose(B @ B.T, Bp @ Bp.T)
    V = solve_lyapunov(Ap, Bp @ Bp.T / 2)
    assert purity(V[:4, :4]) == pytest.approx(1.0, abs=1e-10)
    assert log_negativity(V[:4, :4]).E_N == pytest.approx(2 * p.xi, abs=1e-10)


@pytest.mark.parametrize("r,kappa,gamma", [(0.5, 1.0, 0.05), (0.9, 0.4, 0.01), (0.97, 2.5, 0.3)])
def test_perturbed_model_matches_closed_form(r, kappa, gamma):
    V = epr_state(EprParams(r, kappa, gamma)).cov
    assert maxabs(V - closed_form_steady(kappa, gamma, r)) < 1e-10


def test_decohered_optimum_negativity():
    V = epr_state(EprParams(0.9652, 0.523, 0.01)).cov
    assert log_negativity(V).E_N == pytest.approx(2.91, abs=0.01)


def test_with_damping_adds_uniform_relaxation():
    sys = epr_target(EprParams(0.8))
    gamma = 0.3
    A1, B1 = build_target_drift(sys)
    A1d, B1d = build_target_drift(with_damping(sys, gamma))
    assert maxabs(A1d - (A1 - gamma / 2 * np.eye(4))) < 1e-14
    assert maxabs(B1d @ B1d.T - (B1 @ B1.T + gamma * np.eye(4))) < 1e-14
    assert with_damping(sys, 0.0) is sys
    with pytest.raises(InvalidInput):
        with_damping(sys, -1.0)


def test_adiabatic_rescaling():
    sys = epr_target(EprParams(0.8))
    assert maxabs(build_adiabatic_target(sys, 4.0).C - sys.C) < 1e-15
    assert maxabs(build_adiabatic_target(sys, 1.0).C - 2 * sys.C) < 1e-15
    with pytest.raises(InvalidInput):
        build_adiabatic_target(sys, 0.0)


def test_target_system_validation():
    with pytest.raises(InvalidInput):
        TargetSystem(np.ones((2, 2)) + np.diag([0, 1]) @ np.ones((2, 2)), ComplexCoupling(SQUEEZER_C))
    with pytest.raises(InvalidInput):
        TargetSystem(np.zeros((4, 4)), ComplexCoupling(SQUEEZER_C))
    with pytest.raises(InvalidInput):
        ExtendedSystem(TargetSystem.from_coupling(SQUEEZER_C), kappa=-1.0)
