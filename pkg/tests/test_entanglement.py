import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilocal.entanglement import (
    SweepGrid,
    adiabatic_negativity,
    closed_form_c,
    closed_form_negativity,
    closed_form_steady,
    epr_max_real_eigenvalue,
    grid_optimum,
    log_negativity,
    negativity_from_nu,
    nu_closed_form,
    numeric_negativity,
    numeric_steady,
    optimal_params,
    sweep,
)
from quasilocal.errors import InvalidInput, NoInteriorOptimum, OutOfModel
from quasilocal.gaussian import two_mode_squeezed_covariance, vacuum

from conftest import maxabs


def test_vacuum_has_no_negativity():
    rep = log_negativity(vacuum(2))
    assert rep.nu == pytest.approx(0.5)
    assert rep.E_N == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("r", [0.1, 0.5, 0.8, 0.99])
def test_two_mode_squeezed_negativity(r):
    xi = np.arctanh(r)
    rep = log_negativity(two_mode_squeezed_covariance(xi))
    assert rep.nu == pytest.approx(np.exp(-2 * xi) / 2, rel=1e-10)
    assert rep.E_N == pytest.approx(2 * xi, rel=1e-10)


def test_negativity_clamped_at_zero():
    assert negativity_from_nu(0.7) == 0.0
    assert np.array_equal(negativity_from_nu(np.array([0.5, 2.0])), [0.0, 0.0])
    assert negativity_from_nu(0.25) == pytest.approx(np.log(2))


def test_log_negativity_shape_check():
    with pytest.raises(InvalidInput):
        log_negativity(np.eye(2))


def test_closed_form_reduces_to_ideal_state():
    r = 0.8
    for kappa in (0.3, 1.0, 5.0):
        assert nu_closed_form(kappa, 0.0, r) == pytest.approx((1 - r) / (2 * (1 + r)))
        V = closed_form_steady(kappa, 0.0, r)
        assert maxabs(V - two_mode_squeezed_covariance(np.arctanh(r))) < 1e-12


def test_closed_form_r_zero_is_vacuum():
    assert closed_form_c(1.0, 0.1, 0.0) == 0.0
    assert np.array_equal(closed_form_steady(1.0, 0.1, 0.0), vacuum(2))


def test_decohered_reference_point():
    assert nu_closed_form(0.523, 0.01, 0.9652) == pytest.approx(0.0271, abs=2e-4)
    assert closed_form_negativity(0.523, 0.01, 0.9652) == pytest.approx(2.91, abs=0.01)


def test_closed_form_rejects_bad_rates():
    with pytest.raises(InvalidInput):
        nu_closed_form(0.0, 0.1, 0.5)
    with pytest.raises(InvalidInput):
        nu_closed_form(1.0, 0.1, 1.0)


def test_random_triples_match_lyapunov():
    rng = np.random.default_rng(50)
    for _ in range(50):
        kappa, gamma, r = rng.uniform(0.05, 5), rng.uniform(0, 1), rng.uniform(0, 0.99)
        V = numeric_steady(kappa, gamma, r)
        assert maxabs(V - closed_form_steady(kappa, gamma, r)) < 1e-9
        assert log_negativity(V).nu == pytest.approx(nu_closed_form(kappa, gamma, r), abs=1e-8)


def test_routes_agree_on_full_model():
    Vs = numeric_steady(0.7, 0.05, 0.9, method="schur")
    Vk = numeric_steady(0.7, 0.05, 0.9, method="kron")
    assert maxabs(Vs - Vk) < 1e-10


def test_ideal_spectrum_bound():
    assert epr_max_real_eigenvalue(1.0, 0.8) == pytest.approx(-0.25)
    # real branch: kappa^2 > 16 (1 - r^2)
    k, r = 3.0, 0.8
    assert epr_max_real_eigenvalue(k, r) == pytest.approx((-k + np.sqrt(k * k - 16 * (1 - r * r))) / 4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5), st.floats(0, 0.99), st.floats(0, 1), st.floats(0.001, 0.5))
def test_negativity_decreases_with_gamma(kappa, r, gamma, dg):
    e1 = closed_form_negativity(kappa, gamma, r)
    e2 = closed_form_negativity(kappa, gamma + dg, r)
    assert e1 >= 0 and e2 >= 0
    assert e2 <= e1 + 1e-12


def test_monotonicity_on_lattice():
    ks = np.linspace(0.05, 3.0, 20)
    rs = np.linspace(0.05, 0.99, 20)
    K, R = np.meshgrid(ks, rs)
    E = [closed_form_negativity(K, g, R) for g in (0.0, 0.01, 0.1)]
    assert np.all(E[1] <= E[0] + 1e-12) and np.all(E[2] <= E[1] + 1e-12)


def test_optimal_params_reference():
    r, k = optimal_params(0.01)
    assert r == pytest.approx(0.9651000, abs=1e-6)
    assert k == pytest.approx(0.5237635, abs=1e-6)
    assert k == pytest.approx(2 * np.sqrt(1 - r * r))
    assert closed_form_negativity(k, 0.01, r) == pytest.approx(2.914715, abs=1e-5)


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_optimum_matches_grid_search(gamma):
    r, k = optimal_params(gamma)
    # keep the r cells fine: along the ridge one r cell moves kappa by several kappa cells
    gr, gk, ge, dr, dk = grid_optimum(gamma, r_range=(0.5, 0.999), kappa_range=(0.05, 3.0))
    assert abs(gr - r) <= dr and abs(gk - k) <= dk
    assert closed_form_negativity(k, gamma, r) >= ge - 1e-12


@pytest.mark.parametrize("gamma", [0.01, 0.1, 1.0])
def test_optimum_is_stationary(gamma):
    r, k = optimal_params(gamma)
    h = 1e-5
    gr = (closed_form_negativity(k, gamma, r + h) - closed_form_negativity(k, gamma, r - h)) / (2 * h)
    gk = (closed_form_negativity(k + h, gamma, r) - closed_form_negativity(k - h, gamma, r)) / (2 * h)
    assert np.hypot(gr, gk) < 1e-4


def test_optimal_params_domain():
    with pytest.raises(NoInteriorOptimum):
        optimal_params(0.0)
    with pytest.raises(OutOfModel):
        optimal_params(2.0)


def test_adiabatic_model_overestimates():
    r = 0.9
    for kappa in (0.6, 2.0):
        a = adiabatic_negativity(kappa, 0.01, r)
        f = numeric_negativity(kappa, 0.01, r)
        assert a > f > 0


def test_full_model_decays_with_kappa():
    r, _ = optimal_params(0.01)
    es = [numeric_negativity(k, 0.01, r) for k in (2.0, 5.0, 10.0, 100.0)]
    assert es == pytest.approx([2.4185, 1.767, 1.270, 0.2375], abs=1e-3)


def test_gamma_zero_sweep_is_flat_in_kappa():
    table = sweep(SweepGrid((0.1, 2.0, 10), (0.1, 3.0, 10)))
    assert np.all(table.status == "ok")
    assert maxabs(table.E_N - 2 * table.xi) < 1e-10


def test_sweep_routes_agree():
    grid = SweepGrid((0.2, 2.5, 6), (0.2, 3.0, 6), gamma=0.05)
    a, b = sweep(grid, "closed"), sweep(grid, "numeric")
    assert maxabs(a.E_N - b.E_N) < 1e-8
    assert np.array_equal(a.status, b.status)


def test_sweep_marks_unstable_points():
    grid = SweepGrid((1.0, 25.0, 3), (0.5, 1.0, 2), gamma=0.0)
    table = sweep(grid)
    bad = table.status == "unstable"
    assert bad.any() and np.all(np.isnan(table.E_N[bad]))
    assert np.all(np.isfinite(table.E_N[~bad]))
    assert table.status[table.argmax()] == "ok"


def test_sweep_numeric_for_mismatched_coupling():
    grid = SweepGrid((1.5, 2.5, 4), (0.8, 1.8, 4), gamma=0.01, epsilon=np.sqrt(1.1))
    table = sweep(grid)
    assert np.all(table.E_N < 2.45)
    with pytest.raises(InvalidInput):
        sweep(grid, "closed")


def test_sweep_csv_and_row_order():
    table = sweep(SweepGrid((0.5, 1.0, 2), (1.0, 2.0, 3), gamma=0.01))
    assert list(table.xi) == [0.5, 0.5, 0.5, 1.0, 1.0, 1.0]
    buf = io.StringIO()
    table.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "xi,kappa,E_N,status"
    assert len(lines) == 7 and lines[1].endswith(",ok")


def test_sweep_grid_validation():
    with pytest.raises(InvalidInput):
        SweepGrid((0.5, 1.0, 1), (1.0, 2.0, 3))
    with pytest.raises(InvalidInput):
        SweepGrid((0.5, 1.0, 3), (-1.0, 2.0, 3))
