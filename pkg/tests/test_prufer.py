import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starkprufer.prufer import (
    GridError,
    PruferState,
    approx_increments,
    build_resonance_grid,
    coupling_U,
    exact_increments,
    initial_state,
    run_prufer,
    run_prufer_python,
    sampling_points,
    slow_variables,
    step_approx,
    step_exact,
)
from starkprufer.special import ModelParams, ReferenceSolution

angles = st.floats(-10, 10, allow_nan=False)


def test_coupling_U_values(rs_unit):
    assert coupling_U(rs_unit, 5, 0.0) == 0.0
    assert coupling_U(rs_unit, 10_000, 1.0) == pytest.approx(0.01, abs=1e-4)
    n = np.geomspace(100, 1e5, 20).round()
    resid = np.abs(coupling_U(rs_unit, n, 1.0) - 1 / np.sqrt(n)) * n**1.5
    assert resid.max() < 1.0
    with pytest.raises(ValueError):
        coupling_U(rs_unit, 0, 1.0)


def test_step_exact_zero_coupling(rs_unit):
    s = PruferState(7, 0.3, 1.1)
    t = step_exact(s, 0.0, rs_unit)
    assert (t.logR, t.eta, t.n) == (0.3, 1.1, 8)


@given(st.floats(-3, 3), angles)
def test_exact_radius_identity(U, th):
    dlog, deta = exact_increments(U, th)
    w = 1 + U * math.sin(th) * complex(math.cos(th), -math.sin(th))
    assert math.exp(2 * dlog) == pytest.approx(abs(w) ** 2, rel=1e-12, abs=1e-15)
    assert -math.pi < deta <= math.pi
    assert deta == pytest.approx(math.atan2(w.imag, w.real), abs=1e-12)


def test_exact_vs_approx_cubic():
    U = np.linspace(-0.3, 0.3, 241)[:, None]
    th = np.linspace(0, 2 * math.pi, 400)[None, :]
    e = np.array(exact_increments(U, th))
    a = np.array(approx_increments(U, th))
    mask = np.abs(U[:, 0]) > 1e-3
    err = np.max(np.abs(e - a), axis=(0, 2))[mask]
    C = np.max(err / np.abs(U[mask, 0]) ** 3)
    assert C <= 2.0


@given(st.floats(-1, 1), angles)
def test_eta_jump_bound(U, th):
    assert abs(exact_increments(U, th)[1]) <= math.pi / 2 * abs(U) + 1e-15


def test_step_approx_domain(rs_unit):
    s = PruferState(3, 0.0, 0.0)
    assert step_approx(s, 0.0, rs_unit) == (0.0, 0.0)
    with pytest.raises(ValueError):
        step_approx(s, 0.6, rs_unit)


def test_kernel_matches_python_stepper(rs_unit):
    a = run_prufer(rs_unit, 3000, None, 0.7)
    b = run_prufer_python(rs_unit, 3000, None, 0.7)
    assert np.max(np.abs(a.logR - b.logR)) <= 1e-11
    assert np.max(np.abs(a.eta - b.eta)) <= 1e-11


def test_angle_increments_principal():
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 3.0))
    tr = run_prufer(rs, 5000, None, 0.0)
    d = np.diff(tr.eta)
    assert np.all(d > -math.pi) and np.all(d <= math.pi)
    assert -math.pi < tr.eta[0] <= math.pi


def test_record_subset_and_chunking(rs_unit):
    full = run_prufer(rs_unit, 20_000, None, 0.1)
    rec = [1, 17, 4096, 4097, 20_000]
    part = run_prufer(rs_unit, 20_000, None, 0.1, record=rec)
    assert np.array_equal(part.n, rec)
    assert np.allclose(part.logR, full.logR[np.array(rec) - 1], atol=0, rtol=0)
    with pytest.raises(ValueError):
        run_prufer(rs_unit, 10, record=[11])


def test_initial_state_matches_data(rs_free):
    for th in (0.0, 0.4, math.pi / 2):
        s = initial_state(rs_free, th)
        z, dz = (complex(v) for v in rs_free.zeta(0.0))
        alpha = s.rho / 2j
        assert (2 * alpha * z).real == pytest.approx(math.sin(th), abs=1e-14)
        assert (2 * alpha * dz).real == pytest.approx(math.cos(th), abs=1e-14)


def test_zero_coupling_constant_radius(rs_free):
    tr = run_prufer(rs_free, 10_000, None, 0.2)
    assert np.ptp(tr.logR) == 0.0 and np.ptp(tr.eta) == 0.0


@given(st.integers(1, 10**6), st.floats(-5, 5), st.floats(-50, 50), st.floats(0.2, 3))
def test_slow_variables_identity(n, logR, eta, lam):
    rs = ReferenceSolution(ModelParams(1.0, 0.0, lam))
    s = PruferState(n, logR, eta)
    te, tg = slow_variables(s, rs)
    th = eta + float(rs.gamma_phase(float(n))[0])
    assert te + tg == pytest.approx(th, abs=1e-12 * max(1.0, abs(th)))


def test_slow_variables_free(rs_free):
    assert slow_variables(PruferState(9, 0.0, 0.25), rs_free)[0] == 0.25


def test_slow_angle_flat_between_grid_points(rs_unit):
    grid = build_resonance_grid(rs_unit, 20, 200)
    N = int(grid.x[-1] + 1)
    tr = run_prufer(rs_unit, N, None, 0.0)
    te = tr.eta + np.sqrt(tr.n / 1.0)
    ls, sups, rsups = grid.l[:-1], [], []
    for i in range(ls.size):
        a, b = int(grid.x[i] + 0.5), int(grid.x[i + 1] + 0.5)
        sups.append(np.max(np.abs(te[a - 1 : b] - te[a - 1])))
        rsups.append(np.max(np.abs(tr.logR[a - 1 : b] - tr.logR[a - 1])))
    assert np.max(np.array(sups) * np.sqrt(ls)) <= 3.0
    assert np.max(np.array(rsups) * np.sqrt(ls)) <= 3.0


def test_sampling_points():
    assert sampling_points(math.pi**2 / 3, 2) == 6.5
    x = sampling_points(1.0, np.arange(1, 100))
    assert np.all(np.mod(x, 1) == 0.5)


def test_resonance_grid(rs_free):
    g = build_resonance_grid(rs_free, 20, 300)
    res = rs_free.gamma_phase(g.X)[1] - math.pi * g.l
    assert np.max(np.abs(res)) <= 1e-10
    assert np.all(g.x[:-1] < g.X[:-1]) and np.all(g.X[:-1] < g.x[1:])
    assert abs(g.X_of(50) - math.pi**2 * 2500) <= 5
    # gamma'(x_l) = pi l - pi/2 + O(1/l)
    assert np.max(np.abs(g.gamma1_at_x - math.pi * g.l + math.pi / 2) * g.l) < 5
    assert np.array_equal(g.sample_integers(), (g.x + 0.5).astype(int))


def test_grid_errors(rs_free):
    with pytest.raises(ValueError):
        build_resonance_grid(rs_free, 5, 4)
    with pytest.raises(GridError):
        build_resonance_grid(ReferenceSolution(ModelParams(1.0, 400.0)), 1, 5)
