import math

import numpy as np
import pytest

from starkprufer.coarse import (
    CoverageError,
    InsufficientRangeError,
    QScaleState,
    RationalityError,
    S_values,
    binned_loglog_slope,
    block_phase,
    classify_energy,
    coarse_run,
    convergence_diagnostic,
    exact_psi,
    extract_coarse,
    l_step_residuals,
    predict_l_step,
    predict_q_step,
    q_states,
    reconstruct_eigenfunction,
    window_bounds,
    window_l2_mass,
)
from starkprufer.expsum import gauss_sum_profile
from starkprufer.prufer import build_resonance_grid, run_prufer
from starkprufer.special import ModelParams, ReferenceSolution


@pytest.fixture(scope="module")
def unit_run():
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    grid = build_resonance_grid(rs, 20, 201)
    N = int(window_bounds(1.0, 201)[1]) + 2
    tr = run_prufer(rs, N, None, 0.0)
    return rs, grid, tr, extract_coarse(tr, grid, rs)


@pytest.fixture(scope="module")
def rational_run():
    p = ModelParams.from_rational(1, 1, 1.0, 1.0)
    rs = ReferenceSolution(p)
    return rs, coarse_run(rs, build_resonance_grid(rs, 20, 201), 0.0)


def test_free_dressing_is_trivial(rs_free):
    grid = build_resonance_grid(rs_free, 20, 40)
    cs = coarse_run(rs_free, grid, 0.4)
    assert np.array_equal(cs.logRl, cs.raw_logR)
    assert np.array_equal(cs.Lambda, cs.raw_eta_tilde)
    assert predict_l_step(cs.at(25), 0.3) == (0.0, 0.0)


def test_dressing_bounds(unit_run):
    _, _, _, cs = unit_run
    d = np.abs(cs.logRl - cs.raw_logR)
    assert np.all(d <= 1 / (4 * math.pi * cs.l) + 1e-15)
    # O(1/l) with the constant saturating 1/(4 pi)
    assert np.max(d * cs.l) == pytest.approx(1 / (4 * math.pi), rel=0.05)


def test_coverage_error(rs_unit):
    grid = build_resonance_grid(rs_unit, 20, 30)
    tr = run_prufer(rs_unit, 100, None, 0.0)
    with pytest.raises(CoverageError):
        extract_coarse(tr, grid, rs_unit)


def test_l_step_residual_decay(unit_run):
    rs, _, _, cs = unit_run
    sel = cs.l >= 30
    sub = type(cs)(cs.params, cs.l[sel], cs.logRl[sel], cs.Lambda[sel], cs.raw_logR[sel], cs.raw_eta_tilde[sel], cs.theta[sel])
    S = S_values(rs, sub.l)
    res = l_step_residuals(sub, S)
    assert binned_loglog_slope(res.l, res.res_logR) <= -1.1
    # the leading terms carry the l^-1/2 signal, the residual is much smaller
    assert np.sqrt(np.mean(res.res_logR**2)) < 0.1 * np.sqrt(np.mean(res.dlog_actual**2))


def test_S_bound(rs_unit):
    ls = np.arange(20, 201, 20)
    S = S_values(rs_unit, ls)
    assert np.max(np.abs(S) * ls**0.75) <= 10


def test_binned_slope_recovers_power():
    x = np.arange(30, 300, dtype=float)
    r = x**-1.25 * np.cos(1.7 * x)
    assert binned_loglog_slope(x, r) == pytest.approx(-1.25, abs=0.05)
    with pytest.raises(InsufficientRangeError):
        binned_loglog_slope(np.array([1.0, 1.01]), np.array([1.0, 2.0]))


def test_q_step_residuals(rational_run):
    _, cs = rational_run
    qs = q_states(cs)
    k = np.array([s.k for s in qs])
    pred = np.array([predict_q_step(s) for s in qs[:-1]])
    dl = np.diff([s.logRqk for s in qs]) - pred[:, 0]
    dL = np.diff([s.Lambda_qk for s in qs]) - pred[:, 1]
    sel = k[:-1] >= 30
    assert binned_loglog_slope(k[:-1][sel], dl[sel]) <= -1.25 + 0.2
    assert binned_loglog_slope(k[:-1][sel], dL[sel]) <= -0.75 + 0.2


def test_q_step_trivial_cases():
    p = ModelParams.from_rational(1, 2, 1.5, 0.0)
    assert predict_q_step(QScaleState(p, 40, 0.0, 0.3)) == (0.0, 0.0)
    pe = ModelParams.from_rational(1, 2, 0.8, 0.8)
    from starkprufer.expsum import GAMMA_H_CONSTANT

    assert np.allclose(block_phase(pe, np.arange(1, 50)), GAMMA_H_CONSTANT)
    with pytest.raises(RationalityError):
        QScaleState(ModelParams(1.0, 0.0, 1.0), 3, 0.0, 0.0)


def test_q_block_slow_variation(rational_run):
    _, cs = rational_run
    # q = 1: consecutive samples differ by O(k^-1/2)
    k = cs.l[:-1]
    assert np.max(np.abs(np.diff(cs.logRl)) * np.sqrt(k)) <= 2
    assert np.max(np.abs(np.diff(cs.Lambda)) * np.sqrt(k)) <= 2


def test_classify_energy_examples():
    p = ModelParams.from_rational(1, 3, 0.7, 0.7)
    ec = classify_energy(p)
    assert ec.exceptional and ec.m == 0
    assert ec.w == pytest.approx(gauss_sum_profile(1, 3)[0])
    p2 = ModelParams.from_rational(1, 2, 1.0, 1.0)
    ec2 = classify_energy(p2)
    assert ec2.exceptional and ec2.m == 0 and abs(ec2.w) < 1e-15
    half = classify_energy(p2, 1.0 + math.pi**2 / 3 / 2)
    assert not half.exceptional and half.m is None
    with pytest.raises(RationalityError):
        classify_energy(ModelParams(1.0, 0.0, 1.0))


def test_exceptional_profile_has_support():
    for q in (1, 2, 3, 5, 7):
        w = gauss_sum_profile(1, q)
        assert np.any(np.abs(w) > 1e-9 * q)


def test_convergence_free_case():
    p = ModelParams.from_rational(1, 1, 0.3, 0.0)
    rs = ReferenceSolution(p)
    cs = coarse_run(rs, build_resonance_grid(rs, 20, 600), 0.0)
    rep = convergence_diagnostic(cs.logRl, cs.l, M_min=16)
    assert rep.converged
    assert all(osc == 0 for _, osc in rep.profile)


def test_convergence_guards_and_synthetic():
    m = np.arange(1, 2049)
    v = 1.0 + m**-0.25 * np.cos(m)
    rep = convergence_diagnostic(v, m, M_min=16)
    assert rep.converged and rep.slope == pytest.approx(-0.25, abs=0.05)
    assert rep.limit_est == pytest.approx(1.0, abs=0.2)
    with pytest.raises(InsufficientRangeError):
        convergence_diagnostic(v[:100], m[:100], M_min=16)
    drift = convergence_diagnostic(np.log(m) * 10, m, M_min=16)
    assert not drift.converged


def test_reconstruction_envelope(unit_run):
    rs, _, tr, cs = unit_run
    worst = 0.0
    for l in (30, 60, 120, 200):
        lo, hi = window_bounds(1.0, l)
        xs = np.linspace(lo, hi, 3000)[1:]
        st = cs.at(l)
        approx, band = reconstruct_eigenfunction(st, rs, xs)
        assert band == pytest.approx(l**-0.5)
        err = np.abs(exact_psi(tr, rs, xs) - approx) / (np.abs(rs.evaluate(xs).zeta) * math.exp(st.logRl))
        worst = max(worst, float(err.max()) * math.sqrt(l))
    assert worst <= 2
    with pytest.raises(ValueError):
        reconstruct_eigenfunction(cs.at(30), rs, window_bounds(1.0, 30)[0])


def test_reconstruction_exact_without_coupling(rs_free):
    grid = build_resonance_grid(rs_free, 20, 40)
    tr = run_prufer(rs_free, int(window_bounds(1.0, 41)[1]) + 2, None, 0.9)
    cs = extract_coarse(tr, grid, rs_free)
    lo, hi = window_bounds(1.0, 33)
    xs = np.linspace(lo, hi, 500)[1:]
    approx, _ = reconstruct_eigenfunction(cs.at(33), rs_free, xs)
    assert np.max(np.abs(approx - exact_psi(tr, rs_free, xs))) <= 1e-10 * np.max(np.abs(approx))


def test_window_mass(unit_run):
    rs, _, tr, cs = unit_run
    for l in (30, 80, 200):
        rel = window_l2_mass(tr, rs, l) / (math.pi * math.exp(2 * cs.at(l).logRl)) - 1
        assert abs(rel) * math.sqrt(l) <= 3
