"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into the terminal summary (see conftest.py).
Tolerances and ranges are the stated ones; nothing here is loosened.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES
from starkprufer.coarse import S_values, binned_loglog_slope, coarse_run, l_step_residuals, spectral_scan_row
from starkprufer.expsum import (
    SqrtPerturbation,
    double_sum,
    gauss_sum_profile,
    nonvanishing_count,
    precise_asymptotic,
    window_sum,
)
from starkprufer.oscillatory import (
    cell_problem,
    model_problem,
    nonstationary_expansion,
    quadrature_oracle,
    stationary_expansion,
)
from starkprufer.propagation import CellState, apply_jump, cell_l2_masses, direct_radius, propagate_cell, run_transfer
from starkprufer.prufer import build_resonance_grid, run_prufer
from starkprufer.random import CouplingSampler, mc_radius_exponent, subordinate_exponents, transition_scan
from starkprufer.special import ModelParams, ReferenceSolution, gamma_asymptotic

pytestmark = pytest.mark.acceptance


def report(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def test_criterion_01_wronskian_and_phase():
    t0 = time.perf_counter()
    x = np.linspace(0.0, 1e4, 10_000)
    worst_w = worst_p = 0.0
    for F, E in [(1.0, 0.0), (math.pi**2 / 3, 1.0), (4.0, -2.0)]:
        rs = ReferenceSolution(ModelParams(F, E))
        d = rs.evaluate(x)
        worst_w = max(worst_w, float(np.max(np.abs(rs.wronskian(x) + 2j))))
        worst_p = max(worst_p, float(np.max(np.abs(np.abs(d.zeta) ** 2 * d.gamma1 - 1))))
    dt = time.perf_counter() - t0
    ok = worst_w <= 1e-10 and worst_p <= 1e-10 and dt < 10
    report(1, "Wronskian and phase identities", ok, f"wronskian {worst_w:.2e}, phase {worst_p:.2e}, {dt:.1f}s")


def test_criterion_02_gamma_asymptotics():
    t0 = time.perf_counter()
    p = ModelParams(1.0, 2.0)
    rs = ReferenceSolution(p)
    x = np.geomspace(1e3, 1e4, 60)
    vals = rs.gamma_phase(x)
    got = [slope(x, np.abs(v - gamma_asymptotic(p, x, o))) for o, v in enumerate(vals)]
    dt = time.perf_counter() - t0
    ok = all(abs(s - t) <= 0.1 for s, t in zip(got, (-0.5, -0.5, -1.5))) and dt < 10
    report(2, "gamma asymptotics (F=1, E=2)", ok, f"slopes {np.round(got, 3).tolist()}, {dt:.1f}s")


def test_criterion_03_propagation_oracle():
    t0 = time.perf_counter()
    F, E = 1.0, 0.0
    rs = ReferenceSolution(ModelParams(F, E, 1.0))
    state = CellState(0.0, 0.6, -0.8)
    worst = 0.0
    for n in range(1000):
        out = propagate_cell(rs, state)
        sol = integrate.solve_ivp(
            lambda x, y: [y[1], -(F * x + E) * y[0]],
            (float(n), n + 1.0),
            [state.psi, state.psi_prime],
            method="DOP853",
            rtol=1e-13,
            atol=1e-14,
        )
        scale = max(1.0, math.hypot(state.psi, state.psi_prime))
        worst = max(worst, math.hypot(out.psi - sol.y[0, -1], out.psi_prime - sol.y[1, -1]) / scale)
        state = apply_jump(out, 1.0)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 60
    report(3, "Airy-basis cells vs adaptive ODE over 1e3 cells", ok, f"max per-cell error {worst:.2e}, {dt:.1f}s")


def test_criterion_04_prufer_equivalence():
    N = 100_000
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    tr = run_prufer(rs, N, None, 0.0)
    a1 = complex(tr.alpha[0])
    path = run_transfer(rs, N - 1, None)
    su = path.log_scale + np.log(np.abs(2 * (path.a * a1 + path.b * np.conj(a1))))
    direct = direct_radius(rs, N, np.ones(N), 0.0)
    n = np.arange(1, N + 1)
    d1 = float(np.max(np.abs(tr.logR - su) / n))
    d2 = float(np.max(np.abs(tr.logR - direct) / n))
    d3 = float(np.max(np.abs(su - direct) / n))
    ok = max(d1, d2, d3) <= 1e-8
    report(4, "Prufer / SU(1,1) / direct agreement", ok, f"max |dlogR|/n = {max(d1, d2, d3):.2e}")


def test_criterion_05_l2_comparability():
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    tr = run_prufer(rs, 10_000, None, 0.0)
    n = np.arange(100, 10_001)
    m = cell_l2_masses(rs, tr.alpha[n - 1], n)
    C = float(np.max(np.abs(m * 2 * np.sqrt(n) / np.exp(2 * tr.logR[n - 1]) - 1) * np.sqrt(n)))
    report(5, "L2 comparability", C <= 10, f"fitted C = {C:.3f}")


def test_criterion_06_precise_expsum():
    t0 = time.perf_counter()
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    h = SqrtPerturbation.canonical(1.0, 1.0)
    ls = np.arange(30, 301)
    res = np.array([abs(window_sum(rs, int(l), h) - precise_asymptotic(rs, int(l), h).predicted) for l in ls])
    s = slope(ls, res)
    dt = time.perf_counter() - t0
    ok = s <= -1.4 and dt < 300
    report(6, "precise exponential-sum asymptotics", ok, f"slope {s:.3f}, {dt:.1f}s")


def test_criterion_07_double_sum():
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    ls = np.arange(20, 151)
    v = np.array([abs(double_sum(rs, int(l))[0]) for l in ls])
    C = float(np.max(v * ls**0.75))
    report(7, "double-sum bound", C <= 10, f"fitted C = {C:.4f}")


def test_criterion_08_l_scale_recursion():
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    grid = build_resonance_grid(rs, 30, 300)
    cs = coarse_run(rs, grid)
    res = l_step_residuals(cs, S_values(rs, cs.l))
    s = binned_loglog_slope(res.l, res.res_logR)
    report(8, "l-scale recursion residuals", s <= -1.1, f"binned RMS slope {s:.3f}")


def test_criterion_09_gauss_sums():
    t0 = time.perf_counter()
    worst, short = 0.0, []
    for q in range(1, 51):
        for p in range(1, q + 1):
            if math.gcd(p, q) != 1:
                continue
            w = gauss_sum_profile(p, q)
            worst = max(worst, abs(float(np.sum(np.abs(w) ** 2)) - q * q))
            if nonvanishing_count(w, q) < q ** (2 / 3) / 2:
                short.append((p, q))
    dt = time.perf_counter() - t0
    qs = sorted({q for _, q in short})
    ok = worst <= 1e-9 and not short and dt < 1
    report(
        9,
        "Gauss-sum identities",
        ok,
        f"Parseval err {worst:.1e}; support below q^(2/3)/2 for {len(short)} pairs, q in {qs}; {dt:.2f}s",
    )


@pytest.mark.slow
def test_criterion_10_rational_convergence():
    slopes, worst_t = [], 0.0
    for E in (0.3, 1.7, -0.9):
        t0 = time.perf_counter()
        row = spectral_scan_row(ModelParams.from_rational(1, 1, E, 1.0), l_max=2000)
        worst_t = max(worst_t, time.perf_counter() - t0)
        assert not row["exceptional"]
        slopes.append(row["slope"])
    ok = all(s <= -0.15 for s in slopes) and worst_t < 300
    report(10, "rational-case convergence", ok, f"Cauchy slopes {np.round(slopes, 3).tolist()}, max {worst_t:.1f}s per E")


@pytest.mark.slow
def test_criterion_11_random_exponent():
    t0 = time.perf_counter()
    P = ModelParams(1.0, 0.0)
    r1 = mc_radius_exponent(P, CouplingSampler("gaussian", 1.0, 0), N=100_000, trials=100)
    r2 = mc_radius_exponent(P, CouplingSampler("gaussian", 2.0, 0), N=100_000, trials=100)
    dt = time.perf_counter() - t0
    ok = abs(r1.mean_exp - 0.125) <= 0.02 and abs(r2.mean_exp - 0.5) <= 0.05 and dt < 600
    report(
        11,
        "random growth exponent",
        ok,
        f"lam=1: {r1.mean_exp:.4f}+-{r1.stderr:.4f}, lam=2: {r2.mean_exp:.4f}+-{r2.stderr:.4f}, {dt:.0f}s",
    )


@pytest.mark.slow
def test_criterion_12_subordinate_branch():
    res = subordinate_exponents(ModelParams(1.0, 0.0), CouplingSampler("gaussian", 1.0, 0), 100_000, 50)
    dec = float(np.median([r.decay_exp for r in res]))
    tot = float(np.median([r.decay_exp + r.generic_exp for r in res]))
    ok = abs(dec + 0.125) <= 0.03 and abs(tot) <= 0.02
    report(12, "subordinate branch", ok, f"median decay {dec:.4f}, median sum {tot:.4f}")


@pytest.mark.slow
def test_criterion_13_transition_proxy():
    grid = [0.25, 0.4, 0.5, 0.6, 1.0]
    rows = transition_scan(grid, lam=1.0, N=100_000, trials=100)
    signs = [r.sign for r in rows]
    ok = signs == ["-", "-", "0", "+", "+"]
    detail = ", ".join(f"F={r.F:g}: {r.proxy:+.3f}+-{r.proxy_stderr:.3f}" for r in rows)
    report(13, "spectral-transition proxy signs", ok, f"signs {''.join(signs)}; {detail}")


def test_criterion_14_appendix_expansions():
    t0 = time.perf_counter()
    omegas = np.geomspace(40, 640, 6)
    stat, nonstat = [], []
    for kind, store in (("stationary", stat), ("nonstationary", nonstat)):
        base = model_problem(kind, 1)
        oracle = [quadrature_oracle(base.with_omega(w)) for w in omegas]
        for k in (1, 2, 3):
            expand = stationary_expansion if kind == "stationary" else nonstationary_expansion
            err = [abs(expand(replace(base, k=k, omega=float(w))).value - o) for w, o in zip(omegas, oracle)]
            store.append(slope(omegas, err))
    rs = ReferenceSolution(ModelParams(1.0, 0.0, 1.0))
    cp = cell_problem(rs, 50, SqrtPerturbation.canonical(1.0, 1.0), k=1)
    cell_omegas = cp.problem.omega * np.geomspace(1 / 16, 1, 5)
    oracle = [quadrature_oracle(cp.problem.with_omega(float(w))) for w in cell_omegas]
    cell = []
    for k in (1, 2, 3):
        err = [abs(stationary_expansion(replace(cp.problem, k=k, omega=float(w))).value - o) for w, o in zip(cell_omegas, oracle)]
        cell.append(slope(cell_omegas, err))
    dt = time.perf_counter() - t0
    ok = (
        all(abs(s + k) <= 0.2 for s, k in zip(stat, (1, 2, 3)))
        and all(s <= -k + 0.2 for s, k in zip(nonstat, (1, 2, 3)))
        and all(abs(s + k) <= 0.2 for s, k in zip(cell, (1, 2, 3)))
        and dt < 60
    )
    report(
        14,
        "stationary / non-stationary expansions",
        ok,
        f"stationary {np.round(stat, 2).tolist()}, non-stationary {np.round(nonstat, 2).tolist()}, "
        f"cell l=50 {np.round(cell, 2).tolist()}, {dt:.1f}s",
    )
