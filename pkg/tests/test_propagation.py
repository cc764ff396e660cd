import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from starkprufer.propagation import (
    CellState,
    TransferSU11,
    accumulate_transfer,
    apply_jump,
    basis_coefficient,
    cell_l2_masses,
    direct_radius,
    l2_norm_cell,
    one_step_su11,
    p_minus,
    propagate_cell,
    rho_ratio,
    run_transfer,
    subordinacy_ratio,
)
from starkprufer.prufer import run_prufer
from starkprufer.special import ModelParams, ReferenceSolution


def ode_oracle(F, E, x0, x1, y0):
    """psi'' = -(F x + E) psi by DOP853."""
    sol = integrate.solve_ivp(
        lambda x, y: [y[1], -(F * x + E) * y[0]], (x0, x1), y0, method="DOP853", rtol=1e-13, atol=1e-14
    )
    return sol.y[:, -1]


def test_cell_from_origin_matches_ode(rs_free):
    out = propagate_cell(rs_free, CellState(0.0, 0.0, 1.0))
    ref = ode_oracle(1.0, 0.0, 0.0, 1.0, [0.0, 1.0])
    assert out.psi == pytest.approx(ref[0], abs=1e-9)
    assert out.psi_prime == pytest.approx(ref[1], abs=1e-9)


@pytest.mark.parametrize("n", [3, 40, 400])
def test_cells_match_ode_with_energy(n):
    rs = ReferenceSolution(ModelParams(2.0, -1.5))
    st0 = CellState(float(n), 0.7, -0.4)
    out = propagate_cell(rs, st0)
    ref = ode_oracle(2.0, -1.5, n, n + 1, [0.7, -0.4])
    scale = max(1.0, math.hypot(*ref))
    assert abs(out.psi - ref[0]) <= 1e-9 * scale
    assert abs(out.psi_prime - ref[1]) <= 1e-9 * scale


def test_basis_element_propagates_to_itself(rs_free):
    z, dz = rs_free.zeta(7.0)
    z1, dz1 = rs_free.zeta(8.0)
    out = propagate_cell(rs_free, CellState(7.0, complex(z).real, complex(dz).real))
    assert out.psi == pytest.approx(complex(z1).real, abs=1e-12)
    assert out.psi_prime == pytest.approx(complex(dz1).real, abs=1e-12)
    assert basis_coefficient(rs_free, CellState(7.0, complex(z).real, complex(dz).real)) == pytest.approx(0.5)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 500))
def test_wronskian_constant_across_cell(a, b, c, d, n):
    rs = ReferenceSolution(ModelParams(1.0, 0.5))
    w0 = a * d - b * c
    u = propagate_cell(rs, CellState(float(n), a, b))
    v = propagate_cell(rs, CellState(float(n), c, d))
    assert u.psi * v.psi_prime - u.psi_prime * v.psi == pytest.approx(w0, abs=1e-10 * max(1, abs(a) + abs(b)) * max(1, abs(c) + abs(d)) * (1 + n))


def test_propagate_needs_integer(rs_free):
    with pytest.raises(ValueError):
        propagate_cell(rs_free, CellState(0.5, 1.0, 0.0))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_apply_jump(psi, dpsi, g):
    s = apply_jump(CellState(3.0, psi, dpsi), g)
    assert s.psi == psi and s.psi_prime == pytest.approx(dpsi + g * psi)
    assert apply_jump(CellState(3.0, psi, dpsi), 0.0) == CellState(3.0, psi, dpsi)
    assert apply_jump(CellState(1.0, 0.0, dpsi), g).psi_prime == dpsi


def test_jump_example():
    assert apply_jump(CellState(2.0, 1.0, 0.0), 0.8) == CellState(2.0, 1.0, 0.8)


@given(st.integers(1, 10**5), st.floats(-3, 3))
def test_one_step_su11_algebra(n, g):
    rs = ReferenceSolution(ModelParams(1.0, 0.0))
    A = one_step_su11(rs, n, g)
    assert A.det == pytest.approx(1.0, abs=1e-12)
    assert A.is_sigma3_isometry()
    U = g / float(rs.gamma_phase(float(n))[1])
    assert A.a == pytest.approx(1 + U / 2j)
    if g == 0:
        assert A.a == 1 and A.b == 0


def test_transfer_reproduces_prufer(rs_unit):
    N = 10_000
    traj = run_prufer(rs_unit, N, None, 0.3)
    T = run_transfer(rs_unit, N - 1, None, record=[N - 1]).at(0)
    a1 = traj.alpha[0]
    out = T.apply([a1, np.conj(a1)])
    assert abs(out[0] - traj.alpha[-1]) <= 1e-10 * abs(traj.alpha[-1])
    assert abs(out[1] - np.conj(out[0])) <= 1e-10 * abs(out[0])


def test_accumulate_identity_and_singular_values(rs_unit):
    s = accumulate_transfer([TransferSU11.identity()] * 5)
    assert s.log_norm == 0.0 and s.rho_ratio == pytest.approx(1.0)
    assert np.allclose(s.P_minus, [1, 0])
    steps = [one_step_su11(rs_unit, n, 1.0) for n in range(1, 200)]
    summ = accumulate_transfer(steps)
    sv = np.linalg.svd(summ.T.matrix, compute_uv=False)
    assert sv[0] * sv[1] == pytest.approx(1.0, abs=1e-8)
    assert math.log(sv[0]) == pytest.approx(summ.log_norm, abs=1e-10)
    # P_minus is the contracted direction
    v = summ.P_minus
    assert np.linalg.norm(summ.T.matrix @ v) == pytest.approx(sv[1], rel=1e-8)


def test_p_minus_and_rho_ratio_closed_forms():
    a, b = 1.3 + 0.4j, 0.2 - 0.9j
    s = math.sqrt(abs(a) ** 2 - abs(b) ** 2)
    a, b = a / s, b / s
    T = np.array([[a, b], [np.conj(b), np.conj(a)]])
    _, sv, vh = np.linalg.svd(T)
    pm = p_minus(a, b)
    assert abs(abs(np.vdot(vh[1].conj(), pm)) - 1) < 1e-12
    r = np.linalg.norm(T @ [1, 1]) / np.linalg.norm(T @ [1, -1])
    assert rho_ratio(a, b) == pytest.approx(r)


def test_det_after_million_steps():
    rs = ReferenceSolution(ModelParams(1.0, 0.0))
    rng = np.random.default_rng(1)
    g = rng.normal(size=10**6)
    path = run_transfer(rs, 10**6, g, record=[10**6])
    assert path.det()[0] == pytest.approx(1.0, abs=1e-8)


def test_direct_propagation_matches_prufer(rs_unit):
    N = 10_000
    lr = direct_radius(rs_unit, N, np.ones(N), 0.0)
    traj = run_prufer(rs_unit, N, None, 0.0)
    assert np.max(np.abs(lr - traj.logR)) <= 1e-9


def test_real_data_keeps_beta_conjugate(rs_unit):
    # beta(n) = conj(alpha(n)): the propagated state stays real
    s = CellState(0.0, 0.3, -1.1)
    for n in range(0, 30):
        s = apply_jump(propagate_cell(rs_unit, s), 1.0)
        assert isinstance(s.psi, float) and isinstance(s.psi_prime, float)


def test_r1r2_relation(rs_unit):
    N = 20_000
    t1, t2 = 0.2, 1.9
    a = run_prufer(rs_unit, N, None, t1)
    b = run_prufer(rs_unit, N, None, t2)
    lhs = np.exp(a.logR + b.logR) * np.abs(np.sin(a.eta - b.eta))
    assert np.max(np.abs(lhs / abs(math.sin(t1 - t2)) - 1)) <= 1e-6


def test_l2_norm_cell_oracle(rs_free):
    assert l2_norm_cell(rs_free, 0j, 5) == 0.0
    ref = integrate.quad(lambda x: complex(rs_free.zeta(x)[0]).real ** 2, 99, 100, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    assert l2_norm_cell(rs_free, 0.5 + 0j, 100) == pytest.approx(ref, rel=1e-8)
    masses = cell_l2_masses(rs_free, np.array([0.5 + 0j, 0.2 - 0.1j]), np.array([100, 2000]))
    assert masses[0] == pytest.approx(ref, rel=1e-8)
    assert masses[1] == pytest.approx(l2_norm_cell(rs_free, 0.2 - 0.1j, 2000), rel=1e-12)


def test_l2_comparability(rs_unit):
    # cell mass = R^2/(2 sqrt(F n)) (1 + O(n^-1/2))
    traj = run_prufer(rs_unit, 10_000, None, 0.0)
    n = np.unique(np.geomspace(100, 10_000, 40).astype(int))
    m = cell_l2_masses(rs_unit, traj.alpha[n - 1], n)
    dev = np.abs(m * 2 * np.sqrt(n) / np.exp(2 * traj.logR[n - 1]) - 1) * np.sqrt(n)
    assert dev.max() <= 10


def test_subordinacy_ratio_basics():
    m = np.array([1.0, 2.0, 3.0])
    assert subordinacy_ratio(m, m) == 1.0
    assert subordinacy_ratio(m, 2 * m, upto=2) == 0.5
    with pytest.raises(ZeroDivisionError):
        subordinacy_ratio(m, np.zeros(3))


def test_rational_case_two_solutions_not_subordinate():
    p = ModelParams.from_rational(1, 1, 0.3, 1.0)
    rs = ReferenceSolution(p)
    N = 100_000
    a = run_prufer(rs, N, None, 0.0)
    b = run_prufer(rs, N, None, math.pi / 2)
    w = 1 / (2 * np.sqrt(p.F * a.n))
    ratios = [
        subordinacy_ratio(np.exp(2 * a.logR) * w, np.exp(2 * b.logR) * w, upto=k) for k in (10_000, 30_000, 100_000)
    ]
    assert 0.1 < min(ratios) and max(ratios) < 10
    assert abs(ratios[-1] / ratios[0] - 1) < 0.05
