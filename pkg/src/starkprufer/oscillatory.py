"""Stationary and non-stationary phase expansions of

    I(omega) = integral_a^b u(x) e^{i omega phi(x)} dx

with boundary contributions, plus an adaptive quadrature oracle.

Amplitude and phase are plain callables.  They are evaluated on floats or
arrays for quadrature and on :class:`~starkprufer.jets.Jet` objects for exact
derivatives, so they should be written with arithmetic and numpy ufuncs
(``np.sqrt``, ``np.exp``, ``np.sin`` ...), which dispatch to the jet methods.
Problems whose derivatives come from elsewhere can pass ``u_jet``/``phi_jet``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .jets import Jet
from .prufer import sampling_points
from .special import ReferenceSolution

MAX_ORDER = 3
PROBE_POINTS = 257


class DegeneracyError(ValueError):
    pass


class StationaryPointError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    pass


JetFn = Callable[[float, int], Jet]


@dataclass(frozen=True)
class PhaseProblem:
    a: float
    b: float
    omega: float
    u: Callable
    phi: Callable
    k: int = 1
    u_jet: JetFn | None = None
    phi_jet: JetFn | None = None
    delta: float | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if not 1 <= self.k <= MAX_ORDER:
            raise ValueError(f"k must lie in 1..{MAX_ORDER}")

    def with_omega(self, omega: float) -> "PhaseProblem":
        return PhaseProblem(self.a, self.b, omega, self.u, self.phi, self.k, self.u_jet, self.phi_jet, self.delta)

    def jet_u(self, x0: float, order: int) -> Jet:
        if self.u_jet is not None:
            return self.u_jet(x0, order)
        return _as_jet(self.u(Jet.variable(x0, order)), order)

    def jet_phi(self, x0: float, order: int) -> Jet:
        if self.phi_jet is not None:
            return self.phi_jet(x0, order)
        return _as_jet(self.phi(Jet.variable(x0, order)), order)

    def dphi(self, x: float) -> float:
        return float(self.jet_phi(x, 1).c[1].real)


def _as_jet(v, order: int) -> Jet:
    return v if isinstance(v, Jet) else Jet.constant(v, order)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def quadrature_oracle(problem: PhaseProblem, epsabs: float | None = None) -> complex:
    """Adaptive Gauss-Kronrod (QUADPACK) on sub-intervals holding a few oscillations each."""
    a, b, w = problem.a, problem.b, problem.omega
    tol = 1e-12 * max(1.0, math.sqrt(w)) if epsabs is None else epsabs
    probe = np.linspace(a, b, PROBE_POINTS)
    slope = max(abs(problem.dphi(float(x))) for x in probe)
    pieces = max(1, math.ceil(w * slope * (b - a) / (2 * math.pi) / 2))
    edges = np.linspace(a, b, pieces + 1)
    eps_piece = tol / pieces / 4

    def f_re(x):
        return float(np.real(problem.u(x) * np.exp(1j * w * problem.phi(x))))

    def f_im(x):
        return float(np.imag(problem.u(x) * np.exp(1j * w * problem.phi(x))))

    re, im = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        for f, acc in ((f_re, re), (f_im, im)):
            val, err, info = integrate.quad(f, lo, hi, epsabs=eps_piece, epsrel=1e-14, limit=200, full_output=1)[:3]
            if err > 10 * eps_piece and err > 1e-13 * abs(val):
                raise QuadratureError(f"quad did not converge on ({lo}, {hi}): err {err}")
            acc.append(val)
    return complex(math.fsum(re), math.fsum(im))


# ---------------------------------------------------------------------------
# non-stationary phase
# ---------------------------------------------------------------------------


def boundary_operators(problem: PhaseProblem, x0: float, k: int) -> list[complex]:
    """B^j u(x0) / phi'(x0) for j < k, with B^0 v = v and B^j v = (B^{j-1} v / phi')'."""
    u = problem.jet_u(x0, k)
    dphi = problem.jet_phi(x0, k + 1).deriv()
    B = u
    out = []
    for _ in range(k):
        q = B / dphi.truncate(B.order)
        out.append(complex(q.c[0]))
        if B.order > 0:
            B = q.deriv()
    return out


def boundary_terms(problem: PhaseProblem, k: int) -> list[complex]:
    """(i/omega)^{j+1} [B^j u(a) e^{i omega phi(a)}/phi'(a) - same at b] for j < k."""
    if k <= 0:
        return []
    w = problem.omega
    qa = boundary_operators(problem, problem.a, k)
    qb = boundary_operators(problem, problem.b, k)
    ea = np.exp(1j * w * float(np.real(problem.phi(problem.a))))
    eb = np.exp(1j * w * float(np.real(problem.phi(problem.b))))
    return [complex((1j / w) ** (j + 1) * (qa[j] * ea - qb[j] * eb)) for j in range(k)]


def _probe_dphi(problem: PhaseProblem) -> np.ndarray:
    xs = np.linspace(problem.a, problem.b, PROBE_POINTS)
    return np.array([problem.dphi(float(x)) for x in xs])


def _sup_derivatives(problem: PhaseProblem, order: int) -> np.ndarray:
    xs = np.linspace(problem.a, problem.b, 33)
    d = np.array([np.abs(problem.jet_u(float(x), order).derivatives()) for x in xs])
    return d.max(axis=0)


@dataclass(frozen=True)
class NonstationaryExpansion:
    terms: list[complex]
    remainder_bound: float

    @property
    def value(self) -> complex:
        return complex(sum(self.terms))


def nonstationary_expansion(problem: PhaseProblem, C: float = 1.0) -> NonstationaryExpansion:
    """k boundary terms; the neglected remainder is bounded by
    C |I| omega^-k sum_m delta^{m-2k} sup|u^(m)|."""
    k = problem.k
    dp = np.abs(_probe_dphi(problem))
    delta = float(dp.min()) if problem.delta is None else problem.delta
    if dp.min() < delta or delta <= 0:
        raise DegeneracyError(f"|phi'| drops to {dp.min():.3g} below delta={delta:.3g}")
    sup = _sup_derivatives(problem, k)
    bound = C * (problem.b - problem.a) * problem.omega**-k * sum(
        delta ** (m - 2 * k) * sup[m] for m in range(k + 1)
    )
    return NonstationaryExpansion(boundary_terms(problem, k), float(bound))


# ---------------------------------------------------------------------------
# stationary phase
# ---------------------------------------------------------------------------


def find_stationary_point(problem: PhaseProblem, kappa: float = 0.0) -> float:
    """The unique zero of phi' in (a, b), located by sign change and Brent's method."""
    xs = np.linspace(problem.a, problem.b, PROBE_POINTS)
    d = np.array([problem.dphi(float(x)) for x in xs])
    s = np.sign(d)
    change = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    change = change[~((d[change] == 0) & (change > 0) & np.isin(change - 1, change))]
    if change.size != 1:
        raise StationaryPointError(f"expected one stationary point, found {change.size}")
    i = int(change[0])
    if d[i] == 0:
        x0 = float(xs[i])
    elif d[i + 1] == 0:
        x0 = float(xs[i + 1])
    else:
        x0 = optimize.brentq(problem.dphi, float(xs[i]), float(xs[i + 1]), xtol=1e-15, rtol=1e-15, maxiter=200)
    # one Newton polish with the exact second derivative
    j = problem.jet_phi(x0, 2)
    d2 = 2 * float(j.c[2].real)
    if d2 != 0:
        x1 = x0 - float(j.c[1].real) / d2
        if problem.a < x1 < problem.b and abs(problem.dphi(x1)) < abs(problem.dphi(x0)):
            x0 = x1
    length = problem.b - problem.a
    if min(x0 - problem.a, problem.b - x0) <= kappa * length:
        raise StationaryPointError("stationary point too close to the boundary")
    return x0


def _stationary_L(uj: Jet, pj: Jet, j: int) -> complex:
    """L_j u(x0) = sum_{nu - mu = j, 2 nu >= 3 mu} (-i d)^{2 nu}(g^mu u)(x0) / (i^j 2^nu nu! mu! phi''^nu),

    with g = phi - phi(x0) - phi''(x0)(x - x0)^2/2 vanishing to third order.
    """
    a2 = 2 * pj.c[2]
    gc = pj.c.astype(complex).copy()
    gc[:3] = 0
    g = Jet(gc)
    total = 0j
    mu = 0
    while True:
        nu = j + mu
        if 2 * nu < 3 * mu:
            break
        order = 2 * nu
        if order > uj.order or order > pj.order:
            raise ValueError(f"L_{j} needs derivatives up to order {order}")
        gm = g.truncate(order) ** mu
        prod = gm * uj.truncate(order)
        deriv = prod.derivative_value(order) * (-1) ** nu  # (-i)^{2 nu} = (-1)^nu
        total += deriv / (1j**j * 2**nu * math.factorial(nu) * math.factorial(mu) * a2**nu)
        mu += 1
    return complex(total)


def stationary_operator(problem: PhaseProblem, x0: float, j: int) -> complex:
    order = 2 * (3 * j)  # nu <= 3j
    order = max(order, 2)
    return _stationary_L(problem.jet_u(x0, order), problem.jet_phi(x0, order), j)


def L1_explicit(v: tuple[float, float, float], phi: tuple[float, float, float, float]) -> complex:
    """Closed form of L_1 from (v, v', v'') and (phi'', phi''', phi'''') at x0."""
    v0, v1, v2 = v
    p2, p3, p4 = phi[0], phi[1], phi[2]
    return 1j * (v2 / (2 * p2) - (4 * v1 * p3 + v0 * p4) / (8 * p2**2) + 5 * v0 * p3**2 / (24 * p2**3))


@dataclass(frozen=True)
class StationaryExpansion:
    x0: float
    main_terms: list[complex]
    boundary_terms: list[complex]
    remainder_bound: float

    @property
    def value(self) -> complex:
        return complex(sum(self.main_terms) + sum(self.boundary_terms))


def stationary_expansion(problem: PhaseProblem, kappa: float = 0.0, C: float = 1.0) -> StationaryExpansion:
    """k stationary-point terms and k-1 boundary terms; error O(omega^-k)."""
    k, w = problem.k, problem.omega
    x0 = find_stationary_point(problem, kappa)
    order = max(2, 6 * (k - 1))
    pj = problem.jet_phi(x0, order)
    a2 = 2 * float(pj.c[2].real)
    if abs(a2) < 1e-8:
        raise DegeneracyError(f"phi''(x0) = {a2:.3g} is degenerate")
    uj = problem.jet_u(x0, order)
    pref = math.sqrt(2 * math.pi) * np.exp(1j * (w * float(pj.c[0].real) + math.pi / 4)) / np.sqrt(complex(a2))
    main = [complex(pref * w ** (-0.5 - j) * _stationary_L(uj, pj, j)) for j in range(k)]
    bnd = boundary_terms(problem, k - 1)
    sup = _sup_derivatives(problem, 2 * k)
    return StationaryExpansion(x0, main, bnd, float(C * w**-k * sup.sum()))


# ---------------------------------------------------------------------------
# the rescaled resonance-cell integral
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellProblem:
    """integral_{x_l}^{x_{l+1}} e^{i(2 gamma + h - 2 pi nu x)}/gamma' dx
    = prefactor * integral_0^1 u_l(y) e^{i omega Phi(y)} dy."""

    problem: PhaseProblem
    prefactor: complex
    l: int
    nu: int

    def integral(self, value: complex) -> complex:
        return self.prefactor * value


def cell_problem(rs: ReferenceSolution, l: int, h=None, nu: int | None = None, k: int = 2) -> CellProblem:
    """Map the window integral onto (0, 1) with u_l = l/gamma'(x(y)) and
    Phi = (phi(y) - phi(0))/omega, omega = sup |phi'|."""
    nu = l if nu is None else nu
    F = rs.params.F
    xl, xl1 = (float(v) for v in sampling_points(F, [l, l + 1]))
    D = xl1 - xl

    def hval(x, kd=0):
        if h is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return h.derivative(x, kd) if kd else h(x)

    def phi_raw(y):
        x = xl + D * np.asarray(y, dtype=float)
        g = rs.evaluate(x).gamma
        return 2 * g + hval(x) - 2 * math.pi * nu * x

    def dphi_raw(y):
        x = xl + D * y
        return D * (2 * float(rs.gamma_phase(x)[1]) + float(hval(x, 1)) - 2 * math.pi * nu)

    omega = max(abs(dphi_raw(0.0)), abs(dphi_raw(1.0)))
    phi0 = float(phi_raw(0.0))

    def u(y):
        x = xl + D * np.asarray(y, dtype=float)
        return l / rs.evaluate(x).gamma1

    def Phi(y):
        return (phi_raw(y) - phi0) / omega

    def gamma_jet_y(y0: float, order: int) -> Jet:
        return rs.gamma_jet(xl + D * y0, order).scale_argument(D)

    def u_jet(y0: float, order: int) -> Jet:
        # d gamma/dy = D gamma'(x)
        return gamma_jet_y(y0, order + 1).deriv().reciprocal() * (l * D)

    def phi_jet(y0: float, order: int) -> Jet:
        x0 = xl + D * y0
        g = gamma_jet_y(y0, order)
        if h is None:
            hd = np.zeros(order + 1)
        else:
            hd = np.array([float(h.derivative(x0, kd)) for kd in range(order + 1)])
        hj = Jet.from_derivatives(hd).scale_argument(D)
        lin = Jet.variable(x0, order).scale_argument(D) * (2 * math.pi * nu)
        out = (g * 2 + hj - lin - phi0) / omega
        return out

    prob = PhaseProblem(0.0, 1.0, omega, u, Phi, k, u_jet=u_jet, phi_jet=phi_jet)
    pref = D / l * np.exp(1j * phi0)
    return CellProblem(prob, complex(pref), l, nu)


# ---------------------------------------------------------------------------
# model problems and omega scans
# ---------------------------------------------------------------------------


def _model_u(x):
    return 1 / (1 + x * x / 4)


def _model_phi_stationary(x):
    return x * x / 2 + x**3 / 6 + np.sin(x) / 10 - x / 10


def _model_phi_plain(x):
    return x + x * x / 4 + x**3 / 10


def model_problem(kind: str, k: int = 1, omega: float = 100.0) -> PhaseProblem:
    """Reference problems with a smooth rational amplitude.

    ``stationary``: one non-degenerate stationary point inside (-0.6, 0.8).
    ``nonstationary``: phi' >= 1 on (0.1, 1.3).
    """
    if kind == "stationary":
        return PhaseProblem(-0.6, 0.8, omega, _model_u, _model_phi_stationary, k)
    if kind == "nonstationary":
        return PhaseProblem(0.1, 1.3, omega, _model_u, _model_phi_plain, k)
    raise ValueError(f"unknown model problem {kind!r}")


@dataclass
class OmegaScan:
    omega: np.ndarray
    expansion: np.ndarray
    oracle: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return np.abs(self.expansion - self.oracle)

    @property
    def slope(self) -> float:
        return float(np.polyfit(np.log(self.omega), np.log(self.error), 1)[0])


def omega_scan(problem: PhaseProblem, omegas, stationary: bool | None = None) -> OmegaScan:
    """Expansion and oracle over a list of omega values."""
    if stationary is None:
        try:
            find_stationary_point(problem)
            stationary = True
        except StationaryPointError:
            stationary = False
    ex, orc = [], []
    for w in omegas:
        p = problem.with_omega(float(w))
        ex.append(stationary_expansion(p).value if stationary else nonstationary_expansion(p).value)
        orc.append(quadrature_oracle(p))
    return OmegaScan(np.asarray(omegas, dtype=float), np.array(ex), np.array(orc))
