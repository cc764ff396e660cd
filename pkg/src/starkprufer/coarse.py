"""Coarse-grained dynamics on the resonance scale l and, for F = pi^2 q/(3p),
on the block scale qk; convergence diagnostics and eigenfunction reconstruction.

Along x_l the dressed variables

    cR(l)     = R(x_l) exp((-1)^{l+1} lam cos(2 theta(x_l)) / (4 pi l))
    Lambda(l) = eta~(x_l) + (-1)^l lam sin(2 theta(x_l)) / (4 pi l)

obey, up to O(l^{-5/4}),

    log cR(l+1)/cR(l)     = lam/sqrt(2Fl) sin 2Th + lam^2/(4Fl) (1 + cos 4Th)
    Lambda(l+1)-Lambda(l) = lam/sqrt(2Fl) cos 2Th - lam^2/(4Fl) sin 4Th + lam^2 S(l)

with Th = Lambda + Gamma(l).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expsum import GAMMA_H_CONSTANT, GaussSumSpec, cubic_gauss_sum, double_sum
from .prufer import ResonanceGrid, Trajectory, run_prufer
from .special import ModelParams, ReferenceSolution

EXCEPTIONAL_TOL = 1e-9


class CoverageError(ValueError):
    pass


class RationalityError(ValueError):
    pass


class InsufficientRangeError(ValueError):
    pass


def coarse_phase(params: ModelParams, l, constant: float = GAMMA_H_CONSTANT):
    """Gamma(l) = -pi^3 l^3/(3F) + pi l (E - lam)/F + constant, reduced mod 2 pi."""
    ld = np.longdouble
    pi = np.arctan(ld(1)) * 4
    L = np.asarray(l).astype(ld)
    F = params.F_ld
    val = -(pi**3) * L**3 / (3 * F) + pi * L * (ld(params.E) - ld(params.lam)) / F
    return np.fmod(val, 2 * pi).astype(float) + constant


@dataclass
class CoarseStates:
    """Dressed samples at x_l, stored column-wise."""

    params: ModelParams
    l: np.ndarray
    logRl: np.ndarray
    Lambda: np.ndarray
    raw_logR: np.ndarray
    raw_eta_tilde: np.ndarray
    theta: np.ndarray
    constant: float = GAMMA_H_CONSTANT

    @property
    def Gamma(self) -> np.ndarray:
        return coarse_phase(self.params, self.l, self.constant)

    @property
    def Theta(self) -> np.ndarray:
        return self.Lambda + self.Gamma

    def __len__(self) -> int:
        return self.l.size

    def at(self, l: int) -> "CoarseState":
        i = int(np.searchsorted(self.l, l))
        if i >= self.l.size or self.l[i] != l:
            raise KeyError(l)
        return CoarseState(self.params, int(l), float(self.logRl[i]), float(self.Lambda[i]), self.constant)


@dataclass(frozen=True)
class CoarseState:
    params: ModelParams
    l: int
    logRl: float
    Lambda: float
    constant: float = GAMMA_H_CONSTANT

    @property
    def Gamma(self) -> float:
        return float(coarse_phase(self.params, self.l, self.constant))

    @property
    def Theta(self) -> float:
        return self.Lambda + self.Gamma


def extract_coarse(traj: Trajectory, grid: ResonanceGrid, rs: ReferenceSolution) -> CoarseStates:
    """Sample the trajectory at the grid points and apply the dressing factors.

    R and eta are left-continuous step functions, so their values at x_l are
    those recorded at the integer n_l = x_l + 1/2.  gamma is continuous and is
    evaluated at the half-integer x_l itself: theta(x_l) = eta(n_l) + gamma(x_l).
    """
    params = rs.params
    n = grid.sample_integers()
    try:
        i = traj.index(n)
    except KeyError as exc:
        raise CoverageError("trajectory does not cover every x_l of the grid") from exc
    lam, F = params.lam, params.F
    l = grid.l
    logR = traj.logR[i]
    eta_t = traj.eta[i] + lam * np.sqrt(n / F)
    th = traj.eta[i] + rs.evaluate(grid.x).gamma_mod
    sgn = np.where(l % 2 == 0, 1.0, -1.0)  # (-1)^l
    logRl = logR - sgn * lam * np.cos(2 * th) / (4 * math.pi * l)
    Lam = eta_t + sgn * lam * np.sin(2 * th) / (4 * math.pi * l)
    return CoarseStates(params, l.copy(), logRl, Lam, logR, eta_t, th)


def coarse_run(
    rs: ReferenceSolution, grid: ResonanceGrid, theta0: float = 0.0, couplings=None
) -> CoarseStates:
    """Run the exact recursion up to x_{l_max + 1} and extract the dressed samples."""
    n = grid.sample_integers()
    traj = run_prufer(rs, int(n[-1]), couplings, theta0, record=n)
    return extract_coarse(traj, grid, rs)


def predict_l_step(state: CoarseState, S_l: float = 0.0) -> tuple[float, float]:
    """Main terms of (log cR(l+1)/cR(l), Lambda(l+1) - Lambda(l))."""
    p = state.params
    lam, F, l = p.lam, p.F, state.l
    th = state.Theta
    a = lam / math.sqrt(2 * F * l)
    b = lam * lam / (4 * F * l)
    dlog = a * math.sin(2 * th) + b * (1 + math.cos(4 * th))
    dlam = a * math.cos(2 * th) - b * math.sin(4 * th) + lam * lam * S_l
    return dlog, dlam


def S_values(rs: ReferenceSolution, ls) -> np.ndarray:
    return np.array([double_sum(rs, int(l))[1] for l in ls])


@dataclass
class LStepResiduals:
    l: np.ndarray
    dlog_actual: np.ndarray
    dlog_pred: np.ndarray
    dlam_actual: np.ndarray
    dlam_pred: np.ndarray

    @property
    def res_logR(self) -> np.ndarray:
        return self.dlog_actual - self.dlog_pred

    @property
    def res_Lambda(self) -> np.ndarray:
        return self.dlam_actual - self.dlam_pred


def l_step_residuals(cs: CoarseStates, S: np.ndarray | None = None) -> LStepResiduals:
    """Compare consecutive dressed samples with :func:`predict_l_step`."""
    m = len(cs) - 1
    S = np.zeros(m) if S is None else np.asarray(S)[:m]
    pred = np.array([predict_l_step(cs.at(int(cs.l[i])), float(S[i])) for i in range(m)])
    return LStepResiduals(
        cs.l[:-1], np.diff(cs.logRl), pred[:, 0], np.diff(cs.Lambda), pred[:, 1]
    )


def binned_loglog_slope(x: np.ndarray, r: np.ndarray, bins: int = 8) -> float:
    """Slope of log RMS(r) against log x over geometric bins of x.

    Individual residuals oscillate through zero, so raw log|r| is dominated by
    near-cancellations; the bin RMS tracks the envelope instead.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    edges = np.geomspace(x.min(), x.max() * (1 + 1e-12), bins + 1)
    cx, cy = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (x >= lo) & (x < hi)
        if sel.sum() >= 2:
            cx.append(math.exp(np.mean(np.log(x[sel]))))
            cy.append(math.sqrt(np.mean(r[sel] ** 2)))
    if len(cx) < 3:
        raise InsufficientRangeError("too few populated bins for a slope fit")
    return float(np.polyfit(np.log(cx), np.log(cy), 1)[0])


# ---------------------------------------------------------------------------
# q scale
# ---------------------------------------------------------------------------


def _rational(params: ModelParams) -> tuple[int, int]:
    if params.rational is None:
        raise RationalityError("this routine needs ModelParams.rational = (p, q)")
    return params.rational


def block_phase(params: ModelParams, k, constant: float = GAMMA_H_CONSTANT):
    """Omega(k) = 3 p (E - lam) k / pi + constant."""
    p, _ = _rational(params)
    return 3 * p * (params.E - params.lam) * np.asarray(k, dtype=float) / math.pi + constant


@dataclass(frozen=True)
class QScaleState:
    params: ModelParams
    k: int
    logRqk: float
    Lambda_qk: float
    constant: float = GAMMA_H_CONSTANT

    def __post_init__(self):
        _rational(self.params)

    @property
    def Omega(self) -> float:
        return float(block_phase(self.params, self.k, self.constant))

    @property
    def w(self) -> complex:
        p, q = _rational(self.params)
        return cubic_gauss_sum(GaussSumSpec(p, q, self.params.E, self.params.lam))


def q_states(cs: CoarseStates) -> list[QScaleState]:
    _, q = _rational(cs.params)
    sel = cs.l % q == 0
    return [
        QScaleState(cs.params, int(l // q), float(r), float(L), cs.constant)
        for l, r, L in zip(cs.l[sel], cs.logRl[sel], cs.Lambda[sel])
    ]


def predict_q_step(state: QScaleState) -> tuple[float, float]:
    """Main terms of (log cR(q(k+1))/cR(qk), Lambda(q(k+1)) - Lambda(qk))."""
    p, q = _rational(state.params)
    lam, F = state.params.lam, state.params.F
    w = state.w
    ph = state.Omega + state.Lambda_qk
    e2 = complex(math.cos(2 * ph), math.sin(2 * ph))
    qk = q * state.k
    a = lam / math.sqrt(2 * F * qk)
    b = lam * lam / (4 * F * qk)
    dlog = a * (e2 * w).imag + b * abs(w) ** 2 + b * (e2 * e2 * w * w).real
    dlam = a * (e2 * w).real
    return dlog, dlam


# ---------------------------------------------------------------------------
# energies and convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyClass:
    exceptional: bool
    m: int | None
    w: complex


def classify_energy(params: ModelParams, E: float | None = None) -> EnergyClass:
    """Exceptional iff E - lam lies within 1e-9 of (pi^2/(3p)) Z."""
    p, q = _rational(params)
    E = params.E if E is None else E
    step = math.pi**2 / (3 * p)
    r = (E - params.lam) / step
    m = round(r)
    if abs(E - params.lam - m * step) <= EXCEPTIONAL_TOL:
        return EnergyClass(True, int(m), cubic_gauss_sum(GaussSumSpec(p, q, m=int(m) % q)))
    return EnergyClass(False, None, cubic_gauss_sum(GaussSumSpec(p, q, E, params.lam)))


@dataclass
class ConvergenceReport:
    converged: bool
    limit_est: float
    profile: list[tuple[int, float]]
    tolerance: list[float]
    slope: float
    meta: dict = field(default_factory=dict)


def convergence_diagnostic(
    logR_qm: np.ndarray, m: np.ndarray, M_min: int = 16, factor: float = 10.0
) -> ConvergenceReport:
    """Dyadic Cauchy profile osc(M) = max - min of logR(x_{qm}) over m in [M, 2M].

    Converged iff the last two windows fall below factor * M^{-1/4}.
    """
    m = np.asarray(m, dtype=np.int64)
    v = np.asarray(logR_qm, dtype=float)
    Ms = []
    M = max(1, M_min)
    while 2 * M <= m.max():
        if M >= m.min():
            Ms.append(M)
        M *= 2
    if len(Ms) < 4:
        raise InsufficientRangeError(f"only {len(Ms)} dyadic windows; need at least 4")
    profile, tol = [], []
    for M in Ms:
        sel = (m >= M) & (m <= 2 * M)
        profile.append((M, float(v[sel].max() - v[sel].min())))
        tol.append(factor * M**-0.25)
    osc = np.array([p[1] for p in profile])
    ok = bool(np.all(osc[-2:] <= np.array(tol[-2:])))
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(Ms), np.log(np.maximum(osc, 1e-300)), 1)[0])
    last = (m >= Ms[-1]) & (m <= 2 * Ms[-1])
    return ConvergenceReport(ok, float(np.mean(v[last])), profile, tol, slope)


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def window_bounds(F: float, l: int) -> tuple[float, float]:
    return math.pi**2 / F * (l - 0.5) ** 2, math.pi**2 / F * (l + 0.5) ** 2


def reconstruct_eigenfunction(state: CoarseState, rs: ReferenceSolution, x, C: float = 1.0):
    """cR(l) Im(e^{i(Lambda - lam sqrt(ceil(x)/F))} zeta(x)) and the band C l^{-1/2}."""
    F, lam = rs.params.F, rs.params.lam
    lo, hi = window_bounds(F, state.l)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= lo) or np.any(xa > hi):
        raise ValueError(f"x outside the window ({lo}, {hi}] of l={state.l}")
    z = rs.evaluate(xa).zeta
    ph = state.Lambda - lam * np.sqrt(np.ceil(xa) / F)
    psi = math.exp(state.logRl) * np.imag(np.exp(1j * ph) * z)
    return psi, C * state.l**-0.5


def exact_psi(traj: Trajectory, rs: ReferenceSolution, x):
    """psi(x) = R(n) Im(e^{i eta(n)} zeta(x)) on the cell (n-1, n]."""
    xa = np.asarray(x, dtype=float)
    logR, eta, _ = traj.at_x(xa)
    z = rs.evaluate(xa).zeta
    return np.exp(logR) * np.imag(np.exp(1j * eta) * z)


def window_l2_mass(traj: Trajectory, rs: ReferenceSolution, l: int) -> float:
    """Integral of psi^2 over the l-th window, cell by cell (partial end cells included)."""
    from .propagation import quadrature_nodes

    lo, hi = window_bounds(rs.params.F, l)
    n = np.arange(math.floor(lo) + 1, math.ceil(hi) + 1)
    a = np.maximum(n - 1.0, lo)
    b = np.minimum(n.astype(float), hi)
    keep = b > a
    n, a, b = n[keep], a[keep], b[keep]
    # one Gauss-Legendre rule sized for the fastest oscillation in the window
    m = quadrature_nodes(float(rs.gamma_phase(float(n[-1]))[1]))
    t, w = np.polynomial.legendre.leggauss(m)
    xs = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * t[None, :]
    i = traj.index(n)
    z = rs.evaluate(xs.ravel()).zeta.reshape(xs.shape)
    psi = np.exp(traj.logR[i])[:, None] * np.imag(np.exp(1j * traj.eta[i])[:, None] * z)
    cells = 0.5 * (b - a) * (psi * psi @ w)
    return math.fsum(cells)


def spectral_scan_row(params: ModelParams, l_max: int = 2000, M_min: int = 16, theta0: float = 0.0) -> dict:
    """Classification and convergence report for one energy (rational F)."""
    from .prufer import build_resonance_grid

    p, q = _rational(params)
    rs = ReferenceSolution(params)
    ec = classify_energy(params)
    l_min = max(q, 20 - 20 % q if q <= 20 else q)
    grid = build_resonance_grid(rs, l_min, l_max)
    cs = coarse_run(rs, grid, theta0)
    sel = cs.l % q == 0
    rep = convergence_diagnostic(cs.logRl[sel], cs.l[sel] // q, M_min=max(M_min, int(cs.l[sel][0] // q)))
    return {
        "E": params.E,
        "exceptional": ec.exceptional,
        "m": ec.m,
        "w_abs": abs(ec.w),
        "converged": rep.converged,
        "limit_est": rep.limit_est,
        "slope": rep.slope,
        "profile": rep.profile,
    }
