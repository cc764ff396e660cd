"""Prüfer variables relative to the reference solution, their exact and
second-order recursions, slow variables and the resonance grid.

With rho(n) = R(n) e^{i eta(n)} = 2i alpha(n) and theta(n) = eta(n) + gamma(n),

    rho(n+1) = rho(n) (1 + U(n) sin(theta) e^{-i theta}),   U(n) = g_n / gamma'(n),

which is all the exact recursion needs; the radius is carried as log R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .special import ReferenceSolution

APPROX_MAX_U = 0.5


@dataclass(frozen=True)
class PruferState:
    n: int
    logR: float
    eta: float

    @property
    def R(self) -> float:
        return math.exp(self.logR)

    @property
    def rho(self) -> complex:
        return complex(math.exp(self.logR) * math.cos(self.eta), math.exp(self.logR) * math.sin(self.eta))

    def theta(self, rs: ReferenceSolution) -> float:
        return self.eta + float(rs.evaluate(float(self.n)).gamma_mod)


def initial_state(rs: ReferenceSolution, theta0: float = 0.0) -> PruferState:
    """State on the first cell for psi(0) = sin(theta0), psi'(0+) = cos(theta0)."""
    z, dz = rs.zeta(0.0)
    z, dz = complex(z), complex(dz)
    rho = math.cos(theta0) * z.conjugate() - math.sin(theta0) * dz.conjugate()
    return PruferState(1, math.log(abs(rho)), math.atan2(rho.imag, rho.real))


def coupling_U(rs: ReferenceSolution, n, g_n):
    """U(n) = g_n / gamma'(n)."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError("U(n) is defined for n >= 1")
    g1 = rs.gamma_phase(np.asarray(n, dtype=float))[1]
    return np.asarray(g_n) / g1


def step_exact(state: PruferState, U: float, rs: ReferenceSolution) -> PruferState:
    th = state.theta(rs)
    s, c = math.sin(th), math.cos(th)
    dlog = 0.5 * math.log1p(U * (2 * s * c + U * s * s))
    deta = math.atan2(-U * s * s, 1 + U * s * c)
    return PruferState(state.n + 1, state.logR + dlog, state.eta + deta)


def exact_increments(U, theta):
    """(d log R, d eta) of one exact step, vectorized over U and theta."""
    U = np.asarray(U, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    return 0.5 * np.log1p(U * (2 * s * c + U * s * s)), np.arctan2(-U * s * s, 1 + U * s * c)


def approx_increments(U, theta):
    """Second order expansion of :func:`exact_increments` in U."""
    U = np.asarray(U, dtype=float)
    if np.any(np.abs(U) > APPROX_MAX_U):
        raise ValueError(f"second order expansion needs |U| <= {APPROX_MAX_U}")
    t2, t4 = 2 * np.asarray(theta), 4 * np.asarray(theta)
    dlog = U / 2 * np.sin(t2) + U**2 / 8 - U**2 / 8 * (2 * np.cos(t2) - np.cos(t4))
    deta = -U / 2 + U / 2 * np.cos(t2) + U**2 / 4 * (np.sin(t2) - 0.5 * np.sin(t4))
    return dlog, deta


def step_approx(state: PruferState, U: float, rs: ReferenceSolution) -> tuple[float, float]:
    dlog, deta = approx_increments(U, state.theta(rs))
    return float(dlog), float(deta)


def slow_variables(state: PruferState, rs: ReferenceSolution) -> tuple[float, float]:
    """(eta~, gamma~) at the integer ``state.n``; they add up to theta."""
    p = rs.params
    shift = p.lam * math.sqrt(state.n / p.F)
    gamma = float(rs.gamma_phase(float(state.n))[0])
    return state.eta + shift, gamma - shift


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def coupling_values(rs: ReferenceSolution, couplings, start: int, stop: int) -> np.ndarray:
    """g_n for start <= n < stop from a scalar, an array (g[0] = g_1) or a callable."""
    if couplings is None:
        return np.full(stop - start, rs.params.lam, dtype=float)
    if callable(couplings):
        return np.asarray(couplings(np.arange(start, stop)), dtype=float)
    arr = np.asarray(couplings, dtype=float)
    if arr.ndim == 0:
        return np.full(stop - start, float(arr))
    if arr.size < stop - 1:
        raise ValueError(f"need couplings up to n={stop - 1}, got {arr.size}")
    return np.ascontiguousarray(arr[start - 1 : stop - 1])


@dataclass
class Trajectory:
    """Prüfer states recorded at the integers ``n`` (left-continuous in x)."""

    n: np.ndarray
    logR: np.ndarray
    eta: np.ndarray
    gamma_mod: np.ndarray
    theta0: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def theta(self) -> np.ndarray:
        return self.eta + self.gamma_mod

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.logR + 1j * self.eta)

    @property
    def alpha(self) -> np.ndarray:
        """Coefficient of zeta on the cell (n-1, n)."""
        return self.rho / 2j

    def index(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        i = np.searchsorted(self.n, n)
        if np.any(i >= self.n.size) or np.any(self.n[np.minimum(i, self.n.size - 1)] != n):
            raise KeyError("requested integers were not recorded")
        return i

    def at_x(self, x):
        """(log R, eta, theta) at real x via the left-continuous convention n = ceil(x)."""
        i = self.index(np.ceil(np.asarray(x, dtype=float)).astype(np.int64))
        return self.logR[i], self.eta[i], self.theta[i]


def run_prufer(
    rs: ReferenceSolution,
    N: int,
    couplings=None,
    theta0: float = 0.0,
    record: Sequence[int] | None = None,
    initial: PruferState | None = None,
) -> Trajectory:
    """Exact recursion from the cell (0, 1) to the cell (N-1, N).

    ``record`` selects integers in [1, N] to keep (default: all).  Couplings
    default to the deterministic g_n = lam.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > 100_000_000:
        raise ValueError("N beyond the 1e8 resource guard")
    rec = np.arange(1, N + 1) if record is None else np.unique(np.asarray(record, dtype=np.int64))
    if rec.size and (rec[0] < 1 or rec[-1] > N):
        raise ValueError("record indices must lie in [1, N]")
    st = initial or initial_state(rs, theta0)
    if st.n != 1:
        raise ValueError("initial state must sit on the first cell")
    out_logR = np.empty(rec.size)
    out_eta = np.empty(rec.size)
    logR, eta, pos = st.logR, st.eta, 0
    chunk = rs.policy.chunk
    for s in range(1, N, chunk):
        e = min(s + chunk, N)
        gmod, g1 = rs.phase_arrays(s, e)
        g = coupling_values(rs, couplings, s, e)
        lo, hi = np.searchsorted(rec, [s, e])
        local = (rec[lo:hi] - s).astype(np.int64)
        logR, eta, pos = _kernels.prufer_steps(gmod, g1, g, logR, eta, local, out_logR, out_eta, pos)
    if pos < rec.size:
        out_logR[pos], out_eta[pos] = logR, eta
        pos += 1
    assert pos == rec.size
    gm = rs.evaluate(rec.astype(float)).gamma_mod if rec.size else np.empty(0)
    return Trajectory(rec, out_logR, out_eta, np.atleast_1d(gm), theta0)


def run_prufer_python(rs: ReferenceSolution, N: int, couplings=None, theta0: float = 0.0) -> Trajectory:
    """Reference implementation stepping :func:`step_exact` one integer at a time."""
    st = initial_state(rs, theta0)
    g = coupling_values(rs, couplings, 1, N) if N > 1 else np.empty(0)
    ns, lr, et = [st.n], [st.logR], [st.eta]
    for k in range(N - 1):
        U = float(g[k]) / float(rs.gamma_phase(float(st.n))[1])
        st = step_exact(st, U, rs)
        ns.append(st.n)
        lr.append(st.logR)
        et.append(st.eta)
    n = np.array(ns)
    return Trajectory(n, np.array(lr), np.array(et), np.atleast_1d(rs.evaluate(n.astype(float)).gamma_mod), theta0)


# ---------------------------------------------------------------------------
# resonance grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceGrid:
    l: np.ndarray
    X: np.ndarray
    x: np.ndarray
    gamma1_at_x: np.ndarray

    @property
    def l_min(self) -> int:
        return int(self.l[0])

    @property
    def l_max(self) -> int:
        return int(self.l[-1])

    def x_of(self, l) -> np.ndarray:
        return self.x[np.asarray(l) - self.l_min]

    def X_of(self, l) -> np.ndarray:
        return self.X[np.asarray(l) - self.l_min]

    def sample_integers(self) -> np.ndarray:
        """n_l = x_l + 1/2, where the step functions take their x_l values."""
        return (self.x + 0.5).astype(np.int64)


def sampling_points(F: float, l) -> np.ndarray:
    """x_l = ceil((pi^2/F)(l - 1/2)^2) - 1/2."""
    l = np.asarray(l, dtype=float)
    return np.ceil(math.pi**2 / F * (l - 0.5) ** 2) - 0.5


class GridError(RuntimeError):
    pass


def build_resonance_grid(rs: ReferenceSolution, l_min: int = 20, l_max: int = 200, tol: float = 1e-10) -> ResonanceGrid:
    """Solve gamma'(X_l) = pi l by safeguarded Newton and tabulate x_l.

    x_{l_max + 1} is included so that every window [x_l, x_{l+1}] is available.
    """
    if l_min < 1 or l_max < l_min:
        raise ValueError("need 1 <= l_min <= l_max")
    F, E = rs.params.F, rs.params.E
    ls = np.arange(l_min, l_max + 2)
    target = math.pi * ls
    lo = math.pi**2 * (ls - 1.0) ** 2 / F
    hi = math.pi**2 * (ls + 1.0) ** 2 / F
    f_lo = rs.gamma_phase(lo)[1] - target
    f_hi = rs.gamma_phase(hi)[1] - target
    if np.any(f_lo > 0) or np.any(f_hi < 0):
        raise GridError("root bracket failed; increase l_min")
    X = np.clip(math.pi**2 * ls**2 / F - E / F, lo, hi)
    for _ in range(100):
        _, g1, g2 = rs.gamma_phase(X)
        f = g1 - target
        lo = np.where(f < 0, X, lo)
        hi = np.where(f > 0, X, hi)
        if np.all(np.abs(f) <= tol):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            Xn = X - f / g2
        bad = ~np.isfinite(Xn) | (Xn <= lo) | (Xn >= hi)
        Xn = np.where(bad, 0.5 * (lo + hi), Xn)
        X = np.where(np.abs(f) <= tol, X, Xn)
    else:
        raise GridError("Newton iteration for X_l did not converge")
    x = sampling_points(F, ls)
    if not (np.all(x[:-1] < X[:-1]) and np.all(X[:-1] < x[1:])):
        raise GridError("x_l and X_l fail to interlace; increase l_min")
    if np.any(np.diff(rs.gamma_phase(x)[1]) <= 0):
        raise GridError("gamma' not monotone on the grid; increase l_min")
    g1x = rs.gamma_phase(x)[1]
    return ResonanceGrid(ls, X, x, g1x)
