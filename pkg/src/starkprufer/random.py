"""Monte Carlo harness for random couplings g_n: samplers, growth exponents,
ratio convergence and detection of the subordinate solution.

Couplings come from a counter-based Philox stream keyed by (seed, realization
index); g_n is a fixed function of the raw draw number n - 1, so any window of
the sequence can be produced without generating what precedes it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .propagation import p_minus
from .special import ModelParams, ReferenceSolution

MAX_N = 100_000_000
FAMILIES = ("gaussian", "rademacher", "uniform")
FIT_START = 10
FIT_POINTS = 64
PMINUS_TOL = 1e-6


def default_threads() -> int:
    env = os.environ.get("STARKPRUFER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingSampler:
    """g_n with mean 0 and variance lam^2."""

    family: str = "gaussian"
    lam: float = 1.0
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.index < 0:
            raise ValueError("realization index must be >= 0")

    def with_index(self, index: int) -> "CouplingSampler":
        return CouplingSampler(self.family, self.lam, self.seed, index)

    @property
    def key(self) -> np.ndarray:
        return np.random.SeedSequence(self.seed, spawn_key=(self.index,)).generate_state(2, np.uint64)

    def raw(self, start: int, stop: int) -> np.ndarray:
        """Raw 64-bit draws for g_n, start <= n < stop (n >= 1)."""
        if start < 1 or stop < start:
            raise ValueError("need 1 <= start <= stop")
        i0 = start - 1
        block, lane = divmod(i0, 4)
        bg = np.random.Philox(key=self.key, counter=np.array([block, 0, 0, 0], dtype=np.uint64))
        return bg.random_raw(lane + stop - start)[lane:]

    def __call__(self, n: np.ndarray) -> np.ndarray:
        """g at the consecutive integers ``n`` (callable coupling protocol)."""
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.empty(0)
        if np.any(np.diff(n) != 1):
            raise ValueError("sampler expects consecutive integers")
        return self.values(int(n[0]), int(n[-1]) + 1)

    def values(self, start: int, stop: int) -> np.ndarray:
        r = self.raw(start, stop)
        lam = self.lam
        if self.family == "rademacher":
            return np.where(r >> np.uint64(63), lam, -lam).astype(float)
        u = ((r >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53  # in (0, 1)
        if self.family == "gaussian":
            return lam * ndtri(u)
        return lam * math.sqrt(3.0) * (2 * u - 1)


def sample_couplings(sampler: CouplingSampler, n_max: int) -> np.ndarray:
    """g_1 .. g_{n_max}."""
    if n_max > MAX_N:
        raise ValueError(f"n_max beyond the {MAX_N:.0e} guard")
    return sampler.values(1, n_max + 1)


def fourth_moment(g: np.ndarray) -> float:
    """Sample E[g^4]; the finite-sample stand-in for the moment assumption."""
    return float(np.mean(np.asarray(g) ** 4))


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _phase_cache(params: ModelParams, N: int):
    rs = ReferenceSolution(params)
    gmod, g1 = rs.phase_arrays(1, N)
    z, dz = rs.zeta(0.0)
    return rs, gmod, g1, complex(z), complex(dz)


def fit_points(N: int, start: int = FIT_START, count: int = FIT_POINTS) -> np.ndarray:
    return np.unique(np.geomspace(start, N, count).round().astype(np.int64))


def growth_slope(n: np.ndarray, logR: np.ndarray) -> float:
    """Least-squares slope of log R against log n."""
    return float(np.polyfit(np.log(n), logR, 1)[0])


def _initial(z0: complex, dz0: complex, theta0: float) -> tuple[float, float]:
    rho = math.cos(theta0) * z0.conjugate() - math.sin(theta0) * dz0.conjugate()
    return math.log(abs(rho)), math.atan2(rho.imag, rho.real)


def _run(params: ModelParams, g: np.ndarray, theta0: float, rec: np.ndarray):
    """(logR, eta) at the integers ``rec`` in [1, N], N = len(g) + 1."""
    N = g.size + 1
    _, gmod, g1, z0, dz0 = _phase_cache(params, N)
    logR, eta = _initial(z0, dz0, theta0)
    out_l = np.empty(rec.size)
    out_e = np.empty(rec.size)
    logR, eta, pos = _kernels.prufer_steps(gmod, g1, g, logR, eta, rec - 1, out_l, out_e, 0)
    return out_l, out_e


def _map(fn, items, threads: int | None):
    threads = threads or default_threads()
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _validate(N: int):
    if N < 2 or N > MAX_N:
        raise ValueError(f"N must lie in [2, {MAX_N:.0e}]")


# ---------------------------------------------------------------------------
# growth exponent
# ---------------------------------------------------------------------------


@dataclass
class ExponentResult:
    """Per-trial exponents log R(N)/log N and their aggregate.

    ``slope_*`` hold the least-squares slope of log R(n) against log n over
    log-spaced n in [10, N], a secondary estimator free of the O(1/log N)
    offset but noisier per trial.  ``stabilization`` is the median range of
    log R(n)/log n over n in [N/10, N].
    """

    mean_exp: float
    stderr: float
    per_trial: list[float]
    slope_mean: float
    slope_stderr: float
    per_trial_slope: list[float]
    stabilization: float
    indices: list[int] = field(default_factory=list)


def _mean_se(v: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(v, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("nan")
    return float(a.mean()), se


def mc_radius_exponent(
    params: ModelParams,
    sampler: CouplingSampler,
    N: int = 100_000,
    trials: int = 100,
    theta0: float = 0.0,
    threads: int | None = None,
    check_preconditions: bool = True,
) -> ExponentResult:
    """Growth exponent of R(n) under random couplings; trial i uses realization index i."""
    if check_preconditions and (N < 10_000 or trials < 10):
        raise ValueError("need N >= 1e4 and trials >= 10")
    _validate(N)
    rec = fit_points(N)
    tail = rec >= N // 10

    def one(i: int):
        g = sample_couplings(sampler.with_index(i), N - 1)
        logR, _ = _run(params, g, theta0, rec)
        ratio = logR[tail] / np.log(rec[tail])
        return float(logR[-1] / math.log(N)), growth_slope(rec, logR), float(np.ptp(ratio))

    res = _map(one, range(trials), threads)
    ends = [r[0] for r in res]
    slopes = [r[1] for r in res]
    m, se = _mean_se(ends)
    ms, sse = _mean_se(slopes)
    return ExponentResult(m, se, ends, ms, sse, slopes, float(np.median([r[2] for r in res])), list(range(trials)))


# ---------------------------------------------------------------------------
# ratio of two solutions on the same realization
# ---------------------------------------------------------------------------


@dataclass
class RatioResult:
    rho_limit: float
    rate_exp: float
    n: np.ndarray
    rho: np.ndarray
    wronskian_residual: float


def ratio_convergence(
    params: ModelParams, sampler: CouplingSampler, theta_plus: float, theta_minus: float, N: int = 100_000
) -> RatioResult:
    """rho(n) = R_+(n)/R_-(n) on one realization and the rate at which it settles.

    rate_exp is the slope of log|rho(n) - rho(N)| against log n for n <= N/10,
    beyond which the reference value itself dominates the difference.
    """
    if theta_plus == theta_minus:
        raise ValueError("identical initial angles")
    _validate(N)
    rec = fit_points(N, 1, 96)
    g = sample_couplings(sampler, N - 1)
    lp, ep = _run(params, g, theta_plus, rec)
    lm, em = _run(params, g, theta_minus, rec)
    rho = np.exp(lp - lm)
    lim = float(rho[-1])
    # R+ R- |sin(eta+ - eta-)| equals the constant |W(psi+, psi-)| = |sin(theta+ - theta-)|
    W = abs(math.sin(theta_plus - theta_minus))
    wr = np.exp(lp + lm) * np.abs(np.sin(ep - em))
    resid = float(np.max(np.abs(wr - W)) / max(W, 1e-300)) if W > 0 else float(np.max(wr))
    sel = (rec >= FIT_START) & (rec <= N // 10)
    d = np.abs(rho[sel] - lim)
    ok = d > 0
    rate = float(np.polyfit(np.log(rec[sel][ok]), np.log(d[ok]), 1)[0]) if ok.sum() >= 3 else float("nan")
    return RatioResult(lim, rate, rec, rho, resid)


# ---------------------------------------------------------------------------
# subordinate solution
# ---------------------------------------------------------------------------


@dataclass
class SubordinateResult:
    """Output of :func:`detect_subordinate`.

    ``decay_exp`` and ``generic_exp`` are least-squares slopes of log R(n)
    against log n over [10, N] for the re-propagated subordinate candidate and
    the solution with initial angle theta0 + pi/2.  ``norm_exp`` is the slope of
    log ||T_n||; since det T_n = 1 the smallest singular value decays like
    n^-norm_exp.
    """

    applicable: bool
    u_inf: np.ndarray | None
    decay_exp: float
    generic_exp: float
    theta0: float
    norm_exp: float
    pminus_converged: bool
    pminus_oscillation: float
    meta: dict = field(default_factory=dict)


def transfer_records(params: ModelParams, g: np.ndarray, rec: np.ndarray):
    """(a, b, log_scale) of T_k = A_k ... A_1 at the step counts ``rec``."""
    N = g.size + 1
    _, gmod, g1, _, _ = _phase_cache(params, N)
    out_a = np.empty(rec.size, dtype=complex)
    out_b = np.empty(rec.size, dtype=complex)
    out_l = np.empty(rec.size)
    _kernels.su11_steps(gmod, g1, g, 1 + 0j, 0j, 0.0, 0, 64, rec, out_a, out_b, out_l, 0)
    return out_a, out_b, out_l


def real_initial_angle(params: ModelParams, u1: complex) -> float:
    """theta0 of psi = 2 Re(u1 zeta) on the first cell (psi(0) = sin, psi'(0) = cos)."""
    z, dz = ReferenceSolution(params).zeta(0.0)
    psi0 = 2 * (u1 * complex(z)).real
    dpsi0 = 2 * (u1 * complex(dz)).real
    return math.atan2(psi0, dpsi0)


def detect_subordinate(params: ModelParams, sampler: CouplingSampler, N: int = 100_000) -> SubordinateResult:
    """Locate the limiting contracting direction of T_N and measure both branches.

    P_-(T_n) = (1, e^{i phi_n})/sqrt 2 is followed over log-spaced n and counts
    as converged when phi_n varies by less than 1e-6 over the last decade.
    Its value at N, rewritten as (u1, conj u1) with u1 = e^{-i phi/2}/sqrt 2,
    gives a real solution that is re-propagated on the same couplings.
    Non-convergence is reported, not raised.
    """
    if N < 10_000:
        raise ValueError("need N >= 1e4")
    nan = float("nan")
    if sampler.lam == 0:
        return SubordinateResult(False, None, nan, nan, nan, 0.0, False, nan,
                                 {"reason": "||T_n|| = 1 for all n; no contracting direction"})
    g = sample_couplings(sampler, N - 1)
    k = np.unique(np.concatenate([fit_points(N - 1, 1, 96), np.geomspace(N // 10, N - 1, 64).round()]).astype(np.int64))
    a, b, logs = transfer_records(params, g, k)
    phi = np.angle(-a * np.conj(b))
    osc = float(np.ptp(np.unwrap(phi[k >= (N - 1) // 10])))
    n = k + 1
    use = n >= FIT_START
    norm_exp = growth_slope(n[use], (logs + np.log(np.abs(a) + np.abs(b)))[use])

    u = p_minus(complex(a[-1]), complex(b[-1]))
    ph = float(np.angle(u[1] / u[0]))
    u1 = complex(math.cos(-ph / 2), math.sin(-ph / 2)) / math.sqrt(2)
    th0 = real_initial_angle(params, u1)
    rec = fit_points(N)
    ls, _ = _run(params, g, th0, rec)
    lg, _ = _run(params, g, th0 + math.pi / 2, rec)
    return SubordinateResult(
        True,
        np.array([u1, u1.conjugate()]),
        growth_slope(rec, ls),
        growth_slope(rec, lg),
        th0,
        norm_exp,
        osc < PMINUS_TOL,
        osc,
    )


def subordinate_exponents(params: ModelParams, sampler: CouplingSampler, N: int, trials: int,
                          threads: int | None = None) -> list[SubordinateResult]:
    """detect_subordinate on realization indices 0..trials-1."""
    return _map(lambda i: detect_subordinate(params, sampler.with_index(i), N), range(trials), threads)


@dataclass
class ScanRow:
    """One F of the transition scan.

    The proxy uses decay_exp = -norm_exp, the decay of the smallest singular
    value of T_n.  ``sub_exp`` is the slope of the re-propagated candidate; it
    is pinned to the contracting direction at n = N and runs steeper than the
    singular value at desk-scale N, so it is reported but not used.
    """

    F: float
    lam: float
    N: int
    trials: int
    mean_exp: float
    stderr: float
    decay_exp: float
    decay_stderr: float
    proxy: float
    proxy_stderr: float
    sub_exp: float
    sub_proxy: float

    @property
    def sign(self) -> str:
        """'-', '+' or '0' (|proxy| within two standard errors)."""
        if abs(self.proxy) <= 2 * self.proxy_stderr:
            return "0"
        return "+" if self.proxy > 0 else "-"


def transition_scan(
    F_grid: Sequence[float],
    lam: float = 1.0,
    N: int = 100_000,
    trials: int = 100,
    family: str = "gaussian",
    seed: int = 0,
    threads: int | None = None,
) -> list[ScanRow]:
    """Square-integrability proxy 2 * decay_exp + 1/2 across F.

    The subordinate amplitude behaves like x^{-1/4} R(x) with R ~ x^{decay_exp},
    so it is square integrable iff the proxy is negative.  ``mean_exp`` is the
    growth exponent of the orthogonal (generic) solution.
    """
    if any(not 0 < F < 4 * lam * lam for F in F_grid):
        raise ValueError("F grid must lie in (0, 4 lam^2)")
    rows = []
    for F in F_grid:
        params = ModelParams(float(F))
        res = subordinate_exponents(params, CouplingSampler(family, lam, seed), N, trials, threads)
        decay, dse = _mean_se([-r.norm_exp for r in res])
        mg, mse = _mean_se([r.generic_exp for r in res])
        sub, _ = _mean_se([r.decay_exp for r in res])
        rows.append(ScanRow(float(F), lam, N, trials, mg, mse, decay, dse, 2 * decay + 0.5, 2 * dse, sub, 2 * sub + 0.5))
        _phase_cache.cache_clear()
    return rows


@dataclass
class MassRatio:
    n: np.ndarray
    ratio: np.ndarray
    slope: float
    radius_slope: float


def subordinacy_profile(params: ModelParams, sampler: CouplingSampler, N: int = 100_000,
                        fit: tuple[int, int] = (1000, 100_000)) -> MassRatio:
    """Cumulative L^2 mass of the subordinate candidate over that of the generic branch.

    Cell masses use the comparability estimate R(n)^2 / (2 sqrt(F n)).  Returns
    the fitted log-log slope of the mass ratio over ``fit`` and the slope of
    the radius ratio R_sub/R_gen over the same range.
    """
    det = detect_subordinate(params, sampler, N)
    if not det.applicable:
        raise ValueError("no subordinate candidate for lam = 0")
    g = sample_couplings(sampler, N - 1)
    n = np.arange(1, N + 1)
    ls, _ = _run(params, g, det.theta0, n)
    lg, _ = _run(params, g, det.theta0 + math.pi / 2, n)
    w = 1.0 / (2.0 * np.sqrt(params.F * n))
    ratio = np.cumsum(np.exp(2 * ls) * w) / np.cumsum(np.exp(2 * lg) * w)
    pts = fit_points(min(fit[1], N), fit[0], 64)
    slope = growth_slope(pts, np.log(ratio[pts - 1]))
    rslope = growth_slope(pts, (ls - lg)[pts - 1])
    return MassRatio(n, ratio, slope, rslope)
