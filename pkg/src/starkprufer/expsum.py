"""Exponential sums with phase gamma.

Sums run over integers a < n <= b.  Phases use gamma(n) mod 2 pi (reduced in
extended precision) whenever the multiplier mu is an integer, so windows far
out keep full accuracy; other multipliers fall back to the continuous gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .prufer import ResonanceGrid, build_resonance_grid, sampling_points
from .special import ReferenceSolution

MAX_TERMS = 100_000_000
MAX_PAIRS = 1_000_000_000
# Constant in the effective phase; see effective_phase.
GAMMA_H_CONSTANT = 3 * math.pi / 8
NONZERO_THRESHOLD = 1e-9
_CHUNK = 1 << 20


class ResourceError(RuntimeError):
    pass


class WindowError(ValueError):
    pass


# ---------------------------------------------------------------------------
# phase perturbations
# ---------------------------------------------------------------------------


class Perturbation(Protocol):
    def __call__(self, x): ...

    def derivative(self, x, k: int): ...


@dataclass(frozen=True)
class ZeroPerturbation:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def derivative(self, x, k: int):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SqrtPerturbation:
    """h(x) = c sqrt(x/F); the canonical choice is c = -2 lam."""

    c: float
    F: float

    @classmethod
    def canonical(cls, lam: float, F: float) -> "SqrtPerturbation":
        return cls(-2.0 * lam, F)

    def __call__(self, x):
        return self.c * np.sqrt(np.asarray(x, dtype=float) / self.F)

    def derivative(self, x, k: int):
        if k == 0:
            return self(x)
        # d^k x^(1/2) = (1/2)(1/2 - 1)...(1/2 - k + 1) x^(1/2 - k)
        coef = math.prod(0.5 - i for i in range(k))
        x = np.asarray(x, dtype=float)
        return self.c / math.sqrt(self.F) * coef * x ** (0.5 - k)


@dataclass(frozen=True)
class SampledPerturbation:
    """h known only at the integers n0, n0+1, ... (e.g. 2 eta from a Prüfer run)."""

    n0: int
    values: np.ndarray

    def __call__(self, x):
        n = np.asarray(x)
        if np.any(n != np.round(n)):
            raise ValueError("sampled perturbation is defined at integers only")
        i = np.asarray(n, dtype=np.int64) - self.n0
        if np.any(i < 0) or np.any(i >= self.values.size):
            raise ValueError("integer outside the sampled range")
        return self.values[i]

    def derivative(self, x, k: int):
        if k == 0:
            return self(x)
        raise NotImplementedError("sampled perturbations carry no derivatives")


def _h_values(h, n: np.ndarray) -> np.ndarray | float:
    if h is None:
        return 0.0
    return np.asarray(h(n), dtype=float)


# ---------------------------------------------------------------------------
# raw sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpSumSpec:
    a: float
    b: float
    mu: float = 2.0
    alpha: float = 0.0
    h: Callable | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")

    @property
    def integers(self) -> tuple[int, int]:
        """First and one-past-last integer of (a, b]."""
        return math.floor(self.a) + 1, math.floor(self.b) + 1


def expsum_terms(rs: ReferenceSolution, spec: ExpSumSpec, start: int | None = None, stop: int | None = None):
    """Individual terms e^{i(mu gamma(n) + h(n))} / gamma'(n)^alpha for start <= n < stop."""
    s0, e0 = spec.integers
    s = s0 if start is None else start
    e = e0 if stop is None else stop
    if e - s > MAX_TERMS:
        raise ResourceError(f"{e - s} terms exceed the {MAX_TERMS:.0e} guard")
    n = np.arange(s, e)
    if n.size == 0:
        return n, np.empty(0, dtype=complex)
    if n[0] < 1:
        raise ValueError("sums start at n >= 1")
    mu = spec.mu
    if float(mu).is_integer():
        gmod, g1 = rs.phase_arrays(s, e)
        phase = np.mod(int(mu) * gmod, 2 * math.pi)
    else:
        d = rs.evaluate(n.astype(float))
        phase, g1 = mu * d.gamma, d.gamma1
    phase = phase + _h_values(spec.h, n)
    t = np.exp(1j * phase)
    if spec.alpha:
        t = t / g1**spec.alpha
    return n, t


def raw_expsum(rs: ReferenceSolution, spec: ExpSumSpec) -> complex:
    """Brute-force sum with exactly rounded (fsum) accumulation."""
    s0, e0 = spec.integers
    if e0 - s0 > MAX_TERMS:
        raise ResourceError(f"{e0 - s0} terms exceed the {MAX_TERMS:.0e} guard")
    re, im = [], []
    for s in range(s0, e0, _CHUNK):
        _, t = expsum_terms(rs, spec, s, min(s + _CHUNK, e0))
        re.append(math.fsum(t.real))
        im.append(math.fsum(t.imag))
    return complex(math.fsum(re), math.fsum(im))


def vdc_envelope(a: float, b: float, mu: float = 2.0) -> float:
    """b^{1/4} a^{-1/2} (b - a + a^{1/2}); the rough second-derivative bound."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    return b**0.25 * a**-0.5 * (b - a + math.sqrt(a))


def kuzmin_landau_envelope(kappa: float) -> float:
    """1/kappa, kappa being the distance of f' from the integers."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return 1.0 / kappa


# ---------------------------------------------------------------------------
# bound checks on the resonance windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    l: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def window_integers(F: float, l: int) -> tuple[int, int]:
    """Integers n with x_l < n <= x_{l+1}, as (first, one past last)."""
    xl, xl1 = sampling_points(F, [l, l + 1])
    return int(xl + 0.5), int(xl1 + 0.5)


def max_subwindow_sum(terms: np.ndarray, samples: int = 256) -> float:
    """max |sum over a contiguous run| with run endpoints on an even grid of cut points."""
    S = np.concatenate([[0.0], np.cumsum(terms)])
    cuts = np.unique(np.linspace(0, S.size - 1, min(samples, S.size)).round().astype(np.int64))
    P = S[cuts]
    return float(np.max(np.abs(P[:, None] - P[None, :])))


def interval_bound_check(
    rs: ReferenceSolution, l: int, alpha: float, beta: float, mu: float = 2.0, h=None, samples: int = 256
) -> BoundReport:
    """Sub-window sums inside [x_l, x_{l+1}] against l^{1/2 - alpha} (1 + l^{1 - 2 beta})."""
    s, e = window_integers(rs.params.F, l)
    spec = ExpSumSpec(s - 1, e - 1, mu, alpha, h)
    _, t = expsum_terms(rs, spec)
    rhs = l ** (0.5 - alpha) * (1 + l ** (1 - 2 * beta))
    return BoundReport(l, max_subwindow_sum(t, samples), rhs)


def away_bound_check(
    rs: ReferenceSolution,
    l: int,
    alpha: float,
    beta: float,
    sigma: float,
    h=None,
    mu: float = 2.0,
    C: float = 1.0,
    window: tuple[float, float] | None = None,
    grid: ResonanceGrid | None = None,
    samples: int = 256,
) -> BoundReport:
    """Sub-window sums inside [X_l + C l^sigma, X_{l+1} - C l^sigma] against
    l^{1 - alpha - sigma} (1 + l^{1 - 2 beta})."""
    if not 0.5 <= sigma <= 1:
        raise ValueError("sigma must lie in [1/2, 1]")
    grid = grid or build_resonance_grid(rs, l, l)
    Xl, Xl1 = grid.X_of(l), grid.X_of(l + 1)
    lo, hi = Xl + C * l**sigma, Xl1 - C * l**sigma
    if window is None:
        window = (lo, hi)
    a, b = window
    if a < lo or b > hi or not a < b:
        raise WindowError(f"window {window} touches the excluded neighbourhoods of X_l, X_l+1")
    spec = ExpSumSpec(a, b, mu, alpha, h)
    _, t = expsum_terms(rs, spec)
    rhs = l ** (1 - alpha - sigma) * (1 + l ** (1 - 2 * beta))
    lhs = max_subwindow_sum(t, samples) if t.size else 0.0
    return BoundReport(l, lhs, rhs)


# ---------------------------------------------------------------------------
# precise asymptotics
# ---------------------------------------------------------------------------


def effective_phase(F: float, E: float, l, h=None, constant: float = GAMMA_H_CONSTANT):
    """Gamma_h(l) = -pi^3 l^3/(3F) + pi E l/F + constant + h(pi^2 l^2/F)/2."""
    l = np.asarray(l, dtype=float)
    val = -(math.pi**3) * l**3 / (3 * F) + math.pi * E * l / F + constant
    if h is not None:
        val = val + 0.5 * np.asarray(h(math.pi**2 * l**2 / F), dtype=float)
    return val


def _mod_2pi_cubic(F: float, E: float, l: int, h, constant: float) -> float:
    # the cubic term is huge for large l; reduce in extended precision
    ld = np.longdouble
    pi = np.arctan(ld(1)) * 4
    lL = ld(l)
    val = -(pi**3) * lL**3 / (3 * ld(F)) + pi * ld(E) * lL / ld(F)
    val = float(np.fmod(val, 2 * pi))
    val += constant
    if h is not None:
        val += 0.5 * float(h(math.pi**2 * l * l / F))
    return val


@dataclass(frozen=True)
class PreciseAsymptotic:
    main: complex
    boundary_left: complex
    boundary_right: complex

    @property
    def predicted(self) -> complex:
        return self.main - self.boundary_right + self.boundary_left


def precise_asymptotic(
    rs: ReferenceSolution, l: int, h=None, constant: float = GAMMA_H_CONSTANT
) -> PreciseAsymptotic:
    """Stationary-phase prediction for sum_{x_l < n <= x_{l+1}} e^{i(2 gamma(n) + h(n))}/gamma'(n).

    Error O(l^{-3/2}).
    """
    F, E = rs.params.F, rs.params.E
    G = _mod_2pi_cubic(F, E, l, h, constant)
    main = math.sqrt(2 / (F * l)) * complex(math.cos(2 * G), math.sin(2 * G))
    xs = sampling_points(F, [l, l + 1])
    gmod = rs.evaluate(xs).gamma_mod
    hx = np.zeros(2) if h is None else np.asarray(h(xs), dtype=float)

    def boundary(k: int, m: int) -> complex:
        ph = 2 * float(gmod[k]) + float(hx[k]) - math.pi / 2 - math.pi * (m % 2)
        return complex(math.cos(ph), math.sin(ph)) / (2 * math.pi * m)

    return PreciseAsymptotic(main, boundary(0, l), boundary(1, l + 1))


def window_sum(rs: ReferenceSolution, l: int, h=None, mu: float = 2.0, alpha: float = 1.0) -> complex:
    """raw_expsum over the resonance window (x_l, x_{l+1}]."""
    xs = sampling_points(rs.params.F, [l, l + 1])
    return raw_expsum(rs, ExpSumSpec(float(xs[0]), float(xs[1]), mu, alpha, h))


# ---------------------------------------------------------------------------
# double and inverse-square sums
# ---------------------------------------------------------------------------


def _tilde_weights(rs: ReferenceSolution, l: int, lam: float):
    s, e = window_integers(rs.params.F, l)
    gmod, g1 = rs.phase_arrays(s, e)
    n = np.arange(s, e, dtype=float)
    ph = 2 * gmod - 2 * lam * np.sqrt(n / rs.params.F)
    return np.exp(1j * ph) / g1


def double_sum(rs: ReferenceSolution, l: int, lam: float | None = None) -> tuple[complex, float]:
    """sum_{x_l<n<=x_{l+1}} sum_{n<j<=x_{l+1}} e^{2i(g~(n) - g~(j))}/(gamma'(n) gamma'(j))
    and S_l = Im(value)/4, with g~(x) = gamma(x) - lam sqrt(x/F).

    Uses the suffix-sum form sum_n w(n) conj(sum_{j>n} w(j)).
    """
    lam = rs.params.lam if lam is None else lam
    w = _tilde_weights(rs, l, lam)
    if w.size**2 > MAX_PAIRS:
        raise ResourceError("window too long for the double sum guard")
    tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    value = complex(np.sum(w * np.conj(tail)))
    return value, value.imag / 4


def double_sum_naive(rs: ReferenceSolution, l: int, lam: float | None = None) -> complex:
    """O(L^2) evaluation of :func:`double_sum`, kept as a cross-check."""
    lam = rs.params.lam if lam is None else lam
    w = _tilde_weights(rs, l, lam)
    if w.size**2 > MAX_PAIRS:
        raise ResourceError("window too long for the double sum guard")
    M = w[:, None] * np.conj(w[None, :])
    return complex(np.sum(np.triu(M, k=1)))


def inverse_square_sum(rs: ReferenceSolution, l: int) -> float:
    """sum_{x_l<n<=x_{l+1}} gamma'(n)^{-2}, close to 2/(F l)."""
    s, e = window_integers(rs.params.F, l)
    _, g1 = rs.phase_arrays(s, e)
    return math.fsum(g1**-2.0)


# ---------------------------------------------------------------------------
# cubic Gauss sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussSumSpec:
    p: int
    q: int
    E: float = 0.0
    lam: float = 0.0
    m: int | None = None

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be positive")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError("p and q must be coprime")


def cubic_gauss_sum(spec: GaussSumSpec) -> complex:
    """w = sum_{j<q} exp(-2 pi i (p/q) j^3 + 6 i p (E - lam) j / (q pi)), or with ``m`` set,
    sum_{j<q} exp(-2 pi i (p j^3 - j m)/q)."""
    p, q = spec.p, spec.q
    j = np.arange(q, dtype=np.int64)
    # reduce p j^3 mod q in exact integer arithmetic
    r = np.array([(p * int(k) ** 3) % q for k in j], dtype=np.int64)
    if spec.m is not None:
        r = (r - j * spec.m) % q
        ph = -2 * math.pi * r / q
    else:
        ph = -2 * math.pi * r / q + 6 * p * (spec.E - spec.lam) * j / (q * math.pi)
    t = np.exp(1j * ph)
    return complex(math.fsum(t.real), math.fsum(t.imag))


def gauss_sum_profile(p: int, q: int) -> np.ndarray:
    """w_m for m = 0..q-1."""
    GaussSumSpec(p, q)
    j = np.arange(q, dtype=np.int64)
    cube = np.array([(p * int(k) ** 3) % q for k in j], dtype=np.int64)
    r = (cube[None, :] - np.outer(np.arange(q, dtype=np.int64), j) % q) % q
    return np.exp(-2j * math.pi * r / q).sum(axis=1)


def nonvanishing_count(w: np.ndarray, q: int) -> int:
    return int(np.sum(np.abs(w) > q * NONZERO_THRESHOLD))
