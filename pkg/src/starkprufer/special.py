"""Real Airy functions and the Stark reference solution.

The reference solution is

    zeta(x) = (pi / F^(1/3))^(1/2) * (i Ai(u) + Bi(u)),   u = -F^(1/3) (x + E/F),

which solves -zeta'' - F x zeta = E zeta, has Wronskian {zeta, conj(zeta)} = -2i
and writes as |zeta| e^{i gamma} with gamma' = |zeta|^-2.

Airy evaluation is self-contained:

* |u| <= 10: Taylor expansion of the Airy equation around the nearest node of
  a 1/8-spaced table.  The table itself is built once from the Maclaurin
  series in 60-digit ``decimal`` arithmetic, so no cancellation survives.
* u < -10: modulus/phase asymptotics.  Ai^2 + Bi^2 solves a third order linear
  ODE whose asymptotic coefficients follow from a two-term recurrence; the
  phase series is the term-wise antiderivative of its reciprocal.  The large
  leading phase (2/3) y^(3/2) is reduced modulo 2 pi in extended precision.
* u > 10: the usual exponentially scaled expansions of Ai and Bi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .jets import Jet

SWITCH = 10.0
NODE_STEP = 0.125
AIRY_X_MIN = -1e9
AIRY_X_MAX = 100.0  # Bi overflows a double a little beyond 104

_LD = np.longdouble
_PI_LD = np.arctan(_LD(1)) * 4
_TWO_PI_LD = 2 * _PI_LD
_TWO_THIRDS_LD = _LD(2) / _LD(3)

# 60-digit constants for the Maclaurin table
_PI_DEC = "3.14159265358979323846264338327950288419716939937510582097494459"
_GAMMA_THIRD_DEC = "2.678938534707747633655692940974677644128689377957301100950428327590418"


class DomainError(ValueError):
    """Argument outside the validated evaluation range."""


class PrecisionError(ArithmeticError):
    """A numerical precondition (branch tracking, conditioning) failed."""


# --------------------------------------------------------------------------
# model parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Field strength ``F``, energy ``E``, coupling ``lam``.

    ``rational=(p, q)`` asserts F = pi^2 q / (3p); it is required by the
    rational-case routines and lets extended-precision code rebuild F exactly.
    """

    F: float
    E: float = 0.0
    lam: float = 0.0
    rational: tuple[int, int] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.F) and self.F > 0):
            raise ValueError(f"F must be positive and finite, got {self.F}")
        if not math.isfinite(self.E) or not math.isfinite(self.lam):
            raise ValueError("E and lam must be finite")
        if self.rational is not None:
            p, q = self.rational
            if p < 1 or q < 1 or int(p) != p or int(q) != q:
                raise ValueError("rational=(p, q) needs positive integers")
            if math.gcd(int(p), int(q)) != 1:
                raise ValueError(f"p={p} and q={q} are not coprime")
            target = math.pi**2 * q / (3 * p)
            if abs(self.F - target) > 1e-12 * self.F:
                raise ValueError(f"F={self.F} does not match pi^2 q/(3p)={target}")

    @classmethod
    def from_rational(cls, p: int, q: int, E: float = 0.0, lam: float = 0.0) -> "ModelParams":
        return cls(F=math.pi**2 * q / (3 * p), E=E, lam=lam, rational=(p, q))

    @property
    def F_ld(self) -> np.longdouble:
        if self.rational is not None:
            p, q = self.rational
            return _PI_LD**2 * _LD(q) / _LD(3 * p)
        return _LD(self.F)

    def with_(self, **changes) -> "ModelParams":
        d = dict(F=self.F, E=self.E, lam=self.lam, rational=self.rational)
        d.update(changes)
        return ModelParams(**d)


# --------------------------------------------------------------------------
# coefficient tables
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _modulus_coeffs(n: int = 22) -> np.ndarray:
    """a_k with Ai(-y)^2 + Bi(-y)^2 ~ sum_k a_k y^(-1/2 - 3k)."""
    a = np.empty(n)
    a[0] = 1.0 / math.pi
    for k in range(1, n):
        s = -0.5 - 3.0 * (k - 1)
        a[k] = -a[k - 1] * s * (s - 1) * (s - 2) / (4.0 * (-0.5 - 3.0 * k) + 2.0)
    return a


@lru_cache(maxsize=None)
def _phase_coeffs(n: int = 22) -> np.ndarray:
    """b_k with 1/(pi (Ai^2+Bi^2)(-y)) ~ y^(1/2) sum_k b_k y^(-3k)."""
    a = _modulus_coeffs(n) * math.pi
    b = np.empty(n)
    b[0] = 1.0
    for k in range(1, n):
        b[k] = -np.dot(a[1 : k + 1], b[k - 1 :: -1][:k])
    return b


@lru_cache(maxsize=None)
def _exp_coeffs(n: int = 26) -> tuple[np.ndarray, np.ndarray]:
    u = np.empty(n)
    u[0] = 1.0
    for k in range(1, n):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    k = np.arange(n)
    v = -(6 * k + 1) / (6 * k - 1) * u
    return u, v


def _maclaurin_dec(x: Decimal, c1: Decimal, c2: Decimal, sqrt3: Decimal):
    """Ai, Ai', Bi, Bi' at x from the Maclaurin series in decimal arithmetic."""
    x3 = x * x * x
    f = fp = g = gp = Decimal(0)
    tf = Decimal(1)  # x^(3k) coefficient term of f
    tg = x  # x^(3k+1) term of g
    k = 0
    eps = Decimal(10) ** -62
    while True:
        f += tf
        g += tg
        if k > 0:
            fp += tf * 3 * k / x if x != 0 else Decimal(0)
        gp += tg * (3 * k + 1) / x if x != 0 else (Decimal(1) if k == 0 else Decimal(0))
        k += 1
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        if abs(tf) < eps and abs(tg) < eps and k > 3:
            break
    ai = c1 * f - c2 * g
    aip = c1 * fp - c2 * gp
    bi = sqrt3 * (c1 * f + c2 * g)
    bip = sqrt3 * (c1 * fp + c2 * gp)
    return ai, aip, bi, bip


class _Table(NamedTuple):
    nodes: np.ndarray
    ai: np.ndarray
    aip: np.ndarray
    bi: np.ndarray
    bip: np.ndarray
    chi: np.ndarray  # continuous arg(Bi + i Ai), -> 0 as u -> +inf


@lru_cache(maxsize=None)
def _table() -> _Table:
    m = int(round(2 * SWITCH / NODE_STEP))
    nodes = -SWITCH + NODE_STEP * np.arange(m + 1)
    out = np.empty((4, m + 1))
    with localcontext() as ctx:
        ctx.prec = 64
        pi = Decimal(_PI_DEC)
        g13 = Decimal(_GAMMA_THIRD_DEC)
        three = Decimal(3)
        sqrt3 = three.sqrt()
        g23 = 2 * pi / (sqrt3 * g13)
        c1 = 1 / ((three.ln() * 2 / 3).exp() * g23)
        c2 = 1 / ((three.ln() / 3).exp() * g13)
        for i, u in enumerate(nodes):
            vals = _maclaurin_dec(Decimal(repr(float(u))), c1, c2, sqrt3)
            out[:, i] = [float(v) for v in vals]
    ai, aip, bi, bip = out
    # unwrap from the right end, where the phase is a tiny positive number
    raw = np.arctan2(ai, bi)
    chi = np.unwrap(raw[::-1])[::-1]
    return _Table(nodes, ai, aip, bi, bip, chi)


# --------------------------------------------------------------------------
# region evaluators (all vectorized over u)
# --------------------------------------------------------------------------

_TAYLOR_TERMS = 30


def _airy_taylor(u: np.ndarray):
    t = _table()
    j = np.rint((u + SWITCH) / NODE_STEP).astype(np.int64)
    u0 = t.nodes[j]
    h = u - u0
    # rows: Ai, Bi
    ck_prev = np.zeros((2, u.size))
    ck = np.stack([t.ai[j], t.bi[j]])
    ck1 = np.stack([t.aip[j], t.bip[j]])
    val = ck + ck1 * h
    der = ck1.copy()
    hk = h.copy()  # h^(k+1) at loop start k=0
    for k in range(0, _TAYLOR_TERMS):
        ck2 = (u0 * ck + ck_prev) / ((k + 1) * (k + 2))
        der += (k + 2) * ck2 * hk
        hk = hk * h
        val += ck2 * hk
        ck_prev, ck, ck1 = ck, ck1, ck2
    return val[0], der[0], val[1], der[1]


def _airy_exp(u: np.ndarray):
    """u > SWITCH: exponentially decaying Ai and growing Bi."""
    uk, vk = _exp_coeffs()
    zeta = 2.0 / 3.0 * u * np.sqrt(u)
    inv = 1.0 / zeta
    sgn = (-1.0) ** np.arange(uk.size)
    su_p = np.polyval(uk[::-1], inv)
    su_m = np.polyval((sgn * uk)[::-1], inv)
    sv_p = np.polyval(vk[::-1], inv)
    sv_m = np.polyval((sgn * vk)[::-1], inv)
    q = u**0.25
    rpi = math.sqrt(math.pi)
    em = np.exp(-zeta)
    with np.errstate(over="ignore"):
        ep = np.exp(zeta)
    ai = em / (2 * rpi * q) * su_m
    aip = -q * em / (2 * rpi) * sv_m
    bi = ep / (rpi * q) * su_p
    bip = q * ep / rpi * sv_p
    return ai, aip, bi, bip


class _MP(NamedTuple):
    P: np.ndarray  # Ai^2 + Bi^2 at -y
    dP: np.ndarray  # d/dy
    dchi: np.ndarray  # d chi/dy from the phase series
    chi: np.ndarray  # continuous phase (double)
    chi_red: np.ndarray  # phase modulo 2 pi, accurate to ~1e-16 absolute


def _modulus_phase(y: np.ndarray, y_ld: np.ndarray | None = None) -> _MP:
    """y > SWITCH: modulus and phase of Bi(-y) + i Ai(-y)."""
    a = _modulus_coeffs()
    b = _phase_coeffs()
    n = a.size
    t = 1.0 / (y * y * y)
    k = np.arange(n)
    # P = y^(-1/2) sum a_k t^k ; dP/dy = y^(-3/2) sum a_k (-1/2 - 3k) t^k
    sq = np.sqrt(y)
    P = np.polyval(a[::-1], t) / sq
    dP = np.polyval((a * (-0.5 - 3.0 * k))[::-1], t) / (sq * y)
    dchi = sq * np.polyval(b[::-1], t)
    # chi = pi/4 + (2/3) y^(3/2) + sum_{k>=1} b_k y^(3/2-3k)/(3/2-3k)
    kk = k[1:]
    corr = y * sq * t * np.polyval((b[1:] / (1.5 - 3.0 * kk))[::-1], t)
    corr = corr + math.pi / 4
    if y_ld is None:
        y_ld = y.astype(_LD)
    lead = _TWO_THIRDS_LD * y_ld * np.sqrt(y_ld)
    red = lead - _TWO_PI_LD * np.floor(lead / _TWO_PI_LD)
    chi = lead.astype(float) + corr
    chi_red = np.mod(red.astype(float) + corr, 2 * math.pi)
    return _MP(P, dP, dchi, chi, chi_red)


def _check_finite(x: np.ndarray):
    if not np.all(np.isfinite(x)):
        raise DomainError("Airy argument must be finite")


# --------------------------------------------------------------------------
# public Airy
# --------------------------------------------------------------------------


def airy(x):
    """Ai, Bi, Ai', Bi' for real ``x`` in [-1e9, 100].

    Returns arrays shaped like ``x`` (scalars for scalar input), in the order
    ``(Ai, Bi, Ai', Bi')``.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).ravel()
    _check_finite(xa)
    if np.any(xa < AIRY_X_MIN) or np.any(xa > AIRY_X_MAX):
        raise DomainError(f"Airy argument outside validated range [{AIRY_X_MIN}, {AIRY_X_MAX}]")
    ai, aip, bi, bip = (np.empty_like(xa) for _ in range(4))
    mid = np.abs(xa) <= SWITCH
    if mid.any():
        r = _airy_taylor(xa[mid])
        ai[mid], aip[mid], bi[mid], bip[mid] = r
    right = xa > SWITCH
    if right.any():
        r = _airy_exp(xa[right])
        ai[right], aip[right], bi[right], bip[right] = r
    left = xa < -SWITCH
    if left.any():
        y = -xa[left]
        mp = _modulus_phase(y)
        M = np.sqrt(mp.P)
        dM = mp.dP / (2 * M)
        s, c = np.sin(mp.chi_red), np.cos(mp.chi_red)
        ai[left] = M * s
        bi[left] = M * c
        # d/du = -d/dy applied to M e^{i chi} = Bi + i Ai
        aip[left] = -(dM * s + M * mp.dchi * c)
        bip[left] = -(dM * c - M * mp.dchi * s)
    shape = np.shape(x)
    out = tuple(v.reshape(shape) for v in (ai, bi, aip, bip))
    if scalar:
        return tuple(float(v) for v in out)
    return out


# --------------------------------------------------------------------------
# reference solution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationPolicy:
    switch_radius: float = SWITCH
    target_rel: float = 1e-12
    chunk: int = 1 << 20


class ZetaData(NamedTuple):
    zeta: np.ndarray
    dzeta: np.ndarray
    abs2: np.ndarray
    gamma: np.ndarray
    gamma_mod: np.ndarray  # gamma modulo 2 pi in [0, 2 pi), extended-precision reduced
    gamma1: np.ndarray
    gamma2: np.ndarray


class _Chi(NamedTuple):
    zeta_hat: np.ndarray  # i Ai(u) + Bi(u)
    dzeta_hat: np.ndarray  # d/dy of the same (y = -u)
    logder: np.ndarray  # dzeta_hat / zeta_hat
    P: np.ndarray
    dchi: np.ndarray
    chi: np.ndarray
    chi_red: np.ndarray


def _chi_data(y_ld: np.ndarray) -> _Chi:
    """Everything about Bi(-y) + i Ai(-y) needed downstream, vectorized."""
    y = y_ld.astype(float)
    n = y.size
    zh = np.empty(n, dtype=complex)
    dzh = np.empty(n, dtype=complex)
    ld = np.empty(n, dtype=complex)
    P = np.empty(n)
    dchi = np.empty(n)
    chi = np.empty(n)
    chi_red = np.empty(n)

    far = y > SWITCH
    if far.any():
        mp = _modulus_phase(y[far], y_ld[far])
        M = np.sqrt(mp.P)
        e = np.exp(1j * mp.chi_red)
        zh[far] = M * e
        ratio = mp.dP / (2 * mp.P) + 1j * mp.dchi
        dzh[far] = M * ratio * e
        ld[far] = ratio
        P[far] = mp.P
        dchi[far] = mp.dchi
        chi[far] = mp.chi
        chi_red[far] = mp.chi_red

    near = ~far
    if near.any():
        u = -y[near]
        ai, aip, bi, bip = (np.empty(u.size) for _ in range(4))
        mid = u >= -SWITCH
        mid &= u <= SWITCH
        if mid.any():
            ai[mid], aip[mid], bi[mid], bip[mid] = _airy_taylor(u[mid])
        rt = u > SWITCH
        if rt.any():
            ai[rt], aip[rt], bi[rt], bip[rt] = _airy_exp(u[rt])
        f = bi + 1j * ai
        df = -(bip + 1j * aip)
        zh[near] = f
        dzh[near] = df
        ld[near] = df / f
        with np.errstate(over="ignore"):
            Pn = ai * ai + bi * bi
        P[near] = Pn
        # gamma' = Im(zeta'/zeta) evaluated from the Airy values themselves
        dchi[near] = (ai * bip - aip * bi) / Pn
        raw = np.arctan2(ai, bi)
        t = _table()
        uc = np.clip(u, -SWITCH, SWITCH)
        j = np.rint((uc + SWITCH) / NODE_STEP).astype(np.int64)
        ref = t.chi[j]
        ch = ref + np.angle(np.exp(1j * (raw - ref)))
        chi[near] = ch
        chi_red[near] = np.mod(ch, 2 * math.pi)
    return _Chi(zh, dzh, ld, P, dchi, chi, chi_red)


class ReferenceSolution:
    """Cached evaluator for zeta, its phase gamma and the derivatives gamma', gamma''.

    Immutable after construction; safe to share between threads.
    """

    def __init__(self, params: ModelParams, policy: EvaluationPolicy | None = None):
        self.params = params
        self.policy = policy or EvaluationPolicy()
        F_ld = params.F_ld
        self._F13_ld = np.cbrt(F_ld)
        self._EoF_ld = _LD(params.E) / F_ld
        self.F13 = float(self._F13_ld)
        self.amp = math.sqrt(math.pi / self.F13)
        chi0 = _chi_data(np.atleast_1d(self._y(0.0))).chi[0]
        # gamma(0) in (-pi, pi]
        self.branch = math.ceil((chi0 - math.pi) / (2 * math.pi))
        self._shift = 2 * math.pi * self.branch

    # -- argument map --------------------------------------------------------
    def _y(self, x) -> np.ndarray:
        x_ld = np.asarray(x).astype(_LD)
        return self._F13_ld * (x_ld + self._EoF_ld)

    def _data(self, x) -> tuple[ZetaData, tuple]:
        xa = np.asarray(x, dtype=float)
        shape = xa.shape
        flat = np.atleast_1d(xa).ravel()
        _check_finite(flat)
        y_ld = self._y(flat)
        if np.any(y_ld.astype(float) < -AIRY_X_MAX) or np.any(y_ld.astype(float) > -AIRY_X_MIN):
            raise DomainError("reference solution evaluated outside the validated Airy range")
        c = _chi_data(y_ld)
        F13 = self.F13
        zeta = self.amp * c.zeta_hat
        dzeta = self.amp * F13 * c.dzeta_hat
        with np.errstate(over="ignore"):
            abs2 = (math.pi / F13) * c.P
        g1 = F13 * c.dchi
        ratio = F13 * c.logder  # zeta'/zeta
        g2 = -np.imag(ratio * ratio)
        gamma = c.chi - self._shift
        data = ZetaData(zeta, dzeta, abs2, gamma, c.chi_red, g1, g2)
        return data, shape

    # -- public evaluators -----------------------------------------------------
    def evaluate(self, x) -> ZetaData:
        data, shape = self._data(x)
        return ZetaData(*(np.reshape(v, shape) if shape else v[0] for v in data))

    def zeta(self, x):
        d = self.evaluate(x)
        return d.zeta, d.dzeta

    def wronskian(self, x):
        """zeta conj(zeta') - zeta' conj(zeta), formed without the (exactly
        cancelling) real part so that it stays finite where |zeta|^2 overflows."""
        d = self.evaluate(x)
        z, dz = d.zeta, d.dzeta
        return 2j * (z.imag * dz.real - z.real * dz.imag)

    def gamma_phase(self, x):
        d = self.evaluate(x)
        return d.gamma, d.gamma1, d.gamma2

    def phase_arrays(self, n_start: int, n_stop: int):
        """gamma(n) mod 2 pi and gamma'(n) for integers n_start <= n < n_stop."""
        out_mod = np.empty(n_stop - n_start)
        out_g1 = np.empty(n_stop - n_start)
        step = self.policy.chunk
        for s in range(n_start, n_stop, step):
            e = min(s + step, n_stop)
            d, _ = self._data(np.arange(s, e, dtype=float))
            out_mod[s - n_start : e - n_start] = d.gamma_mod
            out_g1[s - n_start : e - n_start] = d.gamma1
        return out_mod, out_g1

    def gamma_jet(self, x0: float, order: int) -> Jet:
        """Taylor jet of gamma at ``x0`` up to ``order`` (exact derivatives)."""
        y0_ld = self._y(np.atleast_1d(float(x0)))
        y0 = float(y0_ld[0])
        c = _chi_data(y0_ld)
        m = order  # P needs order-1 derivatives for chi' up to order-1
        if y0 > SWITCH:
            a = _modulus_coeffs()
            s = -0.5 - 3.0 * np.arange(a.size)
            coeffs = np.empty(m + 1)
            for j in range(m + 1):
                # normalized Taylor coefficient: binom(s, j) y0^(s-j)
                binom = np.ones_like(s)
                for i in range(j):
                    binom = binom * (s - i) / (i + 1)
                coeffs[j] = np.sum(a * binom * y0 ** (s - j))
            Pj = Jet(coeffs)
        else:
            u0 = -y0
            ai, aip, bi, bip = _airy_point(u0)
            A = _airy_taylor_jet(u0, ai, aip, m)
            B = _airy_taylor_jet(u0, bi, bip, m)
            Pj = (A * A + B * B).scale_argument(-1.0)
        dchi = (Pj * math.pi).reciprocal() if m > 0 else None
        chi0 = float(c.chi[0]) - self._shift
        if dchi is None:
            chij = Jet([chi0])
        else:
            chij = dchi.truncate(m - 1).integrate(chi0)
        return chij.scale_argument(self.F13)

    def abs2_jet(self, x0: float, order: int) -> Jet:
        """Jet of gamma' = |zeta|^-2 viewed through gamma: returns jet of gamma'."""
        return self.gamma_jet(x0, order + 1).deriv()


def _airy_point(u: float):
    ai, bi, aip, bip = airy(u)
    return ai, aip, bi, bip


def _airy_taylor_jet(u0: float, w: float, wp: float, order: int) -> Jet:
    c = np.zeros(order + 1)
    c[0] = w
    if order >= 1:
        c[1] = wp
    for k in range(0, order - 1):
        prev = c[k - 1] if k >= 1 else 0.0
        c[k + 2] = (u0 * c[k] + prev) / ((k + 1) * (k + 2))
    return Jet(c)


# --------------------------------------------------------------------------
# convenience functions
# --------------------------------------------------------------------------


def zeta(rs: ReferenceSolution, x):
    """(zeta(x), zeta'(x))."""
    return rs.zeta(x)


def gamma_phase(rs: ReferenceSolution, x):
    """(gamma, gamma', gamma'') on the continuous branch with gamma(0) in (-pi, pi]."""
    return rs.gamma_phase(x)


def branch_constant(params: ModelParams) -> float:
    """Constant c in gamma(x) = (2/3) sqrt(F) (x+E/F)^(3/2) + c + o(1)."""
    rs = ReferenceSolution(params)
    return math.pi / 4 - 2 * math.pi * rs.branch


def gamma_asymptotic(params: ModelParams, x, order: int = 0, constant: float | None = None):
    """Leading large-x behaviour of gamma and its first two derivatives.

    order 0: (2 sqrt(F)/3) x^(3/2) + (E/sqrt(F)) x^(1/2) + c, where c is the
    branch constant pi/4 - 2 pi k of the anchored continuous phase.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise ValueError("gamma_asymptotic needs x > 0")
    sF = math.sqrt(params.F)
    if order == 0:
        c = branch_constant(params) if constant is None else constant
        return 2 * sF / 3 * xa**1.5 + params.E / sF * np.sqrt(xa) + c
    if order == 1:
        return sF * np.sqrt(xa)
    if order == 2:
        return sF / 2 / np.sqrt(xa)
    raise ValueError("order must be 0, 1 or 2")


def gamma_unwrapped(rs: ReferenceSolution, x_end: float, h_max: float = 0.25) -> float:
    """Independent branch tracker: march from 0 to ``x_end`` with adaptive steps.

    Steps are min(h_max, 1/(4 max(1, gamma'))) so each increment of arg zeta
    stays well below pi/2; used to cross-check :meth:`ReferenceSolution.gamma_phase`.
    """
    if x_end < 0:
        raise ValueError("x_end must be >= 0")
    x = 0.0
    z0, _ = rs.zeta(0.0)
    g = float(np.angle(z0))
    prev = g
    while x < x_end:
        _, g1, _ = rs.gamma_phase(x)
        h = min(h_max, 1.0 / (4.0 * max(1.0, float(g1))), x_end - x)
        x += h
        z, _ = rs.zeta(x)
        a = float(np.angle(z))
        d = math.remainder(a - prev, 2 * math.pi)
        if abs(d) >= math.pi / 2:
            raise PrecisionError(f"phase step {d} at x={x} violates the unwrap criterion")
        g += d
        prev = a
    return g
