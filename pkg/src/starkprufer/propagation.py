"""Cell-by-cell propagation in the (zeta, conj zeta) basis, delta jumps and
SU(1,1) transfer matrices.

On the cell (n-1, n) a real solution reads psi = alpha zeta + conj(alpha zeta),
so it is fixed by the single complex coefficient alpha.  Crossing the integer
n adds g_n psi(n) to psi'.  In the coefficient pair (alpha, beta) with
beta = conj(alpha) the crossing is the matrix

    A_n = 1 + U/(2i) [[1, e^{-2i gamma(n)}], [-e^{2i gamma(n)}, -1]],   U = g_n / gamma'(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .special import PrecisionError, ReferenceSolution

RENORM_EVERY = 64


@dataclass(frozen=True)
class CellState:
    x: float
    psi: float
    psi_prime: float


def apply_jump(state: CellState, g_n: float) -> CellState:
    """Right limit at an integer from the left limit: psi' += g_n psi."""
    return CellState(state.x, state.psi, state.psi_prime + g_n * state.psi)


def basis_coefficient(rs: ReferenceSolution, state: CellState) -> complex:
    """alpha with psi = alpha zeta + conj(alpha zeta) near ``state.x``."""
    z, dz = rs.zeta(state.x)
    z, dz = complex(z), complex(dz)
    return (state.psi * dz.conjugate() - state.psi_prime * z.conjugate()) / (-2j)


def propagate_cell(rs: ReferenceSolution, state: CellState) -> CellState:
    """(psi, psi') at n+ to (psi, psi') at (n+1)-, exact in the Airy basis."""
    if state.x != math.floor(state.x):
        raise ValueError("propagate_cell expects a state at an integer")
    z, dz = rs.zeta(state.x)
    basis = np.array([[z, np.conj(z)], [dz, np.conj(dz)]])
    if np.linalg.cond(basis) > 1e12:
        raise PrecisionError("degenerate (zeta, conj zeta) basis")
    alpha = basis_coefficient(rs, state)
    z1, dz1 = rs.zeta(state.x + 1)
    return CellState(state.x + 1, 2 * (alpha * z1).real, 2 * (alpha * dz1).real)


def direct_radius(rs: ReferenceSolution, N: int, couplings: np.ndarray, theta0: float = 0.0):
    """log R(n), n = 1..N, from plain (psi, psi') propagation and jumps.

    Independent of the Prüfer recursion: the radius is read off as
    |2i alpha(n)| where alpha(n) is the basis coefficient on the cell (n-1, n).
    """
    n = np.arange(0, N + 1, dtype=float)
    d = rs.evaluate(n)
    zs = d.zeta.tolist()
    dzs = d.dzeta.tolist()
    psi, dpsi = math.sin(theta0), math.cos(theta0)
    out = np.empty(N)
    g = np.asarray(couplings, dtype=float).tolist()
    for k in range(N):
        z, dz = zs[k], dzs[k]
        alpha = (psi * dz.conjugate() - dpsi * z.conjugate()) / (-2j)
        out[k] = math.log(2 * abs(alpha))
        if k == N - 1:
            break
        z1, dz1 = zs[k + 1], dzs[k + 1]
        psi = 2 * (alpha * z1).real
        dpsi = 2 * (alpha * dz1).real + g[k] * psi  # jump at n = k+1
    return out


# ---------------------------------------------------------------------------
# SU(1,1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferSU11:
    """T = exp(log_scale) * [[a, b], [conj b, conj a]]."""

    a: complex
    b: complex
    log_scale: float = 0.0

    @classmethod
    def identity(cls) -> "TransferSU11":
        return cls(1 + 0j, 0j, 0.0)

    @property
    def matrix(self) -> np.ndarray:
        s = math.exp(self.log_scale)
        return s * np.array([[self.a, self.b], [np.conj(self.b), np.conj(self.a)]])

    @property
    def det(self) -> float:
        return (abs(self.a) ** 2 - abs(self.b) ** 2) * math.exp(2 * self.log_scale)

    @property
    def log_norm(self) -> float:
        return math.log(abs(self.a) + abs(self.b)) + self.log_scale

    def __matmul__(self, other: "TransferSU11") -> "TransferSU11":
        a = self.a * other.a + self.b * np.conj(other.b)
        b = self.a * other.b + self.b * np.conj(other.a)
        return TransferSU11(complex(a), complex(b), self.log_scale + other.log_scale).normalized()

    def normalized(self) -> "TransferSU11":
        s = math.hypot(abs(self.a), abs(self.b))
        return TransferSU11(self.a / s, self.b / s, self.log_scale + math.log(s))

    def apply(self, u: Sequence[complex]) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=complex)

    def is_sigma3_isometry(self, tol: float = 1e-10) -> bool:
        A = self.matrix / math.exp(self.log_scale) / math.sqrt(abs(self.a) ** 2 - abs(self.b) ** 2)
        s3 = np.diag([1.0, -1.0])
        return bool(np.allclose(A.conj().T @ s3 @ A, s3, atol=tol))


def one_step_su11(rs: ReferenceSolution, n: int, g_n: float) -> TransferSU11:
    if n < 1:
        raise ValueError("one_step_su11 needs n >= 1")
    d = rs.evaluate(float(n))
    U = g_n / float(d.gamma1)
    return TransferSU11(complex(1.0, -0.5 * U), -0.5j * U * np.exp(-2j * float(d.gamma_mod)))


def p_minus(a: complex, b: complex) -> np.ndarray:
    """Unit vector spanning the ||T||^-1 eigenspace of |T| = (T*T)^(1/2)."""
    ab = a * np.conj(b)
    if abs(ab) == 0.0:
        return np.array([1.0 + 0j, 0j])
    return np.array([1.0 + 0j, -ab / abs(ab)]) / math.sqrt(2.0)


def rho_ratio(a: complex, b: complex) -> float:
    """|T (1,1)^t| / |T (1,-1)^t|; the overall scale cancels."""
    v1 = np.array([a + b, np.conj(b) + np.conj(a)])
    v2 = np.array([a - b, np.conj(b) - np.conj(a)])
    return float(np.linalg.norm(v1) / np.linalg.norm(v2))


@dataclass(frozen=True)
class TransferSummary:
    T: TransferSU11
    log_norm: float
    rho_ratio: float
    P_minus: np.ndarray


def accumulate_transfer(steps: Iterable[TransferSU11]) -> TransferSummary:
    """Left-multiply the one-step matrices in order: T_n = A_n ... A_1."""
    a, b, logs = 1 + 0j, 0j, 0.0
    count = 0
    for A in steps:
        a, b = A.a * a + A.b * np.conj(b), A.a * b + A.b * np.conj(a)
        logs += A.log_scale
        count += 1
        if count % RENORM_EVERY == 0:
            s = math.hypot(abs(a), abs(b))
            a, b, logs = a / s, b / s, logs + math.log(s)
    if count == 0:
        raise ValueError("accumulate_transfer needs at least one step")
    det = (abs(a) ** 2 - abs(b) ** 2) * math.exp(2 * logs)
    if abs(det - 1) > 1e-6:
        raise PrecisionError(f"det drifted to {det}")
    T = TransferSU11(complex(a), complex(b), logs)
    return TransferSummary(T, T.log_norm, rho_ratio(a, b), p_minus(a, b))


@dataclass
class TransferPath:
    """T_k = A_k ... A_1 recorded at the step counts ``k``."""

    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    log_scale: np.ndarray

    @property
    def log_norm(self) -> np.ndarray:
        return np.log(np.abs(self.a) + np.abs(self.b)) + self.log_scale

    def at(self, i: int) -> TransferSU11:
        return TransferSU11(complex(self.a[i]), complex(self.b[i]), float(self.log_scale[i]))

    def det(self) -> np.ndarray:
        return (np.abs(self.a) ** 2 - np.abs(self.b) ** 2) * np.exp(2 * self.log_scale)


def run_transfer(
    rs: ReferenceSolution,
    n_steps: int,
    couplings: np.ndarray | float | Callable | None = None,
    record: Sequence[int] | None = None,
    renorm: int = RENORM_EVERY,
) -> TransferPath:
    """Accumulate T_k for k = 0..n_steps (steps use integers n = 1..n_steps)."""
    from .prufer import coupling_values

    rec = np.arange(0, n_steps + 1) if record is None else np.unique(np.asarray(record, dtype=np.int64))
    if rec.size and (rec[0] < 0 or rec[-1] > n_steps):
        raise ValueError("record indices must lie in [0, n_steps]")
    out_a = np.empty(rec.size, dtype=complex)
    out_b = np.empty(rec.size, dtype=complex)
    out_l = np.empty(rec.size)
    a, b, logs, count, pos = 1 + 0j, 0j, 0.0, 0, 0
    chunk = rs.policy.chunk
    for s in range(1, n_steps + 1, chunk):
        e = min(s + chunk, n_steps + 1)
        gmod, g1 = rs.phase_arrays(s, e)
        g = coupling_values(rs, couplings, s, e)
        # record T_k before step k+1, i.e. k = s-1 .. e-2 map to local 0..
        lo, hi = np.searchsorted(rec, [s - 1, e - 1])
        local = (rec[lo:hi] - (s - 1)).astype(np.int64)
        a, b, logs, count, pos = _kernels.su11_steps(
            gmod, g1, g, a, b, logs, count, renorm, local, out_a, out_b, out_l, pos
        )
    while pos < rec.size:  # the final matrix
        out_a[pos], out_b[pos], out_l[pos] = a, b, logs
        pos += 1
    return TransferPath(rec, out_a, out_b, out_l)


# ---------------------------------------------------------------------------
# L^2 masses
# ---------------------------------------------------------------------------


def quadrature_nodes(gamma1_n: float) -> int:
    return max(32, 8 * math.ceil(gamma1_n / (2 * math.pi)))


def l2_norm_cell(rs: ReferenceSolution, alpha: complex, n: int) -> float:
    """Integral of psi^2 over (n-1, n) for psi = alpha zeta + c.c. (Gauss-Legendre)."""
    if n < 1:
        raise ValueError("cells start at n = 1")
    if alpha == 0:
        return 0.0
    g1 = float(rs.gamma_phase(float(n))[1])
    m = quadrature_nodes(g1)
    t, w = np.polynomial.legendre.leggauss(m)
    x = n - 0.5 + 0.5 * t
    z, _ = rs.zeta(x)
    psi = 2 * (alpha * z).real
    return float(0.5 * np.dot(w, psi * psi))


def cell_l2_masses(rs: ReferenceSolution, alphas: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Vectorized :func:`l2_norm_cell` over many cells."""
    n = np.asarray(n, dtype=np.int64)
    alphas = np.asarray(alphas, dtype=complex)
    g1 = rs.gamma_phase(n.astype(float))[1]
    m = np.maximum(32, 8 * np.ceil(np.atleast_1d(g1) / (2 * math.pi)).astype(np.int64))
    out = np.empty(n.size)
    for mm in np.unique(m):
        sel = np.nonzero(m == mm)[0]
        t, w = np.polynomial.legendre.leggauss(int(mm))
        for start in range(0, sel.size, max(1, 200_000 // int(mm))):
            idx = sel[start : start + max(1, 200_000 // int(mm))]
            x = n[idx, None] - 0.5 + 0.5 * t[None, :]
            z, _ = rs.zeta(x)
            psi = 2 * (alphas[idx, None] * z).real
            out[idx] = 0.5 * (psi * psi) @ w
    return out


def subordinacy_ratio(masses_psi: np.ndarray, masses_phi: np.ndarray, upto: int | None = None) -> float:
    """Cumulative L^2 mass of psi over that of phi on [0, upto] (whole cells)."""
    mp = np.asarray(masses_psi, dtype=float)
    mf = np.asarray(masses_phi, dtype=float)
    k = mp.size if upto is None else int(upto)
    num = math.fsum(mp[:k])
    den = math.fsum(mf[:k])
    if den < 1e-300:
        raise ZeroDivisionError("reference solution has vanishing L^2 mass")
    return num / den
