"""Truncated Taylor series ("jets") for exact high-order derivatives at a point.

A jet of order ``n`` stores the normalized Taylor coefficients
``c[k] = f^(k)(x0) / k!`` for ``k = 0..n``.  Arithmetic propagates the
coefficients exactly (up to rounding), which is what the stationary and
non-stationary phase operators need: they differentiate products and
quotients of user functions many times over.
"""

from __future__ import annotations

from math import factorial
from typing import Sequence

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence[complex] | np.ndarray):
        c = np.asarray(coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("jet needs a non-empty 1-d coefficient vector")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        self.c = c

    # construction ---------------------------------------------------------
    @classmethod
    def from_derivatives(cls, derivs: Sequence[complex]) -> "Jet":
        d = np.asarray(derivs)
        fact = np.array([factorial(k) for k in range(d.size)], dtype=float)
        return cls(d / fact)

    @classmethod
    def constant(cls, value: complex, order: int) -> "Jet":
        c = np.zeros(order + 1, dtype=complex if np.iscomplexobj(value) else float)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, x0: float, order: int) -> "Jet":
        """The identity function ``x`` expanded at ``x0``."""
        c = np.zeros(order + 1)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    # inspection -------------------------------------------------------------
    @property
    def order(self) -> int:
        return self.c.size - 1

    def derivatives(self) -> np.ndarray:
        fact = np.array([factorial(k) for k in range(self.c.size)], dtype=float)
        return self.c * fact

    def derivative_value(self, k: int) -> complex:
        return self.c[k] * factorial(k)

    def __repr__(self) -> str:
        return f"Jet({self.c!r})"

    # helpers ----------------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1].copy())

    def _common(self, other: "Jet") -> tuple[np.ndarray, np.ndarray]:
        n = min(self.c.size, other.c.size)
        return self.c[:n], other.c[:n]

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        a, b = self._common(o)
        return Jet(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self._common(other)
        n = a.size
        return Jet(np.convolve(a, b)[:n])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        if a[0] == 0:
            raise ZeroDivisionError("jet with zero constant term has no reciprocal")
        n = a.size
        r = np.zeros(n, dtype=np.result_type(a, float))
        r[0] = 1.0 / a[0]
        for k in range(1, n):
            r[k] = -np.dot(a[1 : k + 1], r[k - 1 :: -1][:k]) / a[0]
        return Jet(r)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(1.0, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return self.power(float(p))

    def power(self, p: float) -> "Jet":
        """Real power via the J.C.P. Miller recurrence; needs c[0] != 0."""
        a = self.c
        n = a.size
        if a[0] == 0:
            raise ZeroDivisionError("non-integer power of a jet vanishing at the point")
        b = np.zeros(n, dtype=np.result_type(a, float))
        b[0] = a[0] ** p
        for k in range(1, n):
            j = np.arange(1, k + 1)
            b[k] = np.sum((p * j - (k - j)) * a[j] * b[k - j]) / (k * a[0])
        return Jet(b)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def exp(self) -> "Jet":
        a = self.c
        n = a.size
        b = np.zeros(n, dtype=np.result_type(a, float))
        b[0] = np.exp(a[0])
        for k in range(1, n):
            j = np.arange(1, k + 1)
            b[k] = np.sum(j * a[j] * b[k - j]) / k
        return Jet(b)

    def log(self) -> "Jet":
        a = self.c
        n = a.size
        b = np.zeros(n, dtype=np.result_type(a, float))
        b[0] = np.log(a[0])
        for k in range(1, n):
            j = np.arange(1, k)
            b[k] = (a[k] - np.sum(j * b[j] * a[k - j]) / k) / a[0]
        return Jet(b)

    def _cis(self) -> "Jet":
        if np.iscomplexobj(self.c):
            raise TypeError("sin/cos are only provided for real jets")
        return Jet(1j * self.c).exp()

    def sin(self) -> "Jet":
        return Jet(self._cis().c.imag)

    def cos(self) -> "Jet":
        return Jet(self._cis().c.real)

    # calculus ---------------------------------------------------------------
    def deriv(self) -> "Jet":
        """Jet of f' (one order lower)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, self.c.size)
        return Jet(self.c[1:] * k)

    def integrate(self, value_at_point: complex = 0.0) -> "Jet":
        """Jet of the antiderivative taking ``value_at_point`` at the centre."""
        k = np.arange(1, self.c.size + 1)
        c = np.concatenate([[value_at_point], self.c / k])
        return Jet(c)

    def scale_argument(self, s: float) -> "Jet":
        """Jet of ``y -> f(x0 + s*y)`` at ``y = 0``."""
        return Jet(self.c * s ** np.arange(self.c.size))

    def eval_offset(self, h):
        """Evaluate the truncated series at ``x0 + h`` (Horner)."""
        acc = np.zeros_like(np.asarray(h, dtype=np.result_type(self.c, float)))
        for ck in self.c[::-1]:
            acc = acc * h + ck
        return acc
