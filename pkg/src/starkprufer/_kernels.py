"""Compiled inner loops.  numba is used when importable; the pure Python
fallbacks are kept identical line by line so results do not depend on it."""

from __future__ import annotations

import math

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True, nogil=True)
def prufer_steps(gmod, g1, g, logR, eta, rec, out_logR, out_eta, out_pos):
    """Exact Prüfer recursion over one chunk.

    Element ``i`` of ``gmod``/``g1``/``g`` refers to the integer n = n0 + i and
    maps the state at n to the state at n+1.  ``rec`` holds sorted local
    positions at which the state *before* the step is written, starting at
    ``out_pos``.  Returns the final (logR, eta, out_pos).
    """
    j = 0
    nrec = rec.shape[0]
    for i in range(gmod.shape[0]):
        while j < nrec and rec[j] == i:
            out_logR[out_pos] = logR
            out_eta[out_pos] = eta
            out_pos += 1
            j += 1
        U = g[i] / g1[i]
        th = eta + gmod[i]
        s = math.sin(th)
        c = math.cos(th)
        logR += 0.5 * math.log1p(U * (2.0 * s * c + U * s * s))
        eta += math.atan2(-U * s * s, 1.0 + U * s * c)
    while j < nrec and rec[j] == gmod.shape[0]:
        out_logR[out_pos] = logR
        out_eta[out_pos] = eta
        out_pos += 1
        j += 1
    return logR, eta, out_pos


@njit(cache=True, nogil=True)
def su11_steps(gmod, g1, g, a, b, logs, count, renorm, rec, out_a, out_b, out_logs, out_pos):
    """Left-multiply T = [[a, b], [conj b, conj a]] by the one-step matrices."""
    j = 0
    nrec = rec.shape[0]
    for i in range(gmod.shape[0]):
        while j < nrec and rec[j] == i:
            out_a[out_pos] = a
            out_b[out_pos] = b
            out_logs[out_pos] = logs
            out_pos += 1
            j += 1
        U = g[i] / g1[i]
        e = complex(math.cos(2.0 * gmod[i]), -math.sin(2.0 * gmod[i]))
        A11 = complex(1.0, -0.5 * U)
        A12 = complex(0.0, -0.5 * U) * e
        a, b = A11 * a + A12 * b.conjugate(), A11 * b + A12 * a.conjugate()
        count += 1
        if count % renorm == 0:
            s = math.sqrt(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag)
            a = a / s
            b = b / s
            logs += math.log(s)
    while j < nrec and rec[j] == gmod.shape[0]:
        out_a[out_pos] = a
        out_b[out_pos] = b
        out_logs[out_pos] = logs
        out_pos += 1
        j += 1
    return a, b, logs, count, out_pos

