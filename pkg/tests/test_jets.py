import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starkprufer.jets import Jet

small = st.floats(-2.0, 2.0)


def series(f_derivs, x0, order):
    return Jet.from_derivatives([d(x0) for d in f_derivs[: order + 1]])


@given(small, small)
def test_product_rule(x0, c):
    x = Jet.variable(x0, 5)
    p = (x * x + c) * x  # x^3 + c x
    d = p.derivatives()
    assert d[0] == pytest.approx(x0**3 + c * x0, abs=1e-12)
    assert d[1] == pytest.approx(3 * x0**2 + c, abs=1e-12)
    assert d[2] == pytest.approx(6 * x0, abs=1e-12)
    assert d[3] == pytest.approx(6.0)
    assert d[4] == d[5] == 0


@given(small)
def test_exp_sin_cos(x0):
    x = Jet.variable(x0, 6)
    e = x.exp().derivatives()
    assert np.allclose(e, math.exp(x0), rtol=1e-13)
    s = np.sin(x).derivatives()
    c = np.cos(x).derivatives()
    ref_s = [math.sin(x0), math.cos(x0), -math.sin(x0), -math.cos(x0)] * 2
    ref_c = [math.cos(x0), -math.sin(x0), -math.cos(x0), math.sin(x0)] * 2
    assert np.allclose(s, ref_s[:7], atol=1e-12)
    assert np.allclose(c, ref_c[:7], atol=1e-12)


@given(st.floats(0.3, 5.0), st.floats(-2.5, 2.5))
def test_power_and_log(x0, p):
    x = Jet.variable(x0, 5)
    d = x.power(p).derivatives()
    ref = [math.prod(p - i for i in range(k)) * x0 ** (p - k) for k in range(6)]
    assert np.allclose(d, ref, rtol=1e-10, atol=1e-12)
    lg = x.log().derivatives()
    ref_l = [math.log(x0)] + [(-1) ** (k - 1) * math.factorial(k - 1) / x0**k for k in range(1, 6)]
    assert np.allclose(lg, ref_l, rtol=1e-11)


@given(st.floats(0.5, 3.0))
def test_reciprocal_and_division(x0):
    x = Jet.variable(x0, 6)
    r = (1 / (1 + x * x)).derivatives()
    assert r[0] == pytest.approx(1 / (1 + x0 * x0))
    assert r[2] == pytest.approx((6 * x0 * x0 - 2) / (1 + x0 * x0) ** 3, abs=1e-13)
    q = (x * x) / x
    assert np.allclose(q.c, x.c, atol=1e-14)


def test_calculus_helpers():
    x = Jet.variable(1.0, 4)
    p = x**3
    assert np.allclose(p.deriv().derivatives()[:3], [3, 6, 6])
    assert np.allclose(p.deriv().integrate(1.0).c, p.c)
    assert p.eval_offset(0.5) == pytest.approx(1.5**3)
    assert np.allclose(p.scale_argument(2.0).c, p.c * 2.0 ** np.arange(5))
    with pytest.raises(ZeroDivisionError):
        Jet([0.0, 1.0]).reciprocal()
    with pytest.raises(TypeError):
        Jet(np.array([1j, 0])).sin()


def test_numpy_dispatch():
    x = Jet.variable(0.3, 3)
    assert isinstance(np.sqrt(x + 1), Jet)
    assert isinstance(np.exp(x), Jet)
