import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylherm.potentials import (
    Potential,
    e_bound_coefficient,
    e_remainder,
    remainder_bound,
    v_deriv,
    v_eval,
    weyl_quotient,
)

finite = st.floats(-5, 5, allow_nan=False)
hbars = st.floats(1e-3, 2.0)


def naive_quotient(pot, hbar, x, y):
    return (pot.value(x + hbar * y / 2) - pot.value(x - hbar * y / 2)) / hbar


def test_values_and_derivatives():
    q = Potential.quartic(0.5)
    assert v_eval(q, 2.0) == pytest.approx(2.0 + 2.0)
    assert v_deriv(q, 2.0, 1) == pytest.approx(2.0 + 4.0)
    assert v_deriv(q, 2.0, 2) == pytest.approx(1.0 + 6.0)
    assert v_deriv(q, 2.0, 3) == pytest.approx(6.0)
    assert v_deriv(q, 2.0, 4) == pytest.approx(3.0)
    assert v_eval(Potential.harmonic(), 3.0) == 4.5
    with pytest.raises(ValueError):
        v_deriv(q, 1.0, 5)


def test_quartic_remainder_closed_form_example():
    # chi=1/2, hbar=0.1, x=1, y=1: 0.5 * 0.01 * 1 * 1 / 4
    assert e_remainder(Potential.quartic(0.5), 0.1, 1.0, 1.0) == pytest.approx(1.25e-3, rel=1e-14)


def test_harmonic_quotient_is_exactly_linear():
    x = np.linspace(-3, 3, 7)
    assert np.all(e_remainder(Potential.harmonic(), 0.3, x, 2.0) == 0.0)
    np.testing.assert_allclose(weyl_quotient(Potential.harmonic(), 0.3, x, 2.0), 2.0 * x, rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(finite, finite, hbars, st.floats(0, 2))
def test_quotient_matches_naive_difference(x, y, hbar, chi):
    pot = Potential.quartic(chi)
    ref = naive_quotient(pot, hbar, x, y)
    scale = max(1.0, abs(pot.value(x)) + abs(pot.value(x + hbar * y / 2))) / hbar
    assert abs(weyl_quotient(pot, hbar, x, y) - ref) <= 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(finite, finite, hbars)
def test_remainder_scales_like_hbar_squared(x, y, hbar):
    pot = Potential.quartic(0.5)
    assert e_remainder(pot, hbar / 2, x, y) == pytest.approx(e_remainder(pot, hbar, x, y) / 4, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(finite, finite, hbars)
def test_remainder_is_odd_in_y_and_x(x, y, hbar):
    pot = Potential.quartic(0.7)
    e = e_remainder(pot, hbar, x, y)
    # pow() of a negative base may differ from the positive one by an ulp
    assert e_remainder(pot, hbar, x, -y) == pytest.approx(-e, rel=1e-15, abs=0)
    assert e_remainder(pot, hbar, -x, y) == pytest.approx(-e, rel=1e-15, abs=0)


@settings(max_examples=200, deadline=None)
@given(finite, finite, st.floats(1e-3, 2.0))
def test_remainder_within_taylor_bound(x, y, hbar):
    for pot in (Potential.quartic(0.5), Potential.from_callables(np.cosh, np.sinh, np.cosh, np.sinh)):
        e = e_remainder(pot, hbar, x, y)
        # the callable remainder is a difference of O(V) numbers divided by hbar
        roundoff = 8 * np.finfo(float).eps * (abs(pot.value(x)) + abs(pot.deriv(x, 1) * y)) / hbar
        assert abs(e) <= remainder_bound(pot, hbar, x, y) * (1 + 1e-9) + roundoff + 1e-300


def test_bound_coefficient():
    assert e_bound_coefficient(Potential.quartic(0.5), 4.0) == pytest.approx(12.0)
    assert e_bound_coefficient(Potential.harmonic(), 4.0) == 0.0
    cosh = Potential.from_callables(np.cosh, np.sinh, np.cosh, np.sinh)
    assert e_bound_coefficient(cosh, 2.0) == pytest.approx(math.sinh(2.0))
    with pytest.raises(ValueError):
        e_bound_coefficient(Potential.from_callables(np.cosh, np.sinh), 1.0)


def test_callable_potential_uses_difference_quotient():
    pot = Potential.from_callables(lambda x: x**4, lambda x: 4 * x**3)
    assert weyl_quotient(pot, 0.5, 1.0, 1.0) == pytest.approx(naive_quotient(pot, 0.5, 1.0, 1.0))
    assert pot.degree is None and not pot.is_polynomial


def test_non_confining_callable_warns(caplog):
    with caplog.at_level(logging.WARNING):
        Potential.from_callables(lambda x: -(np.asarray(x) ** 2), lambda x: -2 * np.asarray(x))
    assert "confining" in caplog.text


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Potential.quartic(-1.0)
    with pytest.raises(ValueError):
        Potential("cubic")
    with pytest.raises(ValueError):
        weyl_quotient(Potential.harmonic(), 0.0, 1.0, 1.0)
    assert Potential.quartic(0.0).degree == 2
