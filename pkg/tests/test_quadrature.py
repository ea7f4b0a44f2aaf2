import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from holowdm.quadrature import (QuadratureError, QuadratureSpec, composite_gauss_legendre,
                                gauss_legendre, integrate, integrate_many)


def test_polynomial_exact():
    res = integrate(lambda x: 3 * x ** 2, 0.0, 2.0)
    assert res.value == pytest.approx(8.0, rel=1e-14)


@given(st.floats(1.0, 400.0), st.floats(0.1, 3.0))
def test_oscillatory_against_closed_form(w, L):
    spec = QuadratureSpec(rel_tol=1e-10, wavelength_hint=2 * math.pi / w)
    res = integrate(lambda x: np.exp(1j * w * x), 0.0, L, spec)
    exact = (np.exp(1j * w * L) - 1) / (1j * w)
    assert abs(res.value - exact) <= 1e-9 * max(abs(exact), 1 / w)


def test_matches_scipy_on_peaked_integrand():
    f = lambda x: 1 / (1e-2 + x ** 2)  # noqa: E731
    ref, _ = sint.quad(f, -1, 1, epsabs=0, epsrel=1e-12, points=[0.0])
    assert integrate(f, -1.0, 1.0, QuadratureSpec(rel_tol=1e-11)).value == pytest.approx(ref, 1e-10)


def test_vector_valued_batch():
    a = np.array([0.0, 1.0, -2.0])
    b = np.array([1.0, 3.0, 0.5])
    f = lambda x: np.stack([np.ones_like(x), x, np.cos(x)])  # noqa: E731
    res = integrate_many(f, a, b)
    assert res.value.shape == (3, 3)
    np.testing.assert_allclose(res.value[0], b - a, rtol=1e-13)
    np.testing.assert_allclose(res.value[1], (b ** 2 - a ** 2) / 2, rtol=1e-13)
    np.testing.assert_allclose(res.value[2], np.sin(b) - np.sin(a), rtol=1e-12, atol=1e-15)


def test_budget_exhaustion_raises():
    spec = QuadratureSpec(rel_tol=1e-14, max_subdivisions=2)
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.abs(x - 1 / 3) ** 0.1 * np.sin(500 * x), 0.0, 1.0, spec)


def test_hint_sets_initial_panels():
    spec = QuadratureSpec(wavelength_hint=0.01)
    assert spec.initial_panels(1.0) >= 400


@given(st.integers(1, 64))
def test_gauss_legendre_weights(n):
    x, w = gauss_legendre(n)
    assert w.sum() == pytest.approx(2.0, rel=1e-13)
    assert np.all(np.diff(x) > 0)


def test_composite_rule_integrates_oscillation():
    x, w = composite_gauss_legendre(-2.5, 2.5, 0.01, 16)
    k = 2 * math.pi / 0.01 * 0.7
    assert w.sum() == pytest.approx(5.0, rel=1e-13)
    assert abs(w @ np.cos(k * x) - 2 * math.sin(2.5 * k) / k) < 1e-12
