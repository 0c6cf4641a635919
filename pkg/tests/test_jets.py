import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinn_control.autodiff.jets import Jet, jet_tanh

finite = st.floats(min_value=-3, max_value=3, allow_nan=False)


def poly_mul_truncated(a, b, n):
    """Independent oracle: full polynomial product truncated to n coefficients."""
    full = np.convolve(a, b)
    return full[:n]


@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4))
@settings(max_examples=200, deadline=None)
def test_jet_mul_is_truncated_convolution(a, b):
    prod = Jet(a) * Jet(b)
    expected = poly_mul_truncated(a, b, 4)
    np.testing.assert_allclose(list(prod.coeffs), expected, rtol=1e-12, atol=1e-12)


def test_jet_length_mismatch_rejected():
    with pytest.raises(ValueError):
        Jet([1.0, 2.0]) * Jet([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        Jet([1.0]) + Jet([1.0, 0.0])


def test_jet_needs_a_primal():
    with pytest.raises(ValueError):
        Jet([])


def test_jet_add_sub_neg():
    a = Jet([1.0, 2.0, 3.0])
    b = Jet([0.5, -1.0, 4.0])
    np.testing.assert_allclose((a + b).coeffs, [1.5, 1.0, 7.0])
    np.testing.assert_allclose((a - b).coeffs, [0.5, 3.0, -1.0])
    np.testing.assert_allclose((-a).coeffs, [-1.0, -2.0, -3.0])
    np.testing.assert_allclose((2.0 * a).coeffs, [2.0, 4.0, 6.0])


def tanh_taylor_coeffs(x0):
    """Taylor coefficients of tanh at x0 via symbolic derivatives.

    tanh' = 1 - tanh^2, tanh'' = -2 t (1 - t^2),
    tanh''' = (1 - t^2)(6 t^2 - 2) with t = tanh(x0).
    """
    t = np.tanh(x0)
    s = 1.0 - t * t
    return np.array([t, s, -2.0 * t * s / 2.0, s * (6.0 * t * t - 2.0) / 6.0])


@given(finite)
@settings(max_examples=200, deadline=None)
def test_jet_tanh_matches_symbolic_taylor(x0):
    out = jet_tanh(Jet([x0, 1.0, 0.0, 0.0]))
    np.testing.assert_allclose(list(out.coeffs), tanh_taylor_coeffs(x0), rtol=1e-12, atol=1e-12)


def test_jet_tanh_chain_rule_against_composition_oracle():
    """tanh of a general inner jet must match the Faa di Bruno composition of
    the tanh Taylor series with the inner series (computed independently)."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        z = rng.uniform(-2, 2, size=4)
        out = jet_tanh(Jet(z))
        # compose g(s) = tanh(z0 + d(s)) with d(s) = z1 s + z2 s^2 + z3 s^3
        c = tanh_taylor_coeffs(z[0])
        d = np.array([0.0, z[1], z[2], z[3]])
        expected = np.zeros(4)
        expected[0] = c[0]
        powd = np.array([1.0, 0, 0, 0])  # d^k truncated
        for k in range(1, 4):
            powd = poly_mul_truncated(powd, d, 4)
            expected += c[k] * powd
        np.testing.assert_allclose(list(out.coeffs), expected, rtol=1e-11, atol=1e-12)


def test_leibniz_rule_exhaustive_orders():
    rng = np.random.default_rng(11)
    for n in range(1, 5):
        for _ in range(250):
            a = rng.uniform(-2, 2, n)
            b = rng.uniform(-2, 2, n)
            prod = Jet(a) * Jet(b)
            np.testing.assert_allclose(
                list(prod.coeffs), poly_mul_truncated(a, b, n), rtol=1e-12, atol=1e-12
            )


def test_derivative_extraction_factors():
    j = Jet([5.0, 4.0, 3.0, 2.0])
    assert j.derivative(0) == 5.0
    assert j.derivative(1) == 4.0
    assert j.derivative(2) == 6.0
    assert j.derivative(3) == 12.0
    with pytest.raises(ValueError):
        Jet([1.0, 1.0]).derivative(2)
