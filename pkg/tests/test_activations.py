import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rfm_lab import activations as A, hermite


def test_examples():
    np.testing.assert_array_equal(A.apply("relu", [[-1.0, 2.0]]), [[0.0, 2.0]])
    assert A.apply("softplus", [[0.0]])[0, 0] == pytest.approx(math.log(2))
    ident = A.Activation("hermite_poly", (0.0, 1.0), 0.0)
    x = np.linspace(-3, 3, 7)[None, :]
    np.testing.assert_allclose(A.apply(ident, x, 5), x)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        A.apply("relu", [[np.nan]])


def test_validation():
    with pytest.raises(ValueError):
        A.Activation("swish")
    with pytest.raises(ValueError):
        A.Activation("relu", noise=0.1)
    with pytest.raises(ValueError):
        A.Activation("affine", (1.0,))


def test_noisy_linear_surrogate():
    ident = A.noisy_linear_surrogate("identity")
    assert ident.params == (0.0, 1.0) and ident.noise == 0.0
    t = A.noisy_linear_surrogate("tanh")
    assert abs(t.params[0]) < 1e-12 and t.params[1] > 0 and t.noise > 0
    r = A.noisy_linear_surrogate("relu")
    assert r.params[0] > 0 and r.label == "linear"
    assert r.noise == pytest.approx(math.sqrt(0.25 - 1 / (2 * math.pi)), abs=1e-12)


def test_equivalent_polynomial_indexing():
    c = A.coefficients("relu")
    p1 = A.equivalent_polynomial("relu", 1, c)
    assert p1.params == (c.mu[0],) and p1.noise == pytest.approx(c.noise_level(1))
    p2 = A.equivalent_polynomial("relu", 2, c)
    lin = A.noisy_linear_surrogate("relu", c)
    assert p2.params == lin.params and p2.noise == lin.noise
    with pytest.raises(ValueError):
        A.equivalent_polynomial("relu", 12, c)


def _moments(act, order=64):
    # E[z act(z)] and E[act(z)^2] over the polynomial part plus the analytic noise variance
    nodes, weights = hermite.gauss_hermite_rule(order)
    vals = act.evaluate(nodes)
    return float(weights @ (nodes * vals)), float(weights @ vals**2) + act.noise**2


@pytest.mark.parametrize("name", ["relu", "tanh", "softplus"])
@pytest.mark.parametrize("l", [1, 2, 3, 4, 6])
def test_moment_matching(name, l):
    c = A.coefficients(name)
    poly = A.equivalent_polynomial(name, l, c)
    m1, m2 = _moments(poly)
    if l >= 2:
        assert m1 == pytest.approx(c.mu[1], abs=1e-6)
    assert m2 == pytest.approx(c.second_moment, abs=1e-6)


def test_noise_reproducible_and_independent():
    act = A.noisy_linear_surrogate("relu")
    P = np.zeros((100, 100))
    a = A.apply(act, P, 1)
    np.testing.assert_array_equal(a, A.apply(act, P, 1))
    b = A.apply(act, P, 2)
    assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 0.05


def test_one_draw_per_entry():
    act = A.cubic(0, 1, 0, 0, 1.0)
    P = np.zeros((3, 4))
    z = np.random.default_rng(8).standard_normal((3, 4))
    np.testing.assert_allclose(A.apply(act, P, 8), z)


def test_degenerate_noise_is_deterministic():
    act = A.equivalent_polynomial("identity", 2)
    assert act.noise == 0.0
    P = np.random.default_rng(0).standard_normal((5, 5))
    np.testing.assert_array_equal(A.apply(act, P, 1), A.apply(act, P, 2))


def test_cubic_matches_formula():
    b = (0.1, 0.7, -0.4, 0.3, 0.0)
    x = np.linspace(-2, 2, 9)
    want = b[0] + b[1] * x + 0.5 * b[2] * (x**2 - 1) + b[3] * (x**3 - 3 * x) / 6
    np.testing.assert_allclose(A.cubic(*b).evaluate(x), want, atol=1e-14)
    assert A.cubic(0, 0, 0, 0, -0.3).noise == 0.3


def test_parse_names():
    assert A.parse("ReLU").kind == "relu"
    assert A.parse("linear:0.5,2").params == (0.5, 2.0)
    cub = A.parse("cubic:0,1,0.5,0.25,0.1")
    assert cub.params == (0.0, 1.0, 0.5, 0.25) and cub.noise == 0.1
    poly = A.parse("poly:l=3", base="tanh")
    assert len(poly.params) == 3
    for bad in ("poly:l=3", "linear:1", "cubic:1,2", "poly:k=2", "gelu"):
        with pytest.raises(ValueError):
            A.parse(bad)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_affine_coefficients_exact(a0, a1):
    c = A.coefficients(A.affine(a0, a1), 4)
    np.testing.assert_allclose(c.mu, [a0, a1, 0, 0, 0])
    assert c.second_moment == pytest.approx(a0 * a0 + a1 * a1)
    assert c.noise_level(2) == pytest.approx(0.0, abs=1e-6)


def test_apply_with_predrawn_noise():
    act = A.cubic(0, 0, 0, 0, 2.0)
    z = np.ones((2, 2))
    np.testing.assert_allclose(A.apply(act, np.zeros((2, 2)), z=z), 2 * z)
    with pytest.raises(ValueError):
        A.apply(act, np.zeros((2, 2)), z=np.ones(3))
