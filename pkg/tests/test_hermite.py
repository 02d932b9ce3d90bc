import itertools

import numpy as np
import pytest

from spplab import hermite
from spplab.errors import SpplabError
from spplab.hermite import (
    HermiteExpansion,
    apply_ou_generator,
    hermite_eval,
    hermite_product,
    hermite_value_1d,
    multi_factorial,
    ou_generator_pointwise,
    weighted_inner_product,
)


def indices_up_to(dims, max_order):
    out = []
    for i in itertools.product(range(max_order + 1), repeat=dims):
        if sum(i) <= max_order:
            out.append(i)
    return out


def test_hermite_eval_basics():
    assert hermite_eval((0, 0, 0), [1.3, -0.2, 5.0]) == 1.0
    assert hermite_eval((1, 0, 0), [0.7, 1.0, 2.0]) == pytest.approx(0.7)
    # H_2(s) = s^2 - 1
    assert hermite_eval((2, 0, 0), [2.0, 0.0, 0.0]) == pytest.approx(3.0)


def test_recurrence_matches_numpy_hermite_e():
    # numpy's HermiteE family is the probabilists' one: independent oracle
    s = np.linspace(-3, 3, 41)
    for j in range(7):
        coeffs = np.zeros(j + 1)
        coeffs[j] = 1.0
        expected = np.polynomial.hermite_e.hermeval(s, coeffs)
        assert np.allclose(hermite_value_1d(j, s), expected, atol=1e-10)


def test_orthogonality_matrix_3d():
    idx = indices_up_to(3, 4)
    worst = 0.0
    for i in idx:
        for j in idx:
            val = weighted_inner_product(
                lambda s, i=i: hermite_eval(i, s),
                lambda s, j=j: hermite_eval(j, s),
                dims=3,
                degree=sum(i) + sum(j),
            )
            expected = float(multi_factorial(i)) if i == j else 0.0
            worst = max(worst, abs(val - expected))
    assert worst < 1e-8


def test_inner_product_of_ones():
    assert weighted_inner_product(lambda s: np.ones(len(s)), lambda s: np.ones(len(s)), 3, 0) == pytest.approx(1.0)


def test_inner_product_degree_guard():
    with pytest.raises(SpplabError):
        weighted_inner_product(lambda s: s[:, 0] ** 4, lambda s: s[:, 0] ** 4, 1, degree=8, order=3)


def test_product_rules():
    e1, e2, e3 = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    p = hermite_product(e1, e1)
    assert p.coeffs == {(2, 0, 0): 1.0, (0, 0, 0): 1.0}
    p = hermite_product(e1, e2)
    assert p.coeffs == {(1, 1, 0): 1.0}
    p = hermite_product(e1, (0, 1, 1))
    assert p.coeffs == {(1, 1, 1): 1.0}
    p = hermite_product(e1, (1, 1, 0))
    assert p.coeffs == {(2, 1, 0): 1.0, (0, 1, 0): 1.0}
    p = hermite_product(e1, (2, 0, 0))
    assert p.coeffs == {(3, 0, 0): 1.0, (1, 0, 0): 2.0}
    with pytest.raises(SpplabError):
        hermite_product((2, 0, 0), (2, 0, 0))
    # product expansions pair with the orthogonality relation
    prod = hermite_product(e1, e2)
    target = HermiteExpansion(3, {(1, 1, 0): 1.0})
    assert prod.inner(target) == pytest.approx(1.0)


def test_products_match_pointwise_evaluation():
    rng = np.random.default_rng(5)
    sigma = rng.standard_normal((20, 3))
    for i, j in [((1, 0, 0), (0, 1, 0)), ((1, 0, 0), (1, 1, 0)), ((0, 0, 1), (0, 0, 2))]:
        prod = hermite_product(i, j)
        direct = np.asarray(hermite_eval(i, sigma)) * np.asarray(hermite_eval(j, sigma))
        assert np.allclose(prod.evaluate(sigma), direct, atol=1e-12)


def test_generator_eigenrelation_coefficients():
    for i in indices_up_to(3, 4):
        exp = HermiteExpansion(3, {i: 1.0})
        out = apply_ou_generator(exp)
        assert (out - exp.scaled(-sum(i))).coefficient_norm() == 0.0
    # kernel of the generator: constants
    assert apply_ou_generator(HermiteExpansion.constant(3, 4.2)).coeffs == {}


def test_generator_eigenrelation_finite_difference():
    rng = np.random.default_rng(11)
    worst = 0.0
    for i in indices_up_to(3, 4):
        exp = HermiteExpansion(3, {i: 1.0})
        for sigma in rng.uniform(-1.5, 1.5, size=(4, 3)):
            fd = ou_generator_pointwise(lambda s: float(exp.evaluate(s)), sigma)
            exact = -sum(i) * hermite_eval(i, sigma)
            worst = max(worst, abs(fd - exact))
    assert worst < 1e-8


def test_mul_and_diff_sigma_consistency():
    rng = np.random.default_rng(3)
    sigma = rng.standard_normal((50, 2))
    exp = HermiteExpansion(2, {(2, 1): 0.7, (0, 1): -1.2, (1, 0): 0.5})
    for axis in range(2):
        shifted = exp.mul_sigma(axis)
        assert np.allclose(shifted.evaluate(sigma), sigma[:, axis] * exp.evaluate(sigma), atol=1e-12)
        h = 1e-6
        plus = sigma.copy()
        plus[:, axis] += h
        minus = sigma.copy()
        minus[:, axis] -= h
        fd = (exp.evaluate(plus) - exp.evaluate(minus)) / (2 * h)
        assert np.allclose(exp.diff_sigma(axis).evaluate(sigma), fd, atol=1e-6)


def test_expansion_inner_matches_quadrature():
    a = HermiteExpansion(2, {(1, 0): 2.0, (1, 1): -0.5})
    b = HermiteExpansion(2, {(1, 0): 3.0, (2, 0): 1.0, (1, 1): 4.0})
    exact = a.inner(b)
    quad = weighted_inner_product(
        lambda s: np.asarray(a.evaluate(s)), lambda s: np.asarray(b.evaluate(s)), 2, degree=4
    )
    assert quad == pytest.approx(exact, abs=1e-10)


def test_gaussian_mean_is_zero_index_coefficient():
    exp = HermiteExpansion(3, {(0, 0, 0): 0.25, (1, 1, 0): 3.0})
    assert exp.gaussian_mean() == 0.25
    assert HermiteExpansion.zero(3).gaussian_mean() == 0.0
