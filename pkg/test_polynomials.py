# test_polynomials.py
import numpy as np
import pytest

from app.analysis.polynomials import (
    AffineMap1D,
    BiPoly,
    binom,
    pascal_table,
    poly_affine_sub,
    poly_diff,
    poly_mul,
    poly_partial_eval,
    poly_sum,
)
from app.errors import ConfigurationError, DomainError

t = BiPoly.t()
x = BiPoly.x()


def test_binomials_match_pascal_rows():
    table = pascal_table(10)
    assert table[10][3] == 120
    assert binom(12, 6) == 924
    assert binom(5, 7) == 0


def test_mul_examples():
    assert poly_mul(x, x) == BiPoly.monomial(0, 2)
    assert poly_mul(1 + t, 1 - t) == BiPoly({(0, 0): 1.0, (2, 0): -1.0})
    got = poly_mul(x * 0.1, x * 2 - 3)
    assert got.allclose(BiPoly({(0, 2): 0.2, (0, 1): -0.3}))


def test_mul_agrees_with_pointwise_product():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = BiPoly({(int(i), int(j)): float(c) for i, j, c in zip(*rng.integers(0, 4, (2, 5)), rng.normal(size=5))})
        q = BiPoly({(int(i), int(j)): float(c) for i, j, c in zip(*rng.integers(0, 4, (2, 5)), rng.normal(size=5))})
        tt, xx = rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50)
        np.testing.assert_allclose(poly_mul(p, q)(tt, xx), p(tt, xx) * q(tt, xx), rtol=1e-12, atol=1e-12)


def test_mul_degree_is_sum_of_degrees():
    p = t ** 2 * x + 1
    q = x ** 3 - t
    assert poly_mul(p, q).total_degree == p.total_degree + q.total_degree


def test_diff_examples():
    assert poly_diff(t ** 2 * x ** 3, "x") == BiPoly.monomial(2, 2, 3.0)
    assert poly_diff(t ** 2 * x ** 3, "t", 2) == BiPoly.monomial(0, 3, 2.0)
    assert poly_diff(t, "x").is_zero()
    with pytest.raises(DomainError):
        poly_diff(t, "y")


def test_affine_sub_expands_binomially():
    got = poly_affine_sub(x ** 2, AffineMap1D.identity(), AffineMap1D(1.0, 4.0))
    assert got == BiPoly({(0, 0): 1.0, (0, 1): 8.0, (0, 2): 16.0})


def test_affine_sub_inverse_round_trip():
    p = t ** 3 * x ** 2 - t * x * 2.5 + 0.7
    m_t, m_x = AffineMap1D.from_interval(0.0, 2.0), AffineMap1D.from_interval(1.0, 5.0)
    back = poly_affine_sub(poly_affine_sub(p, m_t, m_x), m_t.inverse(), m_x.inverse())
    assert back.allclose(p)


def test_affine_sub_commutes_with_differentiation():
    p = t ** 2 * x ** 4 + x * 3 - t
    m_x = AffineMap1D(1.0, 4.0)
    lhs = poly_diff(poly_affine_sub(p, AffineMap1D.identity(), m_x), "x")
    rhs = poly_affine_sub(poly_diff(p, "x"), AffineMap1D.identity(), m_x) * 4.0
    assert lhs.allclose(rhs)


def test_zero_scale_map_is_rejected():
    with pytest.raises(DomainError):
        AffineMap1D(1.0, 0.0)


def test_partial_eval_and_sum():
    p = t ** 2 * x + x ** 2
    assert poly_partial_eval(p, "t", 2.0) == BiPoly({(0, 1): 4.0, (0, 2): 1.0})
    assert poly_partial_eval(p, "x", 0.0).is_zero()
    assert poly_sum([t, x, -t]) == x


def test_parse_reads_infix_text():
    assert BiPoly.parse("0.1*x + 0.05*t^2").allclose(x * 0.1 + t ** 2 * 0.05)
    assert BiPoly.parse("(x - 1.3)*(1 + t)").allclose((x - 1.3) * (1 + t))
    assert BiPoly.parse("0").is_zero()


def test_parse_rejects_non_polynomials():
    with pytest.raises(ConfigurationError):
        BiPoly.parse("sin(x)")
    with pytest.raises(ConfigurationError):
        BiPoly.parse("1/x")


def test_polys_are_immutable_and_hashable():
    p = x + 1
    with pytest.raises(AttributeError):
        p.foo = 1
    assert {p: 1}[BiPoly({(0, 1): 1.0, (0, 0): 1.0})] == 1
