import numpy as np
import pytest

from gmdist.errors import UsageError
from gmdist.polyalg import (
    SparsePoly,
    SymMatrix,
    basis_size,
    exponent_at,
    graded_basis,
    graded_index,
    poly_eval,
    poly_mul,
)


def enumerate_graded(max_degree):
    """Independent oracle: build the graded-lex order by explicit loops."""
    out = []
    for d in range(max_degree + 1):
        for j in range(d + 1):
            out.append((d - j, j))
    return out


def test_graded_index_first_position():
    assert graded_index((0, 0), 3) == 0


def test_graded_index_hand_enumerated_positions():
    # expected values frozen from the explicit enumeration oracle
    order = enumerate_graded(6)
    assert order.index((1, 1)) == 4
    assert order.index((0, 2)) == 5
    assert graded_index((1, 1), 3) == 4
    assert graded_index((0, 2), 3) == 5


def test_graded_index_matches_enumeration_everywhere():
    n = 4
    oracle = enumerate_graded(2 * n)
    for pos, exp in enumerate(oracle):
        assert graded_index(exp, n) == pos
        assert exponent_at(pos) == exp
    assert len(oracle) == basis_size(2 * n)


def test_graded_index_bijection_round_trip():
    for n in (1, 2, 5):
        for k in range(basis_size(2 * n)):
            assert graded_index(exponent_at(k), n) == k


def test_graded_index_degree_overflow():
    with pytest.raises(IndexError):
        graded_index((5, 2), 3)
    with pytest.raises(UsageError):
        graded_index((-1, 0), 3)


def test_graded_basis_prefix_property():
    assert graded_basis(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


# -- polynomials -------------------------------------------------------------


def test_poly_eval_examples():
    p = SparsePoly("ms", {(2, 0): 1.0, (0, 2): 1.0})  # m^2 + s^2
    assert poly_eval(p, (3.0, 4.0)) == 25.0
    one = SparsePoly.constant("xy", 1.0)
    assert poly_eval(one, (17.0, -3.0)) == 1.0
    cost = SparsePoly("xy", {(2, 0): 1.0, (1, 1): -2.0, (0, 2): 1.0})
    assert poly_eval(cost, (2.0, 5.0)) == 9.0


def test_poly_mul_examples():
    m = SparsePoly.variable("ms", 0)
    assert (m * m).terms == {(2, 0): 1.0}
    s = SparsePoly.variable("ms", 1)
    assert ((m + s) * (m - s)).terms == {(2, 0): 1.0, (0, 2): -1.0}
    one_plus_m = SparsePoly("ms", {(0, 0): 1.0, (1, 0): 1.0})
    assert (one_plus_m * one_plus_m).terms == {(0, 0): 1.0, (1, 0): 2.0, (2, 0): 1.0}


def test_poly_mul_varpair_mismatch():
    with pytest.raises(UsageError):
        poly_mul(SparsePoly.variable("ms", 0), SparsePoly.variable("xy", 0))


def _random_poly(rng, max_degree=8, terms=6):
    exps = {}
    for _ in range(terms):
        d = rng.integers(0, max_degree + 1)
        i = rng.integers(0, d + 1)
        exps[(int(i), int(d - i))] = float(rng.normal())
    return SparsePoly("xy", exps)


def test_poly_mul_commutative_associative():
    rng = np.random.default_rng(7)
    for _ in range(25):
        p, q, r = (_random_poly(rng) for _ in range(3))
        assert (p * q).terms == pytest.approx((q * p).terms)
        left = ((p * q) * r).terms
        right = (p * (q * r)).terms
        for key in set(left) | set(right):
            assert left.get(key, 0.0) == pytest.approx(right.get(key, 0.0), abs=1e-12)


def test_eval_of_product_is_product_of_evals():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p = _random_poly(rng, max_degree=6, terms=5)
        q = _random_poly(rng, max_degree=6, terms=5)
        point = tuple(rng.uniform(-1, 1, size=2))
        lhs = poly_eval(p * q, point)
        rhs = poly_eval(p, point) * poly_eval(q, point)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_affine_substitute_matches_pointwise():
    rng = np.random.default_rng(3)
    p = _random_poly(rng, max_degree=5, terms=6)
    a1, b1, a2, b2 = 0.5, -0.3, 2.0, 0.7
    q = p.affine_substitute((a1, b1), (a2, b2))
    for _ in range(20):
        x, y = rng.uniform(-1, 1, size=2)
        assert poly_eval(q, (x, y)) == pytest.approx(
            poly_eval(p, (a1 * x + b1, a2 * y + b2)), rel=1e-12, abs=1e-12)


def test_zero_coefficients_dropped():
    p = SparsePoly("ms", {(1, 0): 0.0, (0, 1): 2.0})
    assert (1, 0) not in p.terms
    assert p.degree == 1
    assert SparsePoly.zero("ms").degree == -1


def test_sym_matrix_mirrors_upper_triangle():
    m = SymMatrix(np.array([[1.0, 2.0], [99.0, 3.0]]))
    assert m.mat[1, 0] == 2.0
    assert m.dim == 2
    with pytest.raises(UsageError):
        SymMatrix(np.zeros((2, 3)))
