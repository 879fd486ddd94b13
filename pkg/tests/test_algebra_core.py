import numpy as np
import pytest

from g2sphere.algebra_core import (
    DIM, STRUCTURE, InnerProduct, Multivector, bracket, bracket_p, ce_differential,
    ce_matrix, contract, form, from_matrix, hodge_star, invariant_basis, scalar,
    to_matrix, wedge,
)


def basis10(i):
    v = np.zeros(10)
    v[i] = 1.0
    return v


def random_metric(rng):
    A = rng.normal(size=(DIM, DIM))
    return InnerProduct(A @ A.T + DIM * np.eye(DIM))


def test_jacobi_identity_exact():
    assert STRUCTURE.jacobi_defect() == 0


def test_bracket_antisymmetric():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 10))
    assert np.allclose(bracket(x, y), -bracket(y, x))


def test_isotropy_brackets():
    assert np.allclose(bracket(basis10(0), basis10(1)), 2 * basis10(2))
    # [v3, v2] = -[v2, v3] = -2 v1
    assert np.allclose(bracket(basis10(2), basis10(1)), -2 * basis10(0))


def test_bracket_p_is_projection():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2, DIM))
    full = bracket(np.r_[0, 0, 0, x], np.r_[0, 0, 0, y])
    assert np.allclose(bracket_p(x, y), full[3:])


@pytest.mark.parametrize("k", range(DIM + 1))
def test_invariant_dimensions(k):
    assert invariant_basis(k).shape[1] == (1, 3, 6, 10, 10, 6, 3, 1)[k]


@pytest.mark.parametrize("k", range(DIM - 1))
def test_d_squared_vanishes_on_invariant_forms(k):
    assert np.abs(ce_matrix(k + 1) @ ce_matrix(k) @ invariant_basis(k)).max() == 0


def test_ce_matrix_matches_ce_differential():
    rng = np.random.default_rng(2)
    a = Multivector(3, rng.normal(size=35))
    assert np.allclose(ce_differential(a).data, ce_matrix(3) @ a.data)


def test_wedge_graded_commutative():
    a, b = form(1, 4), form(2)
    assert np.allclose(wedge(a, b).data, wedge(b, a).data)
    c = form(3)
    assert np.allclose(wedge(b, c).data, -wedge(c, b).data)
    assert wedge(b, b).max_abs() == 0


def test_contract_is_antiderivation():
    rng = np.random.default_rng(3)
    v = rng.normal(size=DIM)
    a = Multivector(1, rng.normal(size=7))
    b = Multivector(2, rng.normal(size=21))
    lhs = contract(v, wedge(a, b))
    rhs = wedge(contract(v, a), b) - wedge(a, contract(v, b))
    assert (lhs - rhs).max_abs() < 1e-12


@pytest.mark.parametrize("k", range(DIM + 1))
def test_hodge_star_involution(k):
    rng = np.random.default_rng(10 + k)
    g = random_metric(rng)
    a = Multivector(k, rng.normal(size=len(Multivector(k).data)))
    assert (hodge_star(hodge_star(a, g), g) - a).max_abs() < 1e-10


def test_hodge_star_defining_identity():
    rng = np.random.default_rng(4)
    g = random_metric(rng)
    a, b = (Multivector(3, rng.normal(size=35)) for _ in range(2))
    lhs = wedge(b, hodge_star(a, g)).data[0]
    assert np.isclose(lhs, g.inner(b, a) * g.vol_coeff)


def test_matrix_roundtrip():
    rng = np.random.default_rng(5)
    beta = Multivector(2, rng.normal(size=21))
    M = to_matrix(beta)
    assert np.allclose(M, -M.T)
    assert np.allclose(from_matrix(M).data, beta.data)


def test_scalar_and_degree_checks():
    assert scalar(2.5).data[0] == 2.5
    with pytest.raises(ValueError):
        Multivector(8)
    with pytest.raises(ValueError):
        InnerProduct(-np.eye(DIM))
