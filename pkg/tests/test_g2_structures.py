import numpy as np
import pytest

from g2sphere.errors import DomainError
from g2sphere.g2_structures import (
    PHI0, AnsatzParams, G2Params, G2Structure, GeneralParams, block_decomposition,
    bryant_form, bryant_vector, from_block, isometric_check, metric_from_phi,
    phi_from_params, upsilon, upsilon_inverse,
)


def unit(rng):
    h = rng.normal(size=4)
    return h / np.linalg.norm(h)


def test_standard_structure_metric_is_identity():
    g = metric_from_phi(PHI0)
    assert np.allclose(g.gram, np.eye(7), atol=1e-12)


def test_phi_and_psi_have_norm_seven():
    rng = np.random.default_rng(0)
    s = G2Structure.from_params(GeneralParams(*rng.uniform(0.5, 2, 3), unit(rng)))
    assert np.isclose(s.metric.norm_sq(s.phi), 7.0)
    assert np.isclose(s.metric.norm_sq(s.psi), 7.0)


def test_upsilon_is_rotation_and_inverts():
    rng = np.random.default_rng(1)
    h = unit(rng)
    U = upsilon(h)
    assert np.allclose(U @ U.T, np.eye(3))
    assert np.isclose(np.linalg.det(U), 1.0)
    assert np.allclose(upsilon(upsilon_inverse(U)), U)


def test_ansatz_is_equal_radii_member():
    rng = np.random.default_rng(2)
    p = AnsatzParams(1.7, unit(rng))
    a = phi_from_params(p)
    b = phi_from_params(p.to_general())
    assert (a - b).max_abs() < 1e-12


def test_intro_convention_inverts_radii():
    rng = np.random.default_rng(3)
    h = unit(rng)
    a = phi_from_params(GeneralParams(2.0, 0.5, 1.5, h, "intro"))
    b = phi_from_params(GeneralParams(0.5, 2.0, 1 / 1.5, h))
    assert (a - b).max_abs() < 1e-12


def test_isometric_class_shares_metric():
    rng = np.random.default_rng(4)
    R = rng.uniform(0.5, 2, 3)
    p, q = GeneralParams(*R, unit(rng)), GeneralParams(*R, unit(rng))
    ok, A = isometric_check(p, q)
    assert ok and np.allclose(A @ A.T, np.eye(3))
    gp = G2Structure.from_params(p).metric.gram
    gq = G2Structure.from_params(q).metric.gram
    assert np.allclose(gp, gq)


def test_bryant_form_reproduces_family():
    rng = np.random.default_rng(5)
    R = rng.uniform(0.5, 2, 3)
    for conv in ("general", "intro"):
        p = GeneralParams(*R, unit(rng), conv)
        base = G2Structure.from_params(GeneralParams(*R, (1, 0, 0, 0), conv))
        f, X = bryant_vector(p)
        assert (bryant_form(base, f, X) - phi_from_params(p)).max_abs() < 1e-10


def test_block_decomposition_roundtrip():
    rng = np.random.default_rng(6)
    for _ in range(20):
        q = G2Params(rng.uniform(0.5, 2), upsilon(unit(rng)) @ np.diag(rng.uniform(0.5, 2, 3))
                     @ upsilon(unit(rng)))
        b = block_decomposition(q)
        assert b.r1 >= b.r2 >= b.r3 > 0
        back = b.to_g2params()
        assert np.isclose(back.a, q.a) and np.allclose(back.D, q.D)


def test_from_block_example():
    # the diagonal example needs a = 30^(-1/3)
    q = from_block(2.0, 3.0, 5.0, 1.0, (1, 0, 0, 0), (1, 0, 0, 0))
    assert np.isclose(q.a, 30 ** (-1 / 3))


@pytest.mark.parametrize("make", [
    lambda: G2Params(-1.0, np.eye(3)),
    lambda: G2Params(1.0, -np.eye(3)),
    lambda: AnsatzParams(0.0, (1, 0, 0, 0)),
    lambda: GeneralParams(1.0, -1.0, 1.0, (1, 0, 0, 0)),
    lambda: GeneralParams(1.0, 1.0, 1.0, (2, 0, 0, 0)),
    lambda: GeneralParams(1.0, 1.0, 1.0, (1, 0, 0, 0), "other"),
])
def test_domain_errors(make):
    with pytest.raises(DomainError):
        make()


def test_negative_radii_with_positive_product_allowed():
    p = GeneralParams(2.0, -0.5, -1.0, (1, 0, 0, 0))
    assert G2Structure.from_params(p).metric.vol_coeff > 0
