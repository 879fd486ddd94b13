import numpy as np
import pytest

from g2sphere.algebra_core import wedge
from g2sphere.g2_structures import AnsatzParams, G2Params, G2Structure, GeneralParams
from g2sphere.torsion import (
    ansatz_norm_sq, closed_form_ansatz, closed_form_general, closed_form_r123,
    norm_sq, reduced_rho, rho_coefficients, rho_extracted, torsion_forms,
)


def unit(rng):
    h = rng.normal(size=4)
    return h / np.linalg.norm(h)


def close(a, b, tol=1e-9):
    scale = max(1.0, float(np.abs(b.fullT).max()))
    assert abs(a.tau0 - b.tau0) <= tol * scale
    assert (a.tau1 - b.tau1).max_abs() <= tol * scale
    assert (a.tau2 - b.tau2).max_abs() <= tol * scale
    assert np.abs(a.tau27 - b.tau27).max() <= tol * scale
    assert np.abs(a.fullT - b.fullT).max() <= tol * scale


@pytest.mark.parametrize("seed", range(5))
def test_ansatz_closed_form(seed):
    rng = np.random.default_rng(seed)
    p = AnsatzParams(rng.uniform(0.3, 3), unit(rng))
    close(closed_form_ansatz(p), torsion_forms(p))
    assert np.isclose(ansatz_norm_sq(p.r, p.h[2]), norm_sq(p))


@pytest.mark.parametrize("seed", range(5))
def test_general_closed_form(seed):
    rng = np.random.default_rng(100 + seed)
    R = rng.uniform(0.4, 2.5, 3) * rng.choice([1, -1], 3)
    R[2] = abs(R[2]) * np.sign(R[0] * R[1])
    p = GeneralParams(*R, unit(rng))
    close(closed_form_general(p), torsion_forms(p))


def test_r123_family():
    close(closed_form_r123(1.3, 0.8, 1.1),
          torsion_forms(GeneralParams(1.3, 0.8, 1.1, (1, 0, 0, 0), "intro")))


def test_nearly_parallel_point():
    td = torsion_forms(AnsatzParams(2 ** (1 / 3), (1, 0, 0, 0)))
    assert np.isclose(td.tau0, -3.1748021039363983)
    assert td.tau1.max_abs() < 1e-12 and td.tau2.max_abs() < 1e-12
    assert np.abs(td.tau27).max() < 1e-12


def test_torsion_types():
    rng = np.random.default_rng(7)
    s = G2Structure.from_params(GeneralParams(1.4, 0.7, 1.2, unit(rng)))
    td = torsion_forms(s)
    g = s.metric
    assert abs(np.trace(g.gram_inv @ td.tau27)) < 1e-9
    assert np.allclose(td.tau27, td.tau27.T)
    assert wedge(td.tau2, s.psi).max_abs() < 1e-9
    assert np.isclose(td.normT_sq, np.einsum("ij,kl,ik,jl->", td.fullT, td.fullT,
                                             g.gram_inv, g.gram_inv))


def test_global_chart_accepted():
    rng = np.random.default_rng(8)
    D = rng.normal(size=(3, 3))
    if np.linalg.det(D) < 0:
        D[0] *= -1
    assert np.isfinite(norm_sq(G2Params(1.2, D)))


def test_rho_closed_form_matches_extraction():
    R = (1.3, 0.7, 1.1)
    a, b = rho_coefficients(*R), rho_extracted(*R)
    assert np.allclose(a.as_tuple(), b.as_tuple(), rtol=1e-9)
    rng = np.random.default_rng(9)
    h = unit(rng)
    assert np.isclose(a.energy(h), norm_sq(GeneralParams(*R, h)))


def test_reduced_rho_examples():
    assert np.allclose(reduced_rho(2, 2, 0.25), (3645 / 64, -9 / 8, 3645 / 64))
    assert np.allclose(reduced_rho(2, -0.5, -1), (0, -99 / 8, -135 / 8))
    full = rho_coefficients(*np.cbrt([2, 2, 0.25]), with_varrho=False).as_tuple()
    assert np.allclose(np.array(full) / 4, reduced_rho(2, 2, 0.25))
