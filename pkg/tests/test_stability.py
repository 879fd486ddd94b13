import numpy as np
import pytest

from g2sphere.errors import NotCriticalError
from g2sphere.g2_structures import AnsatzParams, GeneralParams
from g2sphere.stability import (
    ANSATZ_EQUATOR, ANSATZ_POLES, NON_CRITICAL, classify_critical, find_special_radii,
    hessian_closed, hessian_numeric, stability_from_eigenvalues,
)
from g2sphere.verify import tabulated_critical_points

RA = np.cbrt([2.0, 2.0, 0.25])
RB = np.cbrt([2.0, -0.5, -1.0])
EQ = (0.6, 0.0, 0.0, 0.8)
POLE = (0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("r,h,index,null", [
    (2.0, POLE, 3, 0), (2.0, EQ, 0, 2), (0.5, POLE, 0, 0), (0.5, EQ, 1, 2),
])
def test_ansatz_index_nullity(r, h, index, null):
    rep = hessian_closed(AnsatzParams(r, h))
    assert (rep.index_red, rep.null_red) == (index, null)


def test_ansatz_eigenvalues():
    assert np.allclose(hessian_closed(AnsatzParams(2.0, POLE)).eigenvalues, -70)
    assert np.allclose(hessian_closed(AnsatzParams(2.0, EQ)).eigenvalues, (0, 0, 70), atol=1e-9)
    assert hessian_closed(AnsatzParams(1.0, EQ)).label == "degenerate-flat"


@pytest.mark.parametrize("R,h,label,index,null", [
    (RA, (np.cos(0.7), 0, 0, np.sin(0.7)), "S1_03", 2, 1),
    (RA, (0, 0, 1, 0), "NS_2", 1, 0),
    (RA, (0, 1, 0, 0), "NS_1", 0, 0),
    (RB, (1, 0, 0, 0), "NS_0", 2, 1),
    (RB, (0, 1, 0, 0), "NS_1", 1, 0),
    (RB, (0, 0, 1, 0), "NS_2", 2, 1),
    (RB, (0, 0, 0, 1), "NS_3", 0, 0),
])
def test_example_tables(R, h, label, index, null):
    p = GeneralParams(*R, h)
    c = classify_critical(p)
    assert c.critical and label in (c.label, c.family)
    rep = hessian_closed(p)
    assert (rep.index_red, rep.null_red) == (index, null)


def test_classification_of_ansatz_sets():
    assert classify_critical(AnsatzParams(2.0, POLE)).label == ANSATZ_POLES
    assert classify_critical(AnsatzParams(2.0, EQ)).label == ANSATZ_EQUATOR
    assert classify_critical(AnsatzParams(2.0, (0.6, 0, 0.8, 0))).label == NON_CRITICAL


def test_noncritical_hessian_raises():
    with pytest.raises(NotCriticalError):
        hessian_closed(AnsatzParams(2.0, (0.6, 0, 0.8, 0)))


@pytest.mark.parametrize("p", tabulated_critical_points())
def test_closed_hessian_matches_finite_differences(p):
    a = hessian_closed(p).hessian
    b = hessian_numeric(p).hessian
    assert np.abs(a - b).max() <= 1e-5


def test_index_is_tolerance_robust():
    lam = hessian_closed(GeneralParams(*RB, (1, 0, 0, 0))).eigenvalues
    assert {stability_from_eigenvalues(lam, t) for t in (1e-9, 1e-7, 1e-5)} == {(2, 1)}


def test_special_radii_on_curve():
    roots = sorted(s.r1 for s in find_special_radii())
    c = 2 ** (-1 / 27)
    assert np.allclose(roots, [-1, -c, c, 1], atol=1e-9)
