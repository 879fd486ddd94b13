import numpy as np
import pytest

from g2sphere.errors import DomainError, StepRejected
from g2sphere.flow import (
    ANSATZ_EQUATOR, ANSATZ_POLES, ANSATZ_R1, FlowState, FlowSystem, ansatz_rhs_components,
    asymptotics, closed_form_solution, converged, integrate, rk4_batch, trajectory_csv,
)
from g2sphere.g2_structures import AnsatzParams, GeneralParams
from g2sphere.stability import div_norm
from g2sphere.torsion import norm_sq


def unit(rng, n=None):
    h = rng.normal(size=(n, 4) if n else 4)
    return h / np.linalg.norm(h, axis=-1, keepdims=True)


@pytest.mark.parametrize("r", [0.5, 0.8, 1.0, 1.5, 2.0])
def test_ansatz_rhs_matches_componentwise_system(r):
    rng = np.random.default_rng(0)
    sysm = FlowSystem.ansatz(r)
    for m in unit(rng, 20):
        assert np.allclose(sysm.rhs(m), ansatz_rhs_components(r, m), atol=1e-12)


def test_energy_and_divergence_agree_with_first_principles():
    rng = np.random.default_rng(1)
    R = (1.3, 0.8, 1.1)
    sysm = FlowSystem.general(*R)
    m = unit(rng)
    p = GeneralParams(*R, m)
    assert np.isclose(sysm.energy(m), norm_sq(p))
    assert np.isclose(sysm.div_norm(m), div_norm(p), rtol=1e-8)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_rk4_tracks_closed_form(r):
    rng = np.random.default_rng(2)
    h = unit(rng, 5)
    ts, ms, drift = rk4_batch(FlowSystem.ansatz(r), h, 1.0, 1e-3, sample_every=100)
    exact = np.stack([closed_form_solution(r, hi, ts) for hi in h], axis=1)
    assert np.abs(ms - exact).max() < 1e-7
    assert drift < 1e-10


def test_backward_flow_and_hemisphere():
    rng = np.random.default_rng(3)
    h = unit(rng)
    h[2] = abs(h[2])
    traj = integrate(FlowState(FlowSystem.ansatz(1.5), h), -2.0, 1e-3, 50)
    assert traj.t[-1] == pytest.approx(-2.0)
    assert np.all(traj.m[:, 2] >= 0)


def test_energy_decreases_along_general_flow():
    rng = np.random.default_rng(4)
    traj = integrate(FlowState(FlowSystem.general(1.2, 0.9, 1.1), unit(rng)), 1.0, 1e-4, 10)
    assert np.all(np.diff(traj.energy) <= 1e-10 * np.abs(traj.energy[:-1]))
    assert np.allclose(np.linalg.norm(traj.m, axis=1), 1.0)


def test_converges_to_equator_for_large_r():
    traj = integrate(FlowState(FlowSystem.ansatz(2.0), (0.6, 0.0, 0.8, 0.0)), 2.0, 1e-3)
    assert converged(traj)
    assert abs(traj.m[-1, 2]) < 1e-12


def test_asymptotic_classes():
    h = np.array([0.6, 0.0, 0.8, 0.0])
    assert asymptotics(2.0, h) == {"limit_minus": ANSATZ_POLES, "limit_plus": ANSATZ_EQUATOR}
    assert asymptotics(0.5, h) == {"limit_minus": ANSATZ_EQUATOR, "limit_plus": ANSATZ_POLES}
    assert asymptotics(1.0, h)["limit_plus"] == ANSATZ_R1


def test_from_params_handles_conventions():
    a = FlowSystem.from_params(GeneralParams(2.0, 0.5, 1.0, (1, 0, 0, 0), "intro"))
    assert a.radii == (0.5, 2.0, 1.0)
    b = FlowSystem.from_params(AnsatzParams(8.0, (1, 0, 0, 0)))
    assert b.kind == "ansatz" and np.allclose(b.radii, 2.0)


def test_errors():
    with pytest.raises(StepRejected):
        rk4_batch(FlowSystem.general(2.0, 0.5, 1.0), (0.5, 0.5, 0.5, 0.5), 1.0, 1e-2)
    with pytest.raises(DomainError):
        rk4_batch(FlowSystem.ansatz(1.0), (1, 0, 0, 0), 1.0, 0.0)
    with pytest.raises(DomainError):
        FlowSystem.general(1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        closed_form_solution(FlowSystem.ansatz(1.0), (1, 0, 0, 0), 0.0)


def test_csv_layout():
    traj = integrate(FlowState(FlowSystem.ansatz(1.5), (1, 0, 0, 0)), 0.01, 1e-3, 5)
    lines = trajectory_csv(traj).splitlines()
    assert lines[0] == "t,m0,m1,m2,m3,energy,div_norm"
    assert len(lines) == 1 + len(traj.t) == 4
