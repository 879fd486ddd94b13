"""Isometric flow of invariant G2-structures on a unit quaternion.

Along an isometric class parametrised by ``m`` (general convention,
``phi = phi_(r, m)``), the flow reads ``dm/dt = -1/2 m q(D)`` where
``q(D) = (0, D_1/r_1^3, D_2/r_2^3, D_3/r_3^3)`` and ``D`` is the divergence
of ``T`` with the sign of the closed-form Ansatz divergence.  ``D_k/r_k^3``
are the components of ``D`` in the metric-orthonormal frame.  The right-hand
side is evaluated from the rho coefficients, which gives the exact identity
``D_a/r_a^3 = 1/2 sum_i rho_i m_i (m e_a)_i`` (``i`` in ``{0, 1, 3}``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StepRejected
from .g2_structures import AnsatzParams, GeneralParams, quat_mul, unit_quaternion
from .torsion import ansatz_norm_sq, rho_coefficients

RENORM_REJECT = 1e-6


def _qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product broadcasting over leading axes."""
    a0, a1, a2, a3 = np.moveaxis(p, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(q, -1, 0)
    return np.stack([
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ], axis=-1)


@dataclass(frozen=True)
class FlowSystem:
    """Fixed radii of an isometric class (general convention).

    ``kind`` is ``"ansatz"`` when built from a single radius ``r``; the
    general radii are then ``r^(1/3)`` and the right-hand side reproduces the
    Ansatz system exactly.
    """

    radii: tuple[float, float, float]
    kind: str = "general"
    r: float | None = None
    rho: np.ndarray = field(init=False, repr=False)
    varrho: float = field(init=False, repr=False)
    _weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r1, r2, r3 = self.radii
        if r1 * r2 * r3 <= 0:
            raise DomainError(f"r1*r2*r3 must be positive, got {r1 * r2 * r3!r}")
        if self.kind == "ansatz":
            r = self.r
            rho = -8 * (r**3 + 2) * (r**3 - 1) / r**2
            object.__setattr__(self, "rho", np.array([rho, rho, 0.0, rho]))
            object.__setattr__(self, "varrho", ansatz_norm_sq(r, 1.0))
        else:
            c = rho_coefficients(r1, r2, r3)
            object.__setattr__(self, "rho", np.array([c.rho0, c.rho1, 0.0, c.rho3]))
            object.__setattr__(self, "varrho", c.varrho)
        # Since m and m e_a are orthogonal, shifting every weight by the same
        # constant leaves frame_div unchanged; this shift makes the Ansatz
        # right-hand side exactly proportional to m_2 under rounding.
        rho = self.rho
        object.__setattr__(self, "_weights", rho - (rho[0] + rho[1] + rho[3]) / 3)

    @classmethod
    def ansatz(cls, r: float) -> FlowSystem:
        if r <= 0:
            raise DomainError(f"Ansatz radius must be positive, got {r!r}")
        c = float(np.cbrt(r))
        return cls((c, c, c), "ansatz", float(r))

    @classmethod
    def general(cls, r1: float, r2: float, r3: float) -> FlowSystem:
        return cls((float(r1), float(r2), float(r3)))

    @classmethod
    def from_params(cls, p: AnsatzParams | GeneralParams) -> FlowSystem:
        if isinstance(p, AnsatzParams):
            return cls.ansatz(p.r)
        r = p.general_r()
        return cls.general(*r)

    def params(self, m: np.ndarray) -> AnsatzParams | GeneralParams:
        if self.kind == "ansatz":
            return AnsatzParams(self.r, m)
        return GeneralParams(*self.radii, m)

    # quantities along the class -------------------------------------------------

    def energy(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, float)
        return (m**2) @ self.rho + self.varrho

    def frame_div(self, m: np.ndarray) -> np.ndarray:
        """``D_a / r_a^3`` for ``a = 1, 2, 3`` (orthonormal-frame components)."""
        m = np.asarray(m, float)
        w = self._weights * m
        out = []
        for a in (1, 2, 3):
            ea = np.zeros(4)
            ea[a] = 1.0
            out.append(0.5 * np.sum(w * _qmul(m, ea), axis=-1))
        return np.stack(out, axis=-1)

    def div(self, m: np.ndarray) -> np.ndarray:
        """1-form components ``D_1, D_2, D_3``."""
        return self.frame_div(m) * np.asarray(self.radii) ** 3

    def div_norm(self, m: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.frame_div(m), axis=-1)

    def rhs(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, float)
        y = self.frame_div(m)
        q = np.concatenate([np.zeros(m.shape[:-1] + (1,)), y], axis=-1)
        return -0.5 * _qmul(m, q)


@dataclass(frozen=True)
class FlowState:
    system: FlowSystem
    m: np.ndarray
    t: float = 0.0


def flow_rhs(s: FlowState) -> np.ndarray:
    """Quaternion velocity ``dm/dt`` at a state."""
    return s.system.rhs(s.m)


def ansatz_rhs_components(r: float, m: np.ndarray) -> np.ndarray:
    """The Ansatz system written out componentwise."""
    m0, m1, m2, m3 = m
    c = 2 * (r**3 + 2) * (r**3 - 1) * m2 / r**2
    return c * np.array([m0 * m2, m1 * m2, -(m0**2 + m1**2 + m3**2), m3 * m2])


def closed_form_solution(r: float, h: np.ndarray, t: float | np.ndarray) -> np.ndarray:
    """Explicit solution of the Ansatz flow, written to avoid overflow."""
    if isinstance(r, (FlowSystem, GeneralParams)):
        raise DomainError("closed-form solution exists for the Ansatz only")
    h = np.asarray(h, float)
    t = np.asarray(t, float)
    x = 4 * (r**3 + 2) * (r**3 - 1) * t / r**2
    a = 1 - h[2] ** 2
    b = h[2] ** 2
    # m2 = h2 / sqrt(a e^x + b), m_k = h_k e^(x/2) / sqrt(a e^x + b)
    pos = x > 0
    xe = np.where(pos, -x, x)
    den_pos = np.sqrt(a + b * np.exp(xe))     # scaled by e^(-x/2)
    den_neg = np.sqrt(a * np.exp(xe) + b)
    m2 = np.where(pos, h[2] * np.exp(0.5 * xe) / den_pos, h[2] / den_neg)
    mk = np.where(pos, 1.0 / den_pos, np.exp(0.5 * xe) / den_neg)
    out = np.stack([h[0] * mk, h[1] * mk, m2, h[3] * mk], axis=-1)
    return out


@dataclass
class Trajectory:
    """Samples of a flow line; arrays are indexed by sample."""

    t: np.ndarray
    m: np.ndarray
    energy: np.ndarray
    div_norm: np.ndarray
    max_norm_drift: float

    def rows(self) -> list[list[float]]:
        return [[float(ti), *map(float, mi), float(e), float(d)]
                for ti, mi, e, d in zip(self.t, self.m, self.energy, self.div_norm)]


def rk4_batch(system: FlowSystem, m0: np.ndarray, t_max: float, dt: float,
              sample_every: int = 1) -> tuple[np.ndarray, np.ndarray, float]:
    """Fixed-step RK4 with renormalisation for a batch of initial points.

    ``t_max`` may be negative (backward flow).  Returns sample times, samples
    of shape ``(n_samples, batch, 4)`` and the largest pre-renormalisation
    drift of ``|m|``.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    m = np.atleast_2d(np.asarray(m0, float)).copy()
    n = int(round(abs(t_max) / dt))
    step = dt if t_max >= 0 else -dt
    f = system.rhs
    ts, ms = [0.0], [m.copy()]
    drift = 0.0
    for i in range(1, n + 1):
        k1 = f(m)
        k2 = f(m + 0.5 * step * k1)
        k3 = f(m + 0.5 * step * k2)
        k4 = f(m + step * k3)
        m = m + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(m, axis=-1)
        dev = float(np.abs(nrm - 1).max())
        if dev > RENORM_REJECT:
            raise StepRejected(f"|m| drifted by {dev:.3e} at step {i}; reduce dt")
        drift = max(drift, dev)
        m = m / nrm[:, None]
        if i % sample_every == 0 or i == n:
            ts.append(i * step)
            ms.append(m.copy())
    return np.array(ts), np.array(ms), drift


def integrate(s0: FlowState, t_max: float, dt: float,
              sample_every: int = 1) -> Trajectory:
    """Integrate one flow line from ``s0`` for time ``t_max`` (either sign)."""
    m0 = unit_quaternion(s0.m)
    ts, ms, drift = rk4_batch(s0.system, m0, t_max, dt, sample_every)
    ms = ms[:, 0, :]
    return Trajectory(s0.t + ts, ms, s0.system.energy(ms),
                      s0.system.div_norm(ms), drift)


ANSATZ_EQUATOR = "Ansatz-equator"
ANSATZ_POLES = "Ansatz-poles"
ANSATZ_R1 = "Ansatz-r1-all"


def asymptotics(r: float, h: np.ndarray, tol: float = 1e-12) -> dict[str, str]:
    """Limit classes of the Ansatz flow as ``t -> -inf`` and ``t -> +inf``."""
    h = unit_quaternion(h)
    if abs(r - 1) <= tol:
        return {"limit_minus": ANSATZ_R1, "limit_plus": ANSATZ_R1}
    if abs(h[2]) <= tol:
        return {"limit_minus": ANSATZ_EQUATOR, "limit_plus": ANSATZ_EQUATOR}
    if abs(abs(h[2]) - 1) <= tol:
        return {"limit_minus": ANSATZ_POLES, "limit_plus": ANSATZ_POLES}
    if r < 1:
        return {"limit_minus": ANSATZ_EQUATOR, "limit_plus": ANSATZ_POLES}
    return {"limit_minus": ANSATZ_POLES, "limit_plus": ANSATZ_EQUATOR}


def converged(traj: Trajectory, tol: float = 1e-8, window: int = 100) -> bool:
    """``|div T| < tol`` sustained over the last ``window`` samples."""
    tail = traj.div_norm[-window:]
    return len(tail) >= min(window, len(traj.div_norm)) and bool(np.all(tail < tol))


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["t,m0,m1,m2,m3,energy,div_norm"]
    for row in traj.rows():
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


__all__ = [
    "FlowSystem", "FlowState", "Trajectory", "flow_rhs", "ansatz_rhs_components",
    "closed_form_solution", "rk4_batch", "integrate", "asymptotics",
    "converged", "trajectory_csv", "quat_mul",
]
