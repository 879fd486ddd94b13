"""Torsion of invariant G2-structures.

First-principles route: the torsion forms are extracted from ``d phi`` and
``d psi`` with the invariant differential and the Hodge star of the metric
induced by the same ``phi``.  The closed forms for the Ansatz and for the
diagonal family are implemented alongside as independent oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra_core import (
    DIM, OMEGAS, InnerProduct, Multivector, _wedge_table, ce_differential,
    contract, form, from_matrix, hodge_star, to_matrix, wedge,
)
from .g2_structures import (
    AnsatzParams, AnyParams, G2Structure, GeneralParams,
)

_EYE = np.eye(DIM)


@dataclass(frozen=True)
class TorsionData:
    """Torsion forms and full torsion tensor of one G2-structure.

    Matrices are components in the ``e``-basis: ``T[i, j] = T(e_i, e_j)``.
    """

    tau0: float
    tau1: Multivector
    tau2: Multivector
    tau3: Multivector | None
    tau27: np.ndarray
    fullT: np.ndarray
    normT_sq: float

    def to_json(self) -> dict:
        from .algebra_core import combos
        return {
            "tau0": self.tau0,
            "tau1": [float(x) for x in self.tau1.data],
            "tau2": {"".join(map(str, k)): float(v)
                     for k, v in zip(combos(2), self.tau2.data)},
            "tau27": self.tau27.tolist(),
            "T": self.fullT.tolist(),
            "normT2": self.normT_sq,
        }


def _contractions(phi: Multivector) -> np.ndarray:
    return np.stack([contract(_EYE[i], phi).data for i in range(DIM)])


def j_map(tau: Multivector, s: G2Structure) -> np.ndarray:
    """``j(tau)_ij = *((e_i⌟phi) ^ (e_j⌟phi) ^ tau)`` for a 3-form ``tau``."""
    K = _contractions(s.phi)
    v4 = _wedge_table(4, 3)[:, :, 0] @ tau.data
    Q = _wedge_table(2, 2) @ v4
    J = K @ Q @ K.T / s.metric.vol_coeff
    return 0.5 * (J + J.T)


def i_map(beta: np.ndarray, s: G2Structure) -> Multivector:
    """``i(beta) = beta_ij g^jl e^i ^ (e_l⌟phi)``."""
    K = _contractions(s.phi)
    M = np.asarray(beta) @ s.metric.gram_inv
    # e^i ^ (2-form with components K_l) summed with weights M_il
    W = _wedge_table(1, 2)
    return Multivector(3, np.einsum("il,ia,lb,abc->c", M, np.eye(DIM), K, W))


def tensor_norm_sq(T: np.ndarray, g: InnerProduct) -> float:
    """``g^ik g^jl T_ij T_kl``."""
    gi = g.gram_inv
    return float(np.einsum("ik,jl,ij,kl->", gi, gi, T, T))


def _as_structure(x: G2Structure | Multivector | AnyParams) -> G2Structure:
    if isinstance(x, G2Structure):
        return x
    if isinstance(x, Multivector):
        return G2Structure.from_phi(x)
    return G2Structure.from_params(x)


def torsion_forms(x: G2Structure | Multivector | AnyParams) -> TorsionData:
    """Torsion forms and full torsion tensor from first principles."""
    s = _as_structure(x)
    phi, psi, g = s.phi, s.psi, s.metric

    def star(a: Multivector) -> Multivector:
        return hodge_star(a, g)

    dphi = ce_differential(phi)
    dpsi = ce_differential(psi)
    tau0 = float(star(wedge(phi, dphi)).data[0]) / 7.0
    tau1 = star(wedge(phi, star(dphi))) / 12.0
    tau2 = -star(dpsi) + 4.0 * star(wedge(tau1, psi))
    tau3 = star(dphi) - tau0 * phi - 3.0 * star(wedge(tau1, phi))
    tau27 = 0.25 * j_map(tau3, s)
    T = (0.25 * tau0 * g.gram - to_matrix(star(wedge(tau1, psi)))
         - 0.5 * to_matrix(tau2) - tau27)
    return TorsionData(tau0, tau1, tau2, tau3, tau27, T, tensor_norm_sq(T, g))


def norm_sq(x: G2Structure | Multivector | AnyParams) -> float:
    """Squared norm of the full torsion tensor."""
    return torsion_forms(x).normT_sq


# ---------------------------------------------------------------------------
# closed forms: Ansatz


def _ansatz_metric(r: float) -> InnerProduct:
    return InnerProduct(np.diag([r * r] * 3 + [1.0 / r] * 4))


def closed_form_ansatz(p: AnsatzParams) -> TorsionData:
    """Closed-form torsion forms of the Ansatz ``phi_r``."""
    r = p.r
    h0, h1, h2, h3 = p.h
    r3 = r**3
    tau0 = -4.0 / (7.0 * r) * (r3 * (1 - 4 * h2**2) + (5 - 8 * h2**2))
    tau1 = (-2.0 * (r3 + 2) * h2 / 3.0) * (
        h3 * form(1) + h0 * form(2) - h1 * form(3))
    def blk(i: int, j: int, om: int) -> Multivector:
        return 2 * r * form(i, j) + OMEGAS[om] / r**2
    tau2 = (-8.0 * (r3 - 1) * h2 / 3.0) * (
        h1 * blk(1, 2, 2) + h0 * blk(1, 3, 1) - h3 * blk(2, 3, 0))

    def pk(hk: float) -> float:
        return 7 * (r3 - 2) * hk**2 + (9 * r3 - 10) * h2**2 - 4 * (r3 - 2)

    c = 7 * r3 * (r3 - 2)
    top = np.array([
        [r3 * pk(h3), c * h0 * h3, -c * h1 * h3],
        [c * h0 * h3, r3 * pk(h0), -c * h0 * h1],
        [-c * h1 * h3, -c * h0 * h1, r3 * pk(h1)],
    ])
    tau27 = np.zeros((DIM, DIM))
    tau27[:3, :3] = top
    tau27[3:, 3:] = (1.25 * (r3 - 2) - (5 * r3 - 4) * h2**2) * np.eye(4)
    tau27 *= 2.0 / (7.0 * r**2)

    g = _ansatz_metric(r)
    # psi_r only enters through *(tau1 ^ psi)
    s = G2Structure.from_params(p)
    T = (0.25 * tau0 * g.gram - to_matrix(hodge_star(wedge(tau1, s.psi), g))
         - 0.5 * to_matrix(tau2) - tau27)
    return TorsionData(tau0, tau1, tau2, None, tau27, T, ansatz_norm_sq(r, h2))


def ansatz_norm_sq(r: float, h2: float) -> float:
    """``|T|^2 = (4r^6 - 14r^3 + 19 + 8(r^3+2)(r^3-1) h2^2) / r^2``."""
    r3 = r**3
    return (4 * r3 * r3 - 14 * r3 + 19 + 8 * (r3 + 2) * (r3 - 1) * h2**2) / r**2


def ansatz_div(r: float, h: np.ndarray) -> np.ndarray:
    """``div T = (4(r^3+2)(r^3-1) h2 / r)(h3 e^1 + h0 e^2 - h1 e^3)``."""
    h0, h1, h2, h3 = h
    r3 = r**3
    c = 4 * (r3 + 2) * (r3 - 1) * h2 / r
    out = np.zeros(DIM)
    out[:3] = c * np.array([h3, h0, -h1])
    return out


# ---------------------------------------------------------------------------
# closed forms: general diagonal family (general convention)


def _general_tau0(r1: float, r2: float, r3: float, h: np.ndarray) -> float:
    h0, h1, _, h3 = h
    a = r1**4 * r2 * r3
    b = r1 * r2**4 * r3
    c = r1 * r2 * r3**4
    i1, i2, i3 = 1 / r1**3, 1 / r2**3, 1 / r3**3
    mixed = r1**3 * i2 * i3 + r2**3 * i1 * i3 + r3**3 * i1 * i2
    # the last term enters with a plus sign (checked against first principles)
    return -4.0 / 7.0 * (
        2 * (c + a + 2 * i1 + 2 * i3) * h0**2
        + 2 * (a + b + 2 * i2 + 2 * i1) * h1**2
        + 2 * (c + b + 2 * i2 + 2 * i3) * h3**2
        - (a + b + c) - 2 * (i1 + i2 + i3) + mixed)


def _general_tau1(r1: float, r2: float, r3: float, h: np.ndarray) -> Multivector:
    h0, h1, h2, h3 = h
    t = np.zeros(DIM)
    t[0] = -r1**3 / (3 * r2**3 * r3**3) * (
        (r1 * r2**4 * r3**7 + r1 * r2**7 * r3**4 + 2 * r2**3 + 2 * r3**3) * h2 * h3
        + (r1 * r2**4 * r3**7 - r1 * r2**7 * r3**4 + 2 * r2**3 - 2 * r3**3) * h0 * h1)
    t[1] = -r2**3 / (3 * r1**3 * r3**3) * (
        (r1**4 * r2 * r3**7 + r1**7 * r2 * r3**4 + 2 * r1**3 + 2 * r3**3) * h0 * h2
        - (r1**4 * r2 * r3**7 - r1**7 * r2 * r3**4 + 2 * r1**3 - 2 * r3**3) * h1 * h3)
    t[2] = r3**3 / (3 * r1**3 * r2**3) * (
        (r1**7 * r2**4 * r3 + r1**4 * r2**7 * r3 + 2 * r1**3 + 2 * r2**3) * h1 * h2
        - (r1**7 * r2**4 * r3 - r1**4 * r2**7 * r3 - 2 * r1**3 + 2 * r2**3) * h0 * h3)
    return Multivector(1, t)


def _general_tau2(r1: float, r2: float, r3: float, h: np.ndarray) -> Multivector:
    h0, h1, h2, h3 = h
    o1, o2, o3 = OMEGAS
    a12 = 1 / (r1**4 * r2**4 * r3)
    a13 = 1 / (r1**4 * r2 * r3**4)
    a23 = 1 / (r1 * r2**4 * r3**4)
    return -4.0 / 3.0 * (
        (r1**7 * r2**4 * r3 + r1**4 * r2**7 * r3 - r1**3 - r2**3) * h1 * h2
        * (2 * form(1, 2) + a12 * o3)
        - (r1**7 * r2**4 * r3 - r1**4 * r2**7 * r3 + r1**3 - r2**3) * h0 * h3
        * (2 * form(1, 2) - a12 * o3)
        + (r1**4 * r2 * r3**7 + r1**7 * r2 * r3**4 - r1**3 - r3**3) * h0 * h2
        * (2 * form(1, 3) + a13 * o2)
        - (r1**4 * r2 * r3**7 - r1**7 * r2 * r3**4 - r1**3 + r3**3) * h1 * h3
        * (2 * form(1, 3) - a13 * o2)
        - (r1 * r2**7 * r3**4 + r1 * r2**4 * r3**7 - r2**3 - r3**3) * h2 * h3
        * (2 * form(2, 3) + a23 * o1)
        + (r1 * r2**7 * r3**4 - r1 * r2**4 * r3**7 + r2**3 - r3**3) * h0 * h1
        * (2 * form(2, 3) - a23 * o1))


def _general_tau27(r1: float, r2: float, r3: float, h: np.ndarray) -> np.ndarray:
    h0, h1, h2, h3 = h
    T = np.zeros((DIM, DIM))
    T[0, 1] = ((r1**4 * r2**7 * r3 + r1**7 * r2**4 * r3 - 2 * r1**3 - 2 * r2**3) * h0 * h3
               + (r1**4 * r2**7 * r3 - r1**7 * r2**4 * r3 - 2 * r1**3 + 2 * r2**3) * h1 * h2)
    T[0, 2] = (-(r1**4 * r2 * r3**7 + r1**7 * r2 * r3**4 - 2 * r1**3 - 2 * r3**3) * h1 * h3
               + (r1**4 * r2 * r3**7 - r1**7 * r2 * r3**4 - 2 * r1**3 + 2 * r3**3) * h0 * h2)
    T[1, 2] = (-(r1 * r2**7 * r3**4 + r1 * r2**4 * r3**7 - 2 * r2**3 - 2 * r3**3) * h0 * h1
               + (r1 * r2**7 * r3**4 - r1 * r2**4 * r3**7 + 2 * r2**3 - 2 * r3**3) * h2 * h3)
    T = T + T.T
    T[0, 0] = -2 * r1**3 / (7 * r2**3 * r3**3) * (
        r2**3 * (r1**4 * r2 * r3**7 + 8 * r1**7 * r2 * r3**4 + 2 * r1**3 - 12 * r3**3) * h0**2
        + r3**3 * (r1**4 * r2**7 * r3 + 8 * r1**7 * r2**4 * r3 + 2 * r1**3 - 12 * r2**3) * h1**2
        + r1**3 * (r1 * r2**4 * r3**7 + r1 * r2**7 * r3**4 + 2 * r2**3 + 2 * r3**3) * h3**2
        - r1 * r2**4 * r3**4 / 2 * (r1**3 * r2**3 + r1**3 * r3**3 + 8 * r1**6)
        + 4 * r1**6 - 3 * r2**6 - 3 * r3**6 - r1**3 * r2**3 - r1**3 * r3**3
        + 6 * r2**3 * r3**3)
    T[1, 1] = -2 * r2**3 / (7 * r1**3 * r3**3) * (
        r2**3 * (r1**4 * r2 * r3**7 + r1**7 * r2 * r3**4 + 2 * r1**3 + 2 * r3**3) * h0**2
        + r3**3 * (r1**7 * r2**4 * r3 + 8 * r1**4 * r2**7 * r3 - 12 * r1**3 + 2 * r2**3) * h1**2
        + r1**3 * (r1 * r2**4 * r3**7 + 8 * r1 * r2**7 * r3**4 + 2 * r2**3 - 12 * r3**3) * h3**2
        - r1**4 * r2 * r3**4 / 2 * (r1**3 * r2**3 + r2**3 * r3**3 + 8 * r2**6)
        + 4 * r2**6 - 3 * r1**6 - 3 * r3**6 - r1**3 * r2**3 - r2**3 * r3**3
        + 6 * r1**3 * r3**3)
    T[2, 2] = -2 * r3**3 / (7 * r1**3 * r2**3) * (
        r2**3 * (r1**7 * r2 * r3**4 + 8 * r1**4 * r2 * r3**7 - 12 * r1**3 + 2 * r3**3) * h0**2
        + r3**3 * (r1**7 * r2**4 * r3 + r1**4 * r2**7 * r3 + 2 * r1**3 + 2 * r2**3) * h1**2
        + r1**3 * (8 * r1 * r2**4 * r3**7 + r1 * r2**7 * r3**4 - 12 * r2**3 + 2 * r3**3) * h3**2
        - r1**4 * r2**4 * r3 / 2 * (r1**3 * r3**3 + r2**3 * r3**3 + 8 * r3**6)
        + 4 * r3**6 - 3 * r1**6 - 3 * r2**6 - r1**3 * r3**3 - r2**3 * r3**3
        + 6 * r1**3 * r2**3)
    kk = 1 / (7 * r1**4 * r2**4 * r3**4) * (
        r2**3 * (5 * r1**4 * r2 * r3**7 + 5 * r1**7 * r2 * r3**4 - 4 * r1**3 - 4 * r3**3) * h0**2
        + r3**3 * (5 * r1**4 * r2**7 * r3 + 5 * r1**7 * r2**4 * r3 - 4 * r1**3 - 4 * r2**3) * h1**2
        + r1**3 * (5 * r1 * r2**4 * r3**7 + 5 * r1 * r2**7 * r3**4 - 4 * r2**3 - 4 * r3**3) * h3**2
        - 5 * r1**4 * r2**4 * r3**4 / 2 * (r1**3 + r2**3 + r3**3)
        + 2 * (r1**3 * r2**3 + r1**3 * r3**3 + r2**3 * r3**3) - (r1**6 + r2**6 + r3**6))
    T[3:, 3:] = kk * np.eye(4)
    return T


def closed_form_general(p: GeneralParams) -> TorsionData:
    """Closed-form torsion of the diagonal family in the general convention.

    The expressions carry corrections to a sign in ``tau0``, two
    coefficients of ``tau27_23`` and the ``p4`` block of ``tau27``; they
    match the first-principles computation.
    """
    if p.convention != "general":
        p = GeneralParams(*p.general_r(), p.h, convention="general")
    r1, r2, r3 = p.r
    h = np.asarray(p.h, float)
    tau0 = _general_tau0(r1, r2, r3, h)
    tau1 = _general_tau1(r1, r2, r3, h)
    tau2 = _general_tau2(r1, r2, r3, h)
    tau27 = _general_tau27(r1, r2, r3, h)
    s = G2Structure.from_params(p)
    g = s.metric
    T = (0.25 * tau0 * g.gram - to_matrix(hodge_star(wedge(tau1, s.psi), g))
         - 0.5 * to_matrix(tau2) - tau27)
    return TorsionData(tau0, tau1, tau2, None, tau27, T, tensor_norm_sq(T, g))


# ---------------------------------------------------------------------------
# closed forms: the h = 1 diagonal family (intro convention)


def closed_form_r123(r1: float, r2: float, r3: float) -> TorsionData:
    """Torsion of ``phi_r`` for ``h = 1`` in the intro convention.

    Here ``tau1 = tau2 = 0`` and ``T = tau0/4 g - tau27`` is diagonal.  The
    diagonal entries ``p1, p2, p3`` of ``tau27`` carry the opposite overall
    sign to a commonly quoted form; only this sign makes ``tau27`` trace-free.
    """
    P = r1 * r2 * r3
    s3 = r1**3 - r2**3 + r3**3
    q = r1**6 * r3**6 + r2**6 * r3**6 + r1**6 * r2**6
    tau0 = -4 / (7 * P**4) * (2 * P**4 * s3 + P * q + r1**3 * r2**3
                              - r1**3 * r3**3 + r2**3 * r3**3)
    p1 = 1 / (7 * r1**10 * r2**4 * r3**4) * (
        6 * r1**7 * r2 * r3**7 - 2 * r1**4 * r2**4 * r3**7 - 8 * r1 * r2**7 * r3**7
        + 12 * r1**7 * r2**4 * r3**4 + 2 * r1**4 * r2**7 * r3**4 + 6 * r1**7 * r2**7 * r3
        + r1**3 * r3**3 - 8 * r2**3 * r3**3 - r1**3 * r2**3)
    p2 = 1 / (7 * r1**4 * r2**10 * r3**4) * (
        6 * r1 * r2**7 * r3**7 - 2 * r1**4 * r2**4 * r3**7 - 8 * r1**7 * r2 * r3**7
        - 12 * r1**4 * r2**7 * r3**4 - 2 * r1**7 * r2**4 * r3**4 + 6 * r1**7 * r2**7 * r3
        + 8 * r1**3 * r3**3 - r2**3 * r3**3 - r1**3 * r2**3)
    p3 = 1 / (7 * r1**4 * r2**4 * r3**10) * (
        6 * r1**7 * r2 * r3**7 + 12 * r1**4 * r2**4 * r3**7 + 6 * r1 * r2**7 * r3**7
        - 2 * r1**7 * r2**4 * r3**4 + 2 * r1**4 * r2**7 * r3**4 - 8 * r1**7 * r2**7 * r3
        + r1**3 * r3**3 - r2**3 * r3**3 - 8 * r1**3 * r2**3)
    p4 = -1 / (7 * P**3) * (2 * P**4 * s3 + P * q - 2.5 * (
        r1**3 * r2**3 - r1**3 * r3**3 + r2**3 * r3**3))
    tau27 = np.diag([p1, p2, p3, p4, p4, p4, p4])
    g = InnerProduct(np.diag([r1**-6, r2**-6, r3**-6] + [P] * 4))
    T = 0.25 * tau0 * g.gram - tau27
    return TorsionData(tau0, Multivector(1), Multivector(2), None, tau27, T,
                       tensor_norm_sq(T, g))


# ---------------------------------------------------------------------------
# |T|^2 as a quadratic form in h


@dataclass(frozen=True)
class RhoCoefficients:
    """``|T|^2 = rho0 h0^2 + rho1 h1^2 + rho3 h3^2 + varrho``."""

    rho0: float
    rho1: float
    rho3: float
    varrho: float

    def energy(self, h: np.ndarray) -> float:
        h0, h1, _, h3 = h
        return self.rho0 * h0**2 + self.rho1 * h1**2 + self.rho3 * h3**2 + self.varrho

    def as_tuple(self) -> tuple[float, float, float]:
        return self.rho0, self.rho1, self.rho3


def f_xyz(x: float, y: float, z: float) -> float:
    """The polynomial generating the rho coefficients by cyclic permutation."""
    return (4 * (x + z) / (x**6 * y**3 * z**6) * (x * x - x * z + z * z)
            * (x**4 * y * z**4 + 2)
            * (x**6 + y**6 + z**6 - 2 * x**3 * z**3 - x**4 * y**7 * z**4))


def rho_coefficients(r1: float, r2: float, r3: float,
                     with_varrho: bool = True) -> RhoCoefficients:
    """Rho coefficients in the general convention.

    ``varrho`` has no closed form; it is ``|T|^2`` at ``h = (0, 0, 1, 0)``
    (``nan`` when ``with_varrho`` is false).
    """
    if r1 * r2 * r3 <= 0:
        from .errors import DomainError
        raise DomainError(f"r1*r2*r3 must be positive, got {r1 * r2 * r3!r}")
    varrho = (norm_sq(GeneralParams(r1, r2, r3, (0.0, 0.0, 1.0, 0.0)))
              if with_varrho else float("nan"))
    return RhoCoefficients(f_xyz(r1, r2, r3), f_xyz(r2, r3, r1),
                           f_xyz(r3, r1, r2), varrho)


def rho_extracted(r1: float, r2: float, r3: float) -> RhoCoefficients:
    """Rho coefficients read off first-principles norms at the four poles."""
    n = [norm_sq(GeneralParams(r1, r2, r3, e)) for e in np.eye(4)]
    return RhoCoefficients(n[0] - n[2], n[1] - n[2], n[3] - n[2], n[2])


def reduced_rho(t1: float, t2: float, t3: float) -> tuple[float, float, float]:
    """Unit-volume rho polynomials in the cubed radii ``t_i = r_i^3``.

    They equal ``f/4`` at ``r_i = cbrt(t_i)`` with ``t1 t2 t3 = 1``.  The
    second cubic term of ``rho3`` is ``t2^3``.
    """
    a, b, c = t1, t2, t3
    rho0 = (2 * c**3 * b + 2 * c * b**3 + 2 * a**3 * b + 2 * a * b**3 + c**3
            - c**2 * a - c * a**2 - c * b**2 + a**3 - a * b**2 - c * b - a * b
            - 2 * c - 2 * a)
    rho1 = (2 * c**3 * a + 2 * c**3 * b + 2 * c * a**3 + 2 * c * b**3 - c**2 * a
            - c**2 * b + a**3 - a**2 * b - a * b**2 + b**3 - c * a - c * b
            - 2 * a - 2 * b)
    rho3 = (2 * c**3 * a + 2 * c * a**3 + 2 * a**3 * b + 2 * a * b**3 + c**3
            - c**2 * b - c * a**2 - c * b**2 - a**2 * b + b**3 - c * a - a * b
            - 2 * c - 2 * b)
    return rho0, rho1, rho3
