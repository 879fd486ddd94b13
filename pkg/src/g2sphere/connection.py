"""Levi-Civita connection of invariant metrics and divergences of invariant tensors.

All quantities are evaluated at the base point, in the Killing frame
generated by ``e_1, ..., e_7``.  Two conventions are fixed empirically:

* ``nabla_{e_a} e_b = -1/2 [e_a, e_b]_p + U(e_a, e_b)``.  The minus sign is
  the only one compatible with the Killing-frame derivative rule
  ``e_a(S(e_b, e_c)) = -S([e_a, e_b]_p, e_c) - S(e_b, [e_a, e_c]_p)``
  (metric compatibility).
* The divergence of a 2-tensor contracts the derivative with a chosen slot.
  ``slot=1`` (``(div T)_j = g^ab (nabla_a T)(e_j, e_b)``) reproduces the
  closed-form divergence and the exterior formula; ``slot=0`` is the
  contraction whose negative is the gradient of ``|T|^2`` along isometric
  variations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra_core import DIM, STRUCTURE, InnerProduct, ce_differential, hodge_star, wedge
from .g2_structures import AnyParams, G2Structure
from .torsion import TorsionData, _as_structure, torsion_forms

SIGMA = -1.0
_C = STRUCTURE.p_bracket.astype(float)


@dataclass(frozen=True)
class ConnectionData:
    """``U[a, b, k]`` and ``nabla[a, b, k]`` are ``e_k`` components."""

    U: np.ndarray
    nabla: np.ndarray
    metric: InnerProduct

    def defining_residual(self) -> float:
        """Max violation of ``2g(U(x,y),z) = g([z,x]_p,y) + g(x,[z,y]_p)``."""
        G = self.metric.gram
        lhs = 2 * np.einsum("xyk,kz->xyz", self.U, G)
        gB = np.einsum("zxk,ky->zxy", _C, G)
        rhs = np.einsum("zxy->xyz", gB) + np.einsum("zyx->xyz", gB)
        return float(np.abs(lhs - rhs).max())


def connection_data(g: InnerProduct | np.ndarray) -> ConnectionData:
    """U-operator and connection coefficients of an invariant metric."""
    if not isinstance(g, InnerProduct):
        g = InnerProduct(np.asarray(g, float))
    G = g.gram
    gB = np.einsum("zxk,ky->zxy", _C, G)
    U_low = 0.5 * (np.einsum("zxy->xyz", gB) + np.einsum("zyx->xyz", gB))
    U = U_low @ g.gram_inv
    return ConnectionData(U, SIGMA * 0.5 * _C + U, g)


def covariant_derivative(S: np.ndarray, conn: ConnectionData) -> np.ndarray:
    """``(nabla_{e_a} S)(e_b, e_c)`` for an invariant 2-tensor ``S``."""
    S = np.asarray(S, float)
    lie = -np.einsum("abk,kc->abc", _C, S) - np.einsum("ack,bk->abc", _C, S)
    nab = conn.nabla
    return lie - np.einsum("abk,kc->abc", nab, S) - np.einsum("ack,bk->abc", nab, S)


def divergence(S: np.ndarray, g: InnerProduct | ConnectionData,
               slot: int = 1) -> np.ndarray:
    """Metric-trace divergence of an invariant 2-tensor.

    ``slot=1`` gives ``g^ab (nabla_a S)(e_j, e_b)``, ``slot=0`` gives
    ``g^ab (nabla_a S)(e_b, e_j)``.  Components are those of a 1-form.
    """
    conn = g if isinstance(g, ConnectionData) else connection_data(g)
    nS = covariant_derivative(S, conn)
    gi = conn.metric.gram_inv
    if slot == 0:
        return np.einsum("ab,abj->j", gi, nS)
    if slot == 1:
        return np.einsum("ab,ajb->j", gi, nS)
    raise ValueError("slot must be 0 or 1")


def divergence_invariant_sym(S: np.ndarray, g: InnerProduct) -> np.ndarray:
    """Divergence of an invariant symmetric 2-tensor (slot-independent)."""
    S = np.asarray(S, float)
    return divergence(0.5 * (S + S.T), g)


def star_part(x: G2Structure | AnyParams, td: TorsionData | None = None) -> np.ndarray:
    """``1/2 *d(tau2 ^ phi) - *d(tau1 ^ psi)`` as a 1-form."""
    s = _as_structure(x)
    td = td or torsion_forms(s)
    g = s.metric
    a = hodge_star(ce_differential(wedge(td.tau2, s.phi)), g)
    b = hodge_star(ce_differential(wedge(td.tau1, s.psi)), g)
    return 0.5 * a.data - b.data


def div_full_torsion(x: G2Structure | AnyParams, route: str = "A") -> np.ndarray:
    """Divergence of the full torsion tensor (slot-1 convention).

    Route ``"A"`` uses the exterior formula ``star_part - div tau27``; route
    ``"B"`` applies the connection to the whole tensor ``T``.
    """
    s = _as_structure(x)
    td = torsion_forms(s)
    if route == "A":
        return star_part(s, td) - divergence_invariant_sym(td.tau27, s.metric)
    if route == "B":
        return divergence(td.fullT, s.metric, slot=1)
    raise ValueError("route must be 'A' or 'B'")


def energy_gradient_div(x: G2Structure | AnyParams) -> np.ndarray:
    """``-(div T)`` in the slot-0 convention.

    Along an isometric variation with vector ``V`` one has
    ``d|T|^2 = 2 g(energy_gradient_div, V)``.  It coincides with
    ``div_full_torsion`` whenever ``div tau27`` vanishes (e.g. the Ansatz).
    """
    s = _as_structure(x)
    td = torsion_forms(s)
    return -divergence(td.fullT, s.metric, slot=0)


def closed_form_sym_divergence(r: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Divergence of an invariant symmetric tensor for the diagonal metric.

    ``beta`` holds components ``S(e_a, e_b)``; the metric is
    ``diag(r_i^6, (r1 r2 r3)^-1 I_4)``.  Only the off-diagonal entries of the
    ``p1+p2+p3`` block contribute.
    """
    r1, r2, r3 = r
    R1, R2, R3 = r1**6, r2**6, r3**6
    out = np.zeros(DIM)
    out[0] = -2 * beta[1, 2] * (R2 - R3) / (R2 * R3)
    out[1] = 2 * beta[0, 2] * (R1 - R3) / (R1 * R3)
    out[2] = -2 * beta[0, 1] * (R1 - R2) / (R1 * R2)
    return out


def closed_form_star(r: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Closed form of the exterior part of the divergence (general convention)."""
    r1, r2, r3 = r
    h0, h1, h2, h3 = h
    a = r1 * r2**4 * r3**4
    b = r1**4 * r2 * r3**4
    c = r1**4 * r2**4 * r3
    out = np.zeros(DIM)
    out[0] = 2 * r1**6 / (r2**6 * r3**6) * (
        (a + 2) * (a - 1) * (r2**3 + r3**3) * h2 * h3
        + (a - 2) * (a + 1) * (r2**3 - r3**3) * h0 * h1)
    out[1] = 2 * r2**6 / (r1**6 * r3**6) * (
        (b + 2) * (b - 1) * (r1**3 + r3**3) * h0 * h2
        - (b - 2) * (b + 1) * (r1**3 - r3**3) * h1 * h3)
    out[2] = -2 * r3**6 / (r1**6 * r2**6) * (
        (c + 2) * (c - 1) * (r1**3 + r2**3) * h1 * h2
        + (c - 2) * (c + 1) * (r1**3 - r2**3) * h0 * h3)
    return out


def closed_form_U(r: np.ndarray) -> np.ndarray:
    """U table for the diagonal metric."""
    r1, r2, r3 = r
    U = np.zeros((DIM, DIM, DIM))

    def put(a: int, b: int, k: int, v: float) -> None:
        U[a - 1, b - 1, k - 1] = v
        U[b - 1, a - 1, k - 1] = v

    put(1, 2, 3, (r2**6 - r1**6) / r3**6)
    put(1, 3, 2, (r1**6 - r3**6) / r2**6)
    put(2, 3, 1, (r3**6 - r2**6) / r1**6)
    c1 = (1 - r1**7 * r2 * r3) / 2
    c2 = (1 - r1 * r2**7 * r3) / 2
    c3 = (1 - r1 * r2 * r3**7) / 2
    for a, b, k, v in [
        (1, 4, 7, c1), (2, 4, 6, -c2), (3, 4, 5, c3),
        (1, 5, 6, c1), (2, 5, 7, c2), (3, 5, 4, -c3),
        (1, 6, 5, -c1), (2, 6, 4, c2), (3, 6, 7, c3),
        (1, 7, 4, -c1), (2, 7, 5, -c2), (3, 7, 6, -c3),
    ]:
        put(a, b, k, v)
    return U
