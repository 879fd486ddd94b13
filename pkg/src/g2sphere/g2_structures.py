"""Invariant G2-structures on Sp(2)/Sp(1) and their metrics.

Every structure is ultimately a point ``(a, D)`` of ``R+ x GL+(3)``; the
3-form is

    phi = a^3 e^123 + sum_ij (D^-1)_ij e^j ^ omega_i,

so row ``i`` of ``D^-1`` pairs with ``omega_i``.  The Ansatz ``(r, h)`` and
the diagonal families ``(r1, r2, r3, h)`` are thin constructors on top.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .algebra_core import (
    DIM, OMEGAS, InnerProduct, Multivector, _wedge_table, contract, flat,
    form, hodge_star, wedge,
)
from .errors import DomainError

QUAT_RENORM_MAX = 1e-6
QUAT_EXACT = 1e-12


# ---------------------------------------------------------------------------
# quaternions


def unit_quaternion(h: Sequence[float]) -> np.ndarray:
    """Validate a unit quaternion ``(h0, h1, h2, h3)``.

    Inputs within ``1e-6`` of the unit sphere are renormalized, anything
    further away is rejected.
    """
    q = np.asarray(h, dtype=float).reshape(-1)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise DomainError(f"quaternion must have 4 finite components, got {h!r}")
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > QUAT_RENORM_MAX:
        raise DomainError(f"quaternion norm {n:.17g} is not 1")
    if abs(n - 1.0) > QUAT_EXACT:
        q = q / n
    return q


def quat_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product."""
    p0, p1, p2, p3 = p
    q0, q1, q2, q3 = q
    return np.array([
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    ])


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def upsilon(h: Sequence[float]) -> np.ndarray:
    """Double cover ``S^3 -> SO(3)``, ``Upsilon(h) x = h x h^-1``."""
    h0, h1, h2, h3 = h
    return np.array([
        [h0**2 + h1**2 - h2**2 - h3**2, 2 * (h1 * h2 - h0 * h3), 2 * (h1 * h3 + h0 * h2)],
        [2 * (h1 * h2 + h0 * h3), h0**2 - h1**2 + h2**2 - h3**2, 2 * (h2 * h3 - h0 * h1)],
        [2 * (h1 * h3 - h0 * h2), 2 * (h2 * h3 + h0 * h1), h0**2 - h1**2 - h2**2 + h3**2],
    ])


def _canonical_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible component is positive."""
    for x in v:
        if abs(x) > tol:
            return v if x > 0 else -v
    return v


def upsilon_inverse(A: np.ndarray) -> np.ndarray:
    """A unit quaternion ``h`` with ``upsilon(h) = A`` (sign: first nonzero > 0)."""
    x, y, z, w = Rotation.from_matrix(A).as_quat()
    return _canonical_sign(np.array([w, x, y, z]))


# ---------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class G2Params:
    """Point ``(a, D)`` of the global chart ``R+ x GL+(3, R)``."""

    a: float
    D: np.ndarray

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        if D.shape != (3, 3) or not np.all(np.isfinite(D)):
            raise DomainError("D must be a finite 3x3 matrix")
        if not (np.isfinite(self.a) and self.a > 0):
            raise DomainError(f"a = {self.a!r} must be positive")
        if np.linalg.det(D) <= 0:
            raise DomainError(f"det D = {np.linalg.det(D):.17g} must be positive")
        D.flags.writeable = False
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "D", D)

    @property
    def D_inv(self) -> np.ndarray:
        return np.linalg.inv(self.D)

    def to_g2params(self) -> G2Params:
        return self


@dataclass(frozen=True)
class AnsatzParams:
    """The family ``phi_r = Phi(r, Upsilon(h-bar))`` with metric ``g_r``."""

    r: float
    h: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0):
            raise DomainError(f"r = {self.r!r} must be positive")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "h", unit_quaternion(self.h))

    def to_g2params(self) -> G2Params:
        return G2Params(self.r, upsilon(quat_conj(self.h)))

    def to_general(self) -> GeneralParams:
        """The same structure in the diagonal family, general convention."""
        s = self.r ** (1.0 / 3.0)
        return GeneralParams(s, s, s, self.h, "general")


Convention = Literal["intro", "general"]


@dataclass(frozen=True)
class GeneralParams:
    """Diagonal family ``(r1, r2, r3, h)``.

    ``convention="general"`` gives ``(r1 r2 r3)^3 e^123`` and column scales
    ``r_j^2/(r_k r_l)`` with metric ``diag(r_i^6, (r1 r2 r3)^-1 I4)``;
    ``"intro"`` is the same family under ``r_i -> 1/r_i``.
    Negative ``r_i`` are allowed as long as ``r1 r2 r3 > 0``.
    """

    r1: float
    r2: float
    r3: float
    h: np.ndarray
    convention: Convention = "general"

    def __post_init__(self):
        rs = (self.r1, self.r2, self.r3)
        if not all(np.isfinite(x) and x != 0 for x in rs):
            raise DomainError(f"r = {rs!r} must be finite and nonzero")
        if self.r1 * self.r2 * self.r3 <= 0:
            raise DomainError(f"r1*r2*r3 = {self.r1 * self.r2 * self.r3:.17g} must be positive")
        if self.convention not in ("intro", "general"):
            raise DomainError(f"unknown convention {self.convention!r}")
        for name in ("r1", "r2", "r3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "h", unit_quaternion(self.h))

    @property
    def r(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3])

    def general_r(self) -> np.ndarray:
        """Radii in the general convention."""
        return self.r if self.convention == "general" else 1.0 / self.r

    def with_h(self, h: Sequence[float]) -> GeneralParams:
        return GeneralParams(self.r1, self.r2, self.r3, h, self.convention)

    def column_scales(self) -> np.ndarray:
        r1, r2, r3 = self.general_r()
        return np.array([r1**2 / (r2 * r3), r2**2 / (r1 * r3), r3**2 / (r1 * r2)])

    def to_g2params(self) -> G2Params:
        rho = float(np.prod(self.general_r()))
        D_inv = upsilon(self.h) * self.column_scales()[None, :]
        return G2Params(rho, np.linalg.inv(D_inv))

    def metric_diagonal(self) -> np.ndarray:
        rs = self.general_r()
        return np.concatenate([rs**6, np.full(4, 1.0 / np.prod(rs))])


AnyParams = G2Params | AnsatzParams | GeneralParams


def as_g2params(p: AnyParams) -> G2Params:
    return p.to_g2params()


# ---------------------------------------------------------------------------
# forms and metrics


def phi_from_params(p: AnyParams) -> Multivector:
    """The invariant 3-form ``Phi(a, D)``."""
    q = as_g2params(p)
    M = q.D_inv
    phi = form(1, 2, 3, coeff=q.a**3)
    for i in range(3):
        for j in range(3):
            if M[i, j] != 0.0:
                phi = phi + M[i, j] * wedge(form(j + 1), OMEGAS[i])
    return phi


PHI0 = phi_from_params(G2Params(1.0, np.eye(3)))


def induced_bilinear(phi: Multivector) -> np.ndarray:
    """``B_ij``: coefficient of ``e^1..7`` in ``(e_i⌟phi)^(e_j⌟phi)^phi``."""
    if phi.degree != 3:
        raise ValueError("induced_bilinear expects a 3-form")
    K = np.stack([contract(np.eye(DIM)[i], phi).data for i in range(DIM)])
    v4 = _wedge_table(4, 3)[:, :, 0] @ phi.data
    Q = _wedge_table(2, 2) @ v4
    B = K @ Q @ K.T
    return 0.5 * (B + B.T)


def metric_from_phi(phi: Multivector) -> InnerProduct:
    """Metric ``g = B / (6^(2/9) det(B)^(1/9))`` induced by ``phi``."""
    B = induced_bilinear(phi)
    w = np.linalg.eigvalsh(B)
    scale = max(1.0, float(np.abs(w).max()))
    if not (w.min() > 1e-12 * scale or w.max() < -1e-12 * scale):
        raise DomainError("3-form is not a G2-structure (induced form is indefinite)")
    det = float(np.prod(w))
    if det <= 0:
        raise DomainError("3-form has negative orientation (det B <= 0)")
    return InnerProduct(B / (6.0 ** (2.0 / 9.0) * det ** (1.0 / 9.0)))


@dataclass(frozen=True)
class G2Structure:
    """A 3-form together with its metric and dual 4-form."""

    phi: Multivector
    metric: InnerProduct
    psi: Multivector

    @classmethod
    def from_phi(cls, phi: Multivector) -> G2Structure:
        g = metric_from_phi(phi)
        return cls(phi, g, hodge_star(phi, g))

    @classmethod
    def from_params(cls, p: AnyParams) -> G2Structure:
        return cls.from_phi(phi_from_params(p))


def bryant_form(base: G2Structure, f: float, X: np.ndarray,
                tol: float = 1e-10) -> Multivector:
    """Isometric structure ``(f^2-|X|^2) phi - 2f X⌟psi + 2 X^flat ^ X⌟phi``."""
    X = np.asarray(X, dtype=float)
    if np.any(np.abs(X[3:]) > 0):
        raise DomainError("X must lie in p1+p2+p3")
    nx = base.metric.vector_inner(X, X)
    if abs(f * f + nx - 1.0) > tol:
        raise DomainError(f"f^2 + |X|^2 = {f * f + nx:.17g} must equal 1")
    phi, psi = base.phi, base.psi
    return ((f * f - nx) * phi - 2.0 * f * contract(X, psi)
            + 2.0 * wedge(flat(X, base.metric), contract(X, phi)))


def bryant_vector(p: GeneralParams) -> tuple[float, np.ndarray]:
    """``(f, X)`` reproducing ``p`` from its ``h = 1`` member.

    In the intro convention ``X = -sum r_k^3 h_k e_k``, i.e. the vector
    ``sum r_k^3 h_k e_k`` of the conjugate quaternion; in the general
    convention the radii are inverted.
    """
    rs = p.r if p.convention == "intro" else 1.0 / p.r
    X = np.zeros(DIM)
    X[:3] = -rs**3 * p.h[1:]
    return float(p.h[0]), X


def isometric_check(p: AnyParams, q: AnyParams,
                    tol: float = 1e-9) -> tuple[bool, np.ndarray | None]:
    """Whether two structures induce the same metric; witness ``A = D^-1 D~``."""
    p, q = as_g2params(p), as_g2params(q)
    if abs(p.a - q.a) > tol * max(1.0, abs(p.a)):
        return False, None
    A = np.linalg.solve(p.D, q.D)
    if np.abs(A @ A.T - np.eye(3)).max() > tol or np.linalg.det(A) <= 0:
        return False, None
    return True, A


@dataclass(frozen=True)
class BlockDecomposition:
    r1: float
    r2: float
    r3: float
    r4: float
    v: np.ndarray
    h: np.ndarray

    def to_g2params(self) -> G2Params:
        return from_block(self.r1, self.r2, self.r3, self.r4, self.v, self.h)


def from_block(r1: float, r2: float, r3: float, r4: float,
               v: Sequence[float], h: Sequence[float]) -> G2Params:
    """``a = (r1 r2 r3)^(-1/3)``, ``D = c Upsilon(v) diag(r) Upsilon(h)``."""
    rr = r1 * r2 * r3
    c = np.cbrt(r4**2 / rr)
    D = c * upsilon(v) @ np.diag([r1, r2, r3]) @ upsilon(h)
    return G2Params(rr ** (-1.0 / 3.0), D)


def block_decomposition(p: AnyParams) -> BlockDecomposition:
    """Factor ``(a, D)`` as in :func:`from_block` with positive radii.

    Eigenvalues of ``S = C C^t`` are taken in descending order and
    eigenvectors normalized so their first nonzero entry is positive; the
    last one is flipped if needed to land in SO(3).
    """
    q = as_g2params(p)
    detD = float(np.linalg.det(q.D))
    N = q.D / (q.a * np.cbrt(detD))
    w, P = np.linalg.eigh(N @ N.T)
    order = np.argsort(w)[::-1]
    w, P = w[order], P[:, order]
    P = np.column_stack([_canonical_sign(P[:, k]) for k in range(3)])
    if np.linalg.det(P) < 0:
        P[:, 2] = -P[:, 2]
    rs = np.sqrt(w)
    A = np.diag(1.0 / rs) @ P.T @ N
    return BlockDecomposition(float(rs[0]), float(rs[1]), float(rs[2]),
                              float(np.sqrt(detD)), upsilon_inverse(P),
                              upsilon_inverse(A))
