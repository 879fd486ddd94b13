"""Second variation of the reduced energy, reduced index/nullity and critical sets.

On an isometric class with radii ``r`` (general convention) the squared
torsion is ``rho_0 m_0^2 + rho_1 m_1^2 + rho_3 m_3^2 + varrho``.  Its critical
points on the unit quaternions are exactly the unit vectors of the
eigenspaces of ``diag(rho_0, rho_1, 0, rho_3)``; degenerate eigenvalues give
the circles, 2-spheres and the whole class.

Variations are written ``m(t, s) = k(t, s) h`` with ``k(0, 0) = 1`` and
variation vectors ``V = sum_a (2 / r_a^3) dk_a/dt e_a``.  Hessians are
reported as bilinear-form matrices ``H[a, b] = Hess(e_a, e_b)`` on
``p1 + p2 + p3``; eigenvalues are those of the ``g``-self-adjoint operator
``g^-1 H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq

from .connection import energy_gradient_div
from .errors import DomainError, NotCriticalError
from .g2_structures import AnsatzParams, GeneralParams, quat_mul, unit_quaternion
from .torsion import norm_sq, rho_coefficients

DIV_TOL = 1e-8
RHO_TOL = 1e-9
SUPPORT_TOL = 1e-9
NULL_TOL = 1e-7

ANSATZ_EQUATOR = "Ansatz-equator"
ANSATZ_POLES = "Ansatz-poles"
ANSATZ_R1 = "Ansatz-r1-all"
RP3_ALL = "RP3-all"
NON_CRITICAL = "non-critical"


# ---------------------------------------------------------------------------
# critical sets


@dataclass(frozen=True)
class CriticalClass:
    """Critical-set membership of a point of an isometric class.

    ``label`` names the smallest tabulated set containing the point (a pole
    ``NS_k`` when ``h`` is a pole); ``family`` names the whole eigenspace set
    the point lies on (``S1_03``, ``S2_013``, ...).  Both equal
    ``non-critical`` away from the critical locus.
    """

    label: str
    family: str
    radii: tuple[float, float, float]
    h: tuple[float, float, float, float]
    rho: tuple[float, float, float]
    div_norm: float
    ansatz: bool

    @property
    def critical(self) -> bool:
        return self.label != NON_CRITICAL

    def to_json(self) -> dict:
        return {
            "label": self.label, "family": self.family,
            "radii": list(self.radii), "h": list(self.h),
            "rho": list(self.rho), "div_norm": self.div_norm,
            "ansatz": self.ansatz,
        }


def _general_point(p: AnsatzParams | GeneralParams) -> tuple[np.ndarray, np.ndarray, bool]:
    """Radii (general convention), unit ``h`` and whether all radii agree."""
    if isinstance(p, AnsatzParams):
        c = float(np.cbrt(p.r))
        return np.array([c, c, c]), unit_quaternion(p.h), True
    if isinstance(p, GeneralParams):
        R = np.asarray(p.general_r(), float)
        same = bool(np.all(np.abs(R - R[0]) <= 1e-12 * abs(R[0])))
        return R, unit_quaternion(p.h), same
    raise DomainError(f"expected AnsatzParams or GeneralParams, got {type(p).__name__}")


def div_norm(p: AnsatzParams | GeneralParams) -> float:
    """Metric norm of the energy-gradient divergence, from first principles."""
    R, h, _ = _general_point(p)
    D = energy_gradient_div(GeneralParams(*R, h))
    return float(np.sqrt(np.sum(D[:3] ** 2 / R**6)))


def _eigen_groups(lam: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(lam)
    groups = [[int(order[0])]]
    for i in order[1:]:
        if lam[i] - lam[groups[-1][-1]] <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return [sorted(g) for g in groups]


def _family_label(group: list[int], ansatz: bool) -> str:
    if ansatz:
        if len(group) == 4:
            return ANSATZ_R1
        return ANSATZ_POLES if group == [2] else ANSATZ_EQUATOR
    if len(group) == 4:
        return RP3_ALL
    if len(group) == 1:
        return f"NS_{group[0]}"
    return ("S1_" if len(group) == 2 else "S2_") + "".join(map(str, group))


def classify_critical(p: AnsatzParams | GeneralParams,
                      div_tol: float = DIV_TOL) -> CriticalClass:
    """Locate ``p`` in the critical classification of its isometric class.

    The rho coefficients are grouped into equal eigenvalues at
    ``1e-9 * scale``, then the support of ``h`` (entries above ``1e-9``) is
    tested against the groups.  ``|div T| < div_tol`` has the final word: a
    rule-based match with a nonvanishing divergence is reported as
    non-critical, and a vanishing divergence outside every group falls back
    to the eigenvalue window spanned by the support.
    """
    R, h, ansatz = _general_point(p)
    c = rho_coefficients(*R, with_varrho=False)
    lam = np.array([c.rho0, c.rho1, 0.0, c.rho3])
    scale = max(1.0, float(np.abs(lam).max()))
    support = [i for i in range(4) if abs(h[i]) > SUPPORT_TOL]
    dn = div_norm(p)

    family = None
    for g in _eigen_groups(lam, RHO_TOL * scale):
        if set(support) <= set(g):
            family = g
    if dn >= div_tol:
        family = None
    elif family is None:
        lo, hi = lam[support].min(), lam[support].max()
        family = [i for i in range(4) if lo - RHO_TOL * scale <= lam[i] <= hi + RHO_TOL * scale]

    if family is None:
        label = fam = NON_CRITICAL
    else:
        fam = _family_label(family, ansatz)
        if not ansatz and len(support) == 1 and len(family) < 4:
            label = f"NS_{support[0]}"
        else:
            label = fam
    return CriticalClass(label, fam, tuple(map(float, R)), tuple(map(float, h)),
                         (float(c.rho0), float(c.rho1), float(c.rho3)), dn, ansatz)


# ---------------------------------------------------------------------------
# Hessians


@dataclass(frozen=True)
class StabilityReport:
    """Reduced second variation at a critical point."""

    hessian: np.ndarray
    eigenvalues: np.ndarray
    index_red: int
    null_red: int
    label: str
    metric: np.ndarray
    critical: CriticalClass
    source: str

    def to_json(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "index": self.index_red, "nullity": self.null_red,
            "label": self.label, "class": self.critical.label,
            "hessian": self.hessian.tolist(),
            "metric": [float(x) for x in self.metric],
            "source": self.source, "critical": self.critical.to_json(),
        }


def _report(H: np.ndarray, G: np.ndarray, cls: CriticalClass, source: str,
            null_tol: float = NULL_TOL) -> StabilityReport:
    H = 0.5 * (H + H.T)
    lam = np.sort(eigh(H, np.diag(G), eigvals_only=True))
    index, null = stability_from_eigenvalues(lam, null_tol)
    if null == 3:
        label = "degenerate-flat"
    elif index > 0:
        label = "unstable"
    else:
        label = "stable-min"
    return StabilityReport(H, lam, index, null, label, G, cls, source)


def stability_from_eigenvalues(lam: np.ndarray, null_tol: float = NULL_TOL) -> tuple[int, int]:
    """``(index, nullity)`` from operator eigenvalues."""
    lam = np.asarray(lam, float)
    tol = null_tol * max(1.0, float(np.abs(lam).max()))
    return int(np.sum(lam < -tol)), int(np.sum(np.abs(lam) <= tol))


def _require_critical(p: AnsatzParams | GeneralParams) -> CriticalClass:
    cls = classify_critical(p)
    if not cls.critical:
        raise NotCriticalError(f"not a critical point: |div T| = {cls.div_norm:.3e}")
    return cls


def ansatz_j(h: np.ndarray) -> np.ndarray:
    """The operator ``J_h`` of the equatorial Ansatz Hessian."""
    h0, h1, _, h3 = h
    return np.array([[h3 * h3, -h0 * h3, -h1 * h3],
                     [-h0 * h3, h0 * h0, h0 * h1],
                     [-h1 * h3, h0 * h1, h1 * h1]])


def circle_j(rho: tuple[float, float, float], h: np.ndarray) -> np.ndarray:
    """The operator ``J_(r,h)`` on the circle ``h = (h0, 0, 0, h3)`` (``rho0 = rho3``)."""
    rho0, rho1, _ = rho
    h0, h3 = h[0], h[3]
    return np.array([[-rho0 + h0 * h0 * rho1, rho1 * h0 * h3, 0.0],
                     [rho1 * h0 * h3, -rho0 + h3 * h3 * rho1, 0.0],
                     [0.0, 0.0, 0.0]])


def pole_diagonal(rho: tuple[float, float, float], k: int) -> np.ndarray:
    """Diagonal Hessian operator (without the factor 1/2) at the pole ``NS_k``."""
    r0, r1, r3 = rho
    return np.array({
        0: [r1 - r0, -r0, r3 - r0],
        1: [r0 - r1, r3 - r1, -r1],
        2: [r3, r0, r1],
        3: [-r3, r1 - r3, r0 - r3],
    }[k])


def second_variation(radii: np.ndarray, rho: tuple[float, float, float],
                     h: np.ndarray) -> np.ndarray:
    """Bilinear form ``2 sum_i rho_i (dm_i/dt dm_i/ds + h_i d2m_i/dtds)``.

    Uses ``m = k h`` with ``dk/dt = (0, r^3 V / 2)`` and
    ``d2k_0/dtds = -g(V, W) / 4``.
    """
    R3 = np.asarray(radii, float) ** 3
    w = np.array([rho[0], rho[1], 0.0, rho[2]])
    h = np.asarray(h, float)
    dm = np.stack([quat_mul(np.concatenate([[0.0], 0.5 * R3[a] * np.eye(3)[a]]), h)
                   for a in range(3)])
    G = np.diag(R3**2)
    return 2 * (np.einsum("al,bl,l->ab", dm, dm, w) - 0.25 * G * float(w @ h**2))


def hessian_closed(p: AnsatzParams | GeneralParams) -> StabilityReport:
    """Closed-form reduced Hessian at a critical point.

    The Ansatz uses the three displayed forms (``r = 1``, poles, equator);
    the poles ``NS_k`` of a general class use the diagonal forms; the circle
    ``S1_03`` with ``rho0 = rho3`` uses ``J_(r,h)``.  Other critical sets use
    the second-variation formula directly.
    """
    cls = _require_critical(p)
    R, h, ansatz = _general_point(p)
    G = R**6
    if ansatz:
        r = float(R[0] ** 3)
        c = 4 * (r**3 + 2) * (r**3 - 1) / r**2
        if cls.label == ANSATZ_R1:
            return _report(np.zeros((3, 3)), G, cls, "ansatz-r1")
        if cls.label == ANSATZ_POLES:
            return _report(-c * np.diag(G), G, cls, "ansatz-poles")
        return _report(c * np.diag(G) @ ansatz_j(h), G, cls, "ansatz-equator")
    if cls.label.startswith("NS_"):
        k = int(cls.label[3:])
        return _report(0.5 * np.diag(G * pole_diagonal(cls.rho, k)), G, cls, "pole")
    if cls.label == "S1_03":
        return _report(0.5 * np.diag(G) @ circle_j(cls.rho, h), G, cls, "circle")
    return _report(second_variation(R, cls.rho, h), G, cls, "second-variation")


def hessian_numeric(p: AnsatzParams | GeneralParams, step: float = 1e-3,
                    energy: str = "rho") -> StabilityReport:
    """Finite-difference reduced Hessian at a critical point.

    ``k(t, s) = (sqrt(1 - |u|^2), u)`` with ``u = r^3 (t V + s W) / 2``, so
    ``d2k_0/dtds = -g(V, W) / 4``.  ``energy="rho"`` differentiates the
    rho quadratic form, ``"torsion"`` the first-principles ``|T|^2`` (whose
    rounding error is then amplified by ``step^-2``).
    """
    cls = _require_critical(p)
    R, h, _ = _general_point(p)
    G = R**6
    if energy == "rho":
        c = rho_coefficients(*R, with_varrho=False)
        w = np.array([c.rho0, c.rho1, 0.0, c.rho3])

        def E(m):
            return float(w @ m**2)
    elif energy == "torsion":
        def E(m):
            return norm_sq(GeneralParams(*R, m))
    else:
        raise ValueError("energy must be 'rho' or 'torsion'")

    def at(t: float, s: float, a: np.ndarray, b: np.ndarray) -> float:
        u = 0.5 * R**3 * (t * a + s * b)
        k = np.concatenate([[np.sqrt(1.0 - u @ u)], u])
        return E(quat_mul(k, h))

    e = step
    H = np.zeros((3, 3))
    eye = np.eye(3)
    for i in range(3):
        for j in range(i, 3):
            a, b = eye[i], eye[j]
            H[i, j] = H[j, i] = (at(e, e, a, b) - at(e, -e, a, b)
                                 - at(-e, e, a, b) + at(-e, -e, a, b)) / (4 * e * e)
    return _report(H, G, cls, f"finite-difference-{energy}")


# ---------------------------------------------------------------------------
# special radii


@dataclass(frozen=True)
class SpecialRadius:
    """A root of ``rho0 = rho1 = 0`` on ``r2 = r1``, ``r3 = r1^-8``."""

    r1: float
    r3: float
    residual: float
    tangential: bool


def _curve_rho(x: float) -> tuple[float, float, float]:
    c = rho_coefficients(x, x, x**-8.0, with_varrho=False)
    return c.rho0, c.rho1, c.rho3


def _curve_scale(x: float) -> float:
    """Size of the summands of ``f``, for relative root tests."""
    y, z = x, x**-8.0
    a = abs
    return (4 * (a(x) + a(z)) * (x * x + a(x * z) + z * z) * (a(x**4 * y * z**4) + 2)
            * (x**6 + y**6 + z**6 + 2 * a(x**3 * z**3) + a(x**4 * y**7 * z**4))
            / a(x**6 * y**3 * z**6))


def find_special_radii(lo: float = -2.0, hi: float = 2.0, n: int = 4001,
                       xtol: float = 1e-12, rtol: float = 1e-9) -> list[SpecialRadius]:
    """Real roots of ``rho0 = rho1 = 0`` under ``r2 = r1``, ``r3 = r1^-8``.

    ``rho0`` is scanned on a grid of ``[lo, hi]`` (excluding a neighbourhood
    of 0, where the coefficients overflow); sign changes are refined by
    bisection and local minima of ``|rho0|`` (double roots) are refined by
    bisection on its derivative.  A candidate is kept when both ``rho0``
    and ``rho1`` vanish relative to the size of their summands.
    """
    xs = np.linspace(lo, hi, n)
    xs = xs[np.abs(xs) >= 0.05]
    with np.errstate(all="ignore"):
        v = np.array([_curve_rho(x)[0] / _curve_scale(x) for x in xs])
    cands: list[tuple[float, bool]] = []
    for i in range(len(xs) - 1):
        a, b = xs[i], xs[i + 1]
        if a * b <= 0 or not (np.isfinite(v[i]) and np.isfinite(v[i + 1])):
            continue
        if v[i] == 0:
            cands.append((float(a), False))
        elif v[i] * v[i + 1] < 0:
            cands.append((brentq(lambda x: _curve_rho(x)[0], a, b, xtol=xtol), False))
    def slope(x: float) -> float:
        d = 1e-6 * max(1.0, abs(x))
        return (_curve_rho(x + d)[0] - _curve_rho(x - d)[0]) / (2 * d)

    for i in range(1, len(xs) - 1):
        a, b = xs[i - 1], xs[i + 1]
        if a * b <= 0 or v[i - 1] * v[i + 1] <= 0:
            continue
        if abs(v[i]) <= abs(v[i - 1]) and abs(v[i]) <= abs(v[i + 1]):
            sa, sb = slope(a), slope(b)
            if sa * sb < 0:
                cands.append((brentq(slope, a, b, xtol=xtol), True))
    out: list[SpecialRadius] = []
    for x, tangential in sorted(cands):
        r0, r1, _ = _curve_rho(x)
        res = max(abs(r0), abs(r1)) / _curve_scale(x)
        if res > rtol or any(abs(x - s.r1) < 1e-6 for s in out):
            continue
        out.append(SpecialRadius(float(x), float(x**-8.0), float(res), tangential))
    return out


__all__ = [
    "CriticalClass", "StabilityReport", "SpecialRadius", "classify_critical",
    "hessian_closed", "hessian_numeric", "second_variation", "ansatz_j",
    "circle_j", "pole_diagonal", "find_special_radii", "div_norm",
    "stability_from_eigenvalues",
]
