"""Lie-algebraic data of sp(2) = sp(1) + p and exterior calculus on p.

The basis of sp(2) is ordered ``v1, v2, v3, e1, ..., e7`` (indices 0..9).
Forms on p are written in the dual coframe ``e^1, ..., e^7`` and are keyed
by strictly increasing 1-based index tuples, so ``(1, 2, 3)`` is ``e^{123}``.
Internally every :class:`Multivector` stores a dense coefficient vector
over the lexicographically ordered tuples of its degree; all products are
contractions against precomputed integer tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, Mapping

import numpy as np

DIM = 7
BASIS_NAMES = ("v1", "v2", "v3", "e1", "e2", "e3", "e4", "e5", "e6", "e7")

# Nonzero brackets [b_a, b_b] for a < b, as {index: coefficient}.
# Computed from the quaternionic 2x2 matrix model of sp(2).
_BRACKET_ENTRIES: dict[tuple[int, int], dict[int, int]] = {
    (0, 1): {2: 2}, (0, 2): {1: -2}, (1, 2): {0: 2},
    (0, 6): {9: -1}, (0, 7): {8: 1}, (0, 8): {7: -1}, (0, 9): {6: 1},
    (1, 6): {8: -1}, (1, 7): {9: -1}, (1, 8): {6: 1}, (1, 9): {7: 1},
    (2, 6): {7: 1}, (2, 7): {6: -1}, (2, 8): {9: -1}, (2, 9): {8: 1},
    (3, 4): {5: 2}, (3, 5): {4: -2}, (4, 5): {3: 2},
    (3, 6): {9: 1}, (3, 7): {8: 1}, (3, 8): {7: -1}, (3, 9): {6: -1},
    (4, 6): {8: -1}, (4, 7): {9: 1}, (4, 8): {6: 1}, (4, 9): {7: -1},
    (5, 6): {7: 1}, (5, 7): {6: -1}, (5, 8): {9: 1}, (5, 9): {8: -1},
    (6, 7): {2: 1, 5: 1}, (6, 8): {1: -1, 4: -1}, (6, 9): {0: -1, 3: 1},
    (7, 8): {0: 1, 3: 1}, (7, 9): {1: -1, 4: 1}, (8, 9): {2: -1, 5: 1},
}


def _full_table() -> np.ndarray:
    c = np.zeros((10, 10, 10), dtype=np.int64)
    for (a, b), out in _BRACKET_ENTRIES.items():
        for k, v in out.items():
            c[a, b, k] = v
            c[b, a, k] = -v
    return c


@dataclass(frozen=True)
class StructureConstants:
    """Bracket table of sp(2) and its projection onto p.

    Attributes
    ----------
    full_bracket : ndarray of int, shape (10, 10, 10)
        ``full_bracket[a, b, c]`` is the coefficient of basis element ``c``
        in ``[b_a, b_b]``.
    p_bracket : ndarray of int, shape (7, 7, 7)
        ``p_bracket[i, j, k]`` is the ``e_{k+1}`` coefficient of
        ``[e_{i+1}, e_{j+1}]``.
    """

    full_bracket: np.ndarray = field(default_factory=_full_table)

    @property
    def p_bracket(self) -> np.ndarray:
        return self.full_bracket[3:, 3:, 3:]

    def jacobi_defect(self) -> int:
        """Largest absolute entry of the cyclic Jacobi sum (exact integers)."""
        c = self.full_bracket
        # [x,[y,z]] coefficients: c[y,z,m] c[x,m,n]
        t = np.einsum("bcm,amn->abcn", c, c)
        jac = t + np.einsum("abcn->bcan", t) + np.einsum("abcn->cabn", t)
        return int(np.abs(jac).max())


STRUCTURE = StructureConstants()


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lie bracket of two elements of sp(2) given in the 10-element basis."""
    return np.einsum("a,b,abc->c", np.asarray(x, float), np.asarray(y, float),
                     STRUCTURE.full_bracket)


def bracket_p(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Projection onto p of ``[x, y]`` for ``x, y`` in p (7-vectors)."""
    return np.einsum("a,b,abc->c", np.asarray(x, float), np.asarray(y, float),
                     STRUCTURE.p_bracket)


# ---------------------------------------------------------------------------
# index bookkeeping


@lru_cache(maxsize=None)
def combos(k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing 1-based index tuples of length ``k``."""
    return tuple(combinations(range(1, DIM + 1), k))


@lru_cache(maxsize=None)
def _position(k: int) -> dict[tuple[int, ...], int]:
    return {t: n for n, t in enumerate(combos(k))}


def _sort_sign(idx: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple (0 on repeats)."""
    lst = list(idx)
    if len(set(lst)) != len(lst):
        return 0, ()
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(lst)


@lru_cache(maxsize=None)
def _wedge_table(p: int, q: int) -> np.ndarray:
    out = np.zeros((comb(DIM, p), comb(DIM, q), comb(DIM, p + q)))
    pos = _position(p + q)
    for a, I in enumerate(combos(p)):
        for b, J in enumerate(combos(q)):
            s, K = _sort_sign(I + J)
            if s:
                out[a, b, pos[K]] = s
    return out


@lru_cache(maxsize=None)
def _contract_table(k: int) -> np.ndarray:
    # e_i contracted into e^{I}: (-1)^m e^{I minus i_m} when I_m = i
    out = np.zeros((DIM, comb(DIM, k), comb(DIM, k - 1)))
    pos = _position(k - 1)
    for a, I in enumerate(combos(k)):
        for m, i in enumerate(I):
            out[i - 1, a, pos[I[:m] + I[m + 1:]]] = (-1) ** m
    return out


@lru_cache(maxsize=None)
def ce_matrix(k: int) -> np.ndarray:
    """Integer matrix of the invariant exterior derivative on k-forms.

    Uses ``d alpha(X_0..X_k) = sum_{i<j} (-1)^{i+j} alpha([X_i,X_j]_p, ...)``,
    the formula for left-invariant forms restricted to invariant ones.
    """
    cb = STRUCTURE.p_bracket
    src = _position(k)
    out = np.zeros((comb(DIM, k + 1), comb(DIM, k)), dtype=np.int64)
    for row, J in enumerate(combos(k + 1)):
        for i, j in combinations(range(k + 1), 2):
            rest = J[:i] + J[i + 1:j] + J[j + 1:]
            for m in range(DIM):
                c = cb[J[i] - 1, J[j] - 1, m]
                if c == 0:
                    continue
                s, K = _sort_sign((m + 1,) + rest)
                if s:
                    out[row, src[K]] += (-1) ** (i + j) * s * c
    return out


# ---------------------------------------------------------------------------
# forms


class Multivector:
    """Alternating form of fixed degree on p in the coframe ``e^1..e^7``.

    Parameters
    ----------
    degree : int
        Form degree, 0 to 7.
    data : array_like, optional
        Dense coefficients ordered like :func:`combos` ``(degree)``.
    """

    __slots__ = ("degree", "data")

    def __init__(self, degree: int, data: np.ndarray | None = None):
        if not 0 <= degree <= DIM:
            raise ValueError(f"degree {degree} outside 0..{DIM}")
        n = comb(DIM, degree)
        if data is None:
            arr = np.zeros(n)
        else:
            arr = np.array(data, dtype=float).reshape(n)
        arr.flags.writeable = False
        self.degree = degree
        self.data = arr

    @classmethod
    def from_dict(cls, coeffs: Mapping[tuple[int, ...], float],
                  degree: int | None = None) -> Multivector:
        """Build from ``{index tuple: coefficient}``; tuples need not be sorted."""
        if degree is None:
            if not coeffs:
                raise ValueError("degree needed for an empty form")
            degree = len(next(iter(coeffs)))
        arr = np.zeros(comb(DIM, degree))
        pos = _position(degree)
        for key, val in coeffs.items():
            if len(key) != degree:
                raise ValueError(f"key {key} does not have degree {degree}")
            s, K = _sort_sign(key)
            if s:
                arr[pos[K]] += s * val
        return cls(degree, arr)

    @property
    def coeffs(self) -> dict[tuple[int, ...], float]:
        """Nonzero coefficients keyed by increasing index tuples."""
        return {t: float(v) for t, v in zip(combos(self.degree), self.data) if v != 0.0}

    def __getitem__(self, key: tuple[int, ...]) -> float:
        s, K = _sort_sign(key)
        return s * float(self.data[_position(self.degree)[K]]) if s else 0.0

    def _check(self, other: Multivector) -> None:
        if not isinstance(other, Multivector) or other.degree != self.degree:
            raise TypeError("forms of different degree cannot be added")

    def __add__(self, other: Multivector) -> Multivector:
        self._check(other)
        return Multivector(self.degree, self.data + other.data)

    def __sub__(self, other: Multivector) -> Multivector:
        self._check(other)
        return Multivector(self.degree, self.data - other.data)

    def __neg__(self) -> Multivector:
        return Multivector(self.degree, -self.data)

    def __mul__(self, c: float) -> Multivector:
        return Multivector(self.degree, float(c) * self.data)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> Multivector:
        return Multivector(self.degree, self.data / float(c))

    def __xor__(self, other: Multivector) -> Multivector:
        return wedge(self, other)

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def allclose(self, other: Multivector, atol: float = 1e-12) -> bool:
        return self.degree == other.degree and bool(
            np.allclose(self.data, other.data, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = " + ".join(f"{v:.6g}*e^{''.join(map(str, k))}"
                           for k, v in self.coeffs.items())
        return f"Multivector({self.degree}: {terms or '0'})"


def form(*idx: int, coeff: float = 1.0) -> Multivector:
    """The basis form ``coeff * e^{i1 i2 ...}`` (indices in any order)."""
    return Multivector.from_dict({tuple(idx): coeff}, degree=len(idx))


def scalar(c: float) -> Multivector:
    return Multivector(0, [c])


def wedge(alpha: Multivector, beta: Multivector) -> Multivector:
    """Exterior product."""
    p, q = alpha.degree, beta.degree
    if p + q > DIM:
        raise ValueError(f"wedge of degrees {p} and {q} exceeds {DIM}")
    data = np.einsum("a,b,abc->c", alpha.data, beta.data, _wedge_table(p, q))
    return Multivector(p + q, data)


def contract(v: np.ndarray, alpha: Multivector) -> Multivector:
    """Interior product ``v ⌟ alpha`` of a p-vector (7 components)."""
    if alpha.degree == 0:
        return Multivector(0)
    data = np.einsum("i,a,iab->b", np.asarray(v, float), alpha.data,
                     _contract_table(alpha.degree))
    return Multivector(alpha.degree - 1, data)


def basis_vector(i: int) -> np.ndarray:
    """The vector ``e_i`` of p, 1-based."""
    v = np.zeros(DIM)
    v[i - 1] = 1.0
    return v


def ce_differential(alpha: Multivector) -> Multivector:
    """Exterior derivative of the invariant form ``alpha`` on Sp(2)/Sp(1)."""
    if alpha.degree == DIM:
        raise ValueError("no forms of degree 8")
    return Multivector(alpha.degree + 1, ce_matrix(alpha.degree) @ alpha.data)


d = ce_differential


@lru_cache(maxsize=None)
def isotropy_action(k: int) -> np.ndarray:
    """Matrices of ``ad(v_1), ad(v_2), ad(v_3)`` acting on k-forms, stacked.

    ``(v . alpha)(X_1, ..., X_k) = -sum_j alpha(..., [v, X_j], ...)``.
    """
    c = STRUCTURE.full_bracket[:3, 3:, 3:]
    n = comb(DIM, k)
    out = np.zeros((3, n, n))
    for i in range(3):
        for col, I in enumerate(combos(k)):
            acc = Multivector(k)
            for t, m in enumerate(I):
                # (v . e^m)(e_j) = -e^m([v, e_j])
                one = Multivector(1, -c[i][:, m - 1].astype(float))
                left = form(*I[:t]) if t else scalar(1.0)
                right = form(*I[t + 1:]) if t + 1 < k else scalar(1.0)
                acc = acc + wedge(wedge(left, one), right)
            out[i, :, col] = acc.data
    return out


@lru_cache(maxsize=None)
def invariant_basis(k: int) -> np.ndarray:
    """Orthonormal basis (columns) of the Ad(Sp(1))-invariant k-forms."""
    from scipy.linalg import null_space
    A = isotropy_action(k).reshape(-1, comb(DIM, k))
    return null_space(A) if A.size else np.eye(comb(DIM, k))


OMEGA1 = form(4, 7) + form(5, 6)
OMEGA2 = form(4, 6) - form(5, 7)
OMEGA3 = form(4, 5) + form(6, 7)
OMEGAS = (OMEGA1, OMEGA2, OMEGA3)


# ---------------------------------------------------------------------------
# metric


def _compound(m: np.ndarray, k: int) -> np.ndarray:
    """k-th compound matrix (minors on increasing index sets)."""
    if k == 0:
        return np.ones((1, 1))
    idx = np.array(combos(k)) - 1
    sub = m[idx[:, None, :, None], idx[None, :, None, :]]
    # many minors of a block-diagonal matrix are exactly singular
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.linalg.det(sub)


@lru_cache(maxsize=None)
def _complement(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Position of the complement of each k-tuple and the sign of (I, I^c)."""
    pos = _position(DIM - k)
    full = set(range(1, DIM + 1))
    perm = np.empty(comb(DIM, k), dtype=int)
    sign = np.empty(comb(DIM, k))
    for a, I in enumerate(combos(k)):
        Ic = tuple(sorted(full - set(I)))
        perm[a] = pos[Ic]
        sign[a] = _sort_sign(I + Ic)[0]
    return perm, sign


class InnerProduct:
    """Positive definite inner product on p with orientation ``e^{1..7}``.

    Parameters
    ----------
    gram : array_like, shape (7, 7)
        Metric components ``g_ij = g(e_i, e_j)``.
    """

    def __init__(self, gram: np.ndarray):
        g = np.array(gram, dtype=float)
        if g.shape != (DIM, DIM):
            raise ValueError("gram must be 7x7")
        g = 0.5 * (g + g.T)
        w = np.linalg.eigvalsh(g)
        if w.min() <= 0.0:
            raise ValueError("gram matrix is not positive definite")
        g.flags.writeable = False
        self.gram = g
        self.gram_inv = np.linalg.inv(g)
        self.vol_coeff = float(np.sqrt(np.linalg.det(g)))
        self._compounds: dict[int, np.ndarray] = {}

    def form_gram(self, k: int) -> np.ndarray:
        """Gram matrix of the induced inner product on k-forms."""
        if k not in self._compounds:
            self._compounds[k] = _compound(self.gram_inv, k)
        return self._compounds[k]

    def inner(self, alpha: Multivector, beta: Multivector) -> float:
        if alpha.degree != beta.degree:
            raise ValueError("degree mismatch")
        return float(alpha.data @ self.form_gram(alpha.degree) @ beta.data)

    def norm_sq(self, alpha: Multivector) -> float:
        return self.inner(alpha, alpha)

    def vector_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.asarray(u) @ self.gram @ np.asarray(v))

    def volume(self) -> Multivector:
        return Multivector(DIM, [self.vol_coeff])


def hodge_star(alpha: Multivector, g: InnerProduct) -> Multivector:
    """Hodge star, ``beta ^ *alpha = <beta, alpha>_g vol``."""
    k = alpha.degree
    perm, sign = _complement(k)
    raised = g.form_gram(k) @ alpha.data
    out = np.zeros(comb(DIM, DIM - k))
    out[perm] = g.vol_coeff * sign * raised
    return Multivector(DIM - k, out)


def flat(v: np.ndarray, g: InnerProduct) -> Multivector:
    """Metric dual 1-form of a p-vector."""
    return Multivector(1, g.gram @ np.asarray(v, float))


def sharp(alpha: Multivector, g: InnerProduct) -> np.ndarray:
    """Metric dual p-vector of a 1-form."""
    if alpha.degree != 1:
        raise ValueError("sharp expects a 1-form")
    return g.gram_inv @ alpha.data


def to_matrix(beta: Multivector) -> np.ndarray:
    """Skew 7x7 component matrix ``B_ij = beta(e_i, e_j)`` of a 2-form."""
    if beta.degree != 2:
        raise ValueError("to_matrix expects a 2-form")
    m = np.zeros((DIM, DIM))
    for (i, j), v in zip(combos(2), beta.data):
        m[i - 1, j - 1] = v
        m[j - 1, i - 1] = -v
    return m


def from_matrix(m: np.ndarray) -> Multivector:
    """2-form with components ``m_ij`` (skew part of ``m``)."""
    a = 0.5 * (np.asarray(m) - np.asarray(m).T)
    return Multivector(2, [a[i - 1, j - 1] for i, j in combos(2)])
