"""Closed-set atoms."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Sequence

import numpy as np

from curvkit.core.rational import to_fraction
from curvkit.core.smooth import SmoothMap
from curvkit.errors import DimensionMismatch, MissingCandidates

ACTIVE_TOL = 1e-9


class ClosedSet:
    """Base class of the set atoms; ``dim`` is the ambient dimension."""

    dim: int


def _is_exact_scalar(v) -> bool:
    return isinstance(v, (int, np.integer, Rational, str)) and not isinstance(v, bool)


def _to_float(v) -> float:
    return float(to_fraction(v, True)) if isinstance(v, str) else float(v)


def _float_array(data, shape) -> np.ndarray:
    if len(shape) == 2:
        arr = np.array([[_to_float(v) for v in row] for row in data], dtype=float)
    else:
        arr = np.array([_to_float(v) for v in data], dtype=float)
    arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


def _exact_rows(data):
    return tuple(tuple(to_fraction(v, True) for v in row) for row in data)


class Polyhedron(ClosedSet):
    """``{y : A y <= b, E y = e}``.

    Entries may be floats, ints, Fractions or rational strings such as
    ``"1/3"``. When every entry is exact the polyhedron is *rational*: active
    sets are then decided by exact comparison instead of the 1e-9 tolerance.
    """

    def __init__(self, A=None, b=None, E=None, e=None, dim: int | None = None):
        A_list = [list(np.atleast_1d(r)) for r in (A if A is not None else [])]
        E_list = [list(np.atleast_1d(r)) for r in (E if E is not None else [])]
        b_list = list(np.atleast_1d(b)) if b is not None else []
        e_list = list(np.atleast_1d(e)) if e is not None else []
        if dim is None:
            rows = A_list or E_list
            if not rows:
                raise DimensionMismatch("dimension of a polyhedron without rows must be given")
            dim = len(rows[0])
        self.dim = int(dim)
        for rows, rhs, label in ((A_list, b_list, "A/b"), (E_list, e_list, "E/e")):
            if len(rows) != len(rhs) or any(len(r) != self.dim for r in rows):
                raise DimensionMismatch(f"polyhedron rows {label} have inconsistent shapes")
        flat = [v for r in A_list + E_list for v in r] + b_list + e_list
        self.rational = bool(flat) and all(_is_exact_scalar(v) or isinstance(v, Fraction) for v in flat)
        self.A = _float_array(A_list, (len(A_list), self.dim))
        self.b = _float_array(b_list, (len(b_list),))
        self.E = _float_array(E_list, (len(E_list), self.dim))
        self.e = _float_array(e_list, (len(e_list),))
        self._A_exact = _exact_rows(A_list)
        self._b_exact = tuple(to_fraction(v, True) for v in b_list)
        self._E_exact = _exact_rows(E_list)
        self._e_exact = tuple(to_fraction(v, True) for v in e_list)

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, ineq={len(self.b)}, eq={len(self.e)})"

    @classmethod
    def nonpositive(cls, n: int = 1) -> "Polyhedron":
        """The orthant of nonpositive vectors."""
        return cls(np.eye(n, dtype=int).tolist(), [0] * n)

    @classmethod
    def nonnegative(cls, n: int = 1) -> "Polyhedron":
        return cls((-np.eye(n, dtype=int)).tolist(), [0] * n)

    @classmethod
    def whole_space(cls, n: int) -> "Polyhedron":
        return cls(dim=n)

    @property
    def num_ineq(self) -> int:
        return len(self.b)

    def exact_data(self):
        return self._A_exact, self._b_exact, self._E_exact, self._e_exact

    def active_set(self, y, tol: float = ACTIVE_TOL) -> list[int]:
        """Indices of inequality rows active at ``y``.

        Exact comparison is used when both the polyhedron and ``y`` are
        rational (ints or Fractions); otherwise a relative tolerance applies.
        """
        if self.rational and all(isinstance(v, (int, Fraction)) for v in y):
            yq = [Fraction(v) for v in y]
            return [
                i
                for i, (row, bi) in enumerate(zip(self._A_exact, self._b_exact))
                if sum((a * x for a, x in zip(row, yq)), Fraction(0)) == bi
            ]
        y = np.asarray(y, dtype=float)
        slack = self.b - self.A @ y
        return [i for i in range(len(slack)) if abs(slack[i]) <= tol * (1.0 + abs(self.b[i]))]

    @cached_property
    def known_nonempty(self) -> bool:
        from curvkit.lp import RationalLP, lp_feasible

        lp = RationalLP(exact=True)
        lp.add_vars(self.dim, "y")
        for row, rhs in zip(self._A_exact, self._b_exact):
            lp.add_le(list(row), rhs)
        for row, rhs in zip(self._E_exact, self._e_exact):
            lp.add_eq(list(row), rhs)
        return lp_feasible(lp).feasible

    @cached_property
    def _projection_pieces(self):
        """Candidate active sets for projection, with precomputed KKT data."""
        from itertools import combinations

        m = self.num_ineq
        E = self.E
        rank_e = np.linalg.matrix_rank(E) if len(E) else 0
        max_k = min(m, self.dim - rank_e)
        pieces = []
        total = 0
        for k in range(max_k + 1):
            for S in combinations(range(m), k):
                total += 1
                if total > 20000:
                    from curvkit.errors import Unsupported

                    raise Unsupported("polyhedron too large for active-set projection")
                R = np.vstack([E, self.A[list(S)]]) if (len(E) or k) else np.zeros((0, self.dim))
                r = np.concatenate([self.e, self.b[list(S)]])
                if len(R):
                    G = R @ R.T
                    if np.linalg.matrix_rank(G) < len(R):
                        continue
                    Ginv = np.linalg.inv(G)
                else:
                    Ginv = np.zeros((0, 0))
                pieces.append((S, R, r, Ginv))
        return pieces


@dataclass(frozen=True, eq=False)
class PolyhedralUnion(ClosedSet):
    branches: tuple

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ValueError("a polyhedral union needs at least one branch")
        if len({p.dim for p in branches}) != 1:
            raise DimensionMismatch("union branches disagree on dimension")
        object.__setattr__(self, "branches", branches)

    @property
    def dim(self):
        return self.branches[0].dim


@dataclass(frozen=True, eq=False)
class Box(ClosedSet):
    """``{y : lower <= y <= upper}`` with infinite bounds allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds differ in length")
        if (lo > hi).any():
            raise ValueError("box has lower > upper")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)


@dataclass(frozen=True)
class SecondOrderCone(ClosedSet):
    """``{y in R^s : |y_{2:s}| <= y_1}``."""

    s: int

    def __post_init__(self):
        if int(self.s) < 3:
            raise ValueError("second-order cones need dimension at least 3")

    @property
    def dim(self):
        return self.s


@dataclass(frozen=True, eq=False)
class Product(ClosedSet):
    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a product needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self):
        return sum(f.dim for f in self.factors)

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.dim))
            start += f.dim
        return out

    def split(self, y) -> list[np.ndarray]:
        y = np.asarray(y, dtype=float)
        return [y[s] for s in self.slices]


@dataclass(frozen=True, eq=False)
class PreImage(ClosedSet):
    """``{x : F(x) in inner}``."""

    F: SmoothMap
    inner: ClosedSet

    def __post_init__(self):
        if self.F.dim_out != self.inner.dim:
            raise DimensionMismatch("pre-image map output does not match the inner set")

    @property
    def dim(self):
        return self.F.dim_in


@dataclass(frozen=True)
class ImageCandidate:
    """A query point of an image set with its known pre-images."""

    point: tuple
    preimages: tuple


@dataclass(frozen=True, eq=False)
class Image(ClosedSet):
    """``{G(z) : z in inner}`` known only through supplied pre-image candidates.

    The two flags are user declarations about ``y -> inner ∩ G^{-1}(y)``;
    they are not verified.
    """

    G: SmoothMap
    inner: ClosedSet
    candidates: tuple = ()
    inner_semicompact: bool = False
    inner_calm_star: bool = False

    def __post_init__(self):
        if self.G.dim_in != self.inner.dim:
            raise DimensionMismatch("image map input does not match the inner set")
        cands = []
        for c in self.candidates:
            if not isinstance(c, ImageCandidate):
                point, pre = c
                c = ImageCandidate(tuple(float(v) for v in point), tuple(tuple(float(v) for v in z) for z in pre))
            cands.append(c)
        object.__setattr__(self, "candidates", tuple(cands))

    @property
    def dim(self):
        return self.G.dim_out

    def preimages_of(self, y, tol: float = 1e-9) -> list[np.ndarray]:
        y = np.asarray(y, dtype=float)
        for c in self.candidates:
            if np.max(np.abs(np.asarray(c.point) - y), initial=0.0) <= tol * (1 + np.max(np.abs(y), initial=0.0)):
                return [np.asarray(z, dtype=float) for z in c.preimages]
        raise MissingCandidates(f"no pre-image candidates supplied for {y.tolist()}")


def atoms_dim_check(S: ClosedSet, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = y.reshape(1)
    if y.shape != (S.dim,):
        raise DimensionMismatch(f"point of shape {y.shape} does not match set dimension {S.dim}")
    return y


def is_convex_atom(S: ClosedSet) -> bool:
    if isinstance(S, (Polyhedron, Box, SecondOrderCone)):
        return True
    if isinstance(S, Product):
        return all(is_convex_atom(f) for f in S.factors)
    return False


def is_polyhedral(S: ClosedSet) -> bool:
    if isinstance(S, (Polyhedron, Box, PolyhedralUnion)):
        return True
    if isinstance(S, Product):
        return all(is_polyhedral(f) for f in S.factors)
    return False


def is_exact_atom(S: ClosedSet) -> bool:
    """Atoms whose cone geometry is decided exactly (no declared assumptions)."""
    if isinstance(S, (Polyhedron, Box, SecondOrderCone, PolyhedralUnion)):
        return True
    if isinstance(S, Product):
        return all(is_exact_atom(f) for f in S.factors)
    return False


def projectable(S: ClosedSet) -> bool:
    if isinstance(S, (Polyhedron, Box, SecondOrderCone, PolyhedralUnion)):
        return True
    if isinstance(S, Product):
        return all(projectable(f) for f in S.factors)
    return False


def product_of(factors: Sequence[ClosedSet]) -> ClosedSet:
    factors = list(factors)
    return factors[0] if len(factors) == 1 else Product(tuple(factors))
