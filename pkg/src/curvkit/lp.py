"""Exact rational linear feasibility.

A :class:`RationalLP` collects linear equalities and inequalities over
variables that are either free or sign-constrained; :func:`lp_feasible`
decides feasibility with a phase-1 simplex using Bland's rule on a dense
``Fraction`` tableau, so answers are exact and the method terminates.
:func:`fourier_motzkin_feasible` is an independent eliminator used to
cross-check the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from curvkit.core.rational import to_fraction

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class RationalLP:
    """Linear system over ``num_vars`` rational variables.

    Rows are stored as ``(coefficients, rhs)`` with coefficients a dense list.
    ``nonneg[j]`` marks variable ``j`` as constrained to be ``>= 0``.
    """

    num_vars: int = 0
    nonneg: list = field(default_factory=list)
    names: list = field(default_factory=list)
    eq_rows: list = field(default_factory=list)
    le_rows: list = field(default_factory=list)
    exact: bool = False

    def add_var(self, name: str = "", nonneg: bool = False) -> int:
        self.num_vars += 1
        self.nonneg.append(nonneg)
        self.names.append(name or f"x{self.num_vars - 1}")
        for rows in (self.eq_rows, self.le_rows):
            for coeffs, _ in rows:
                coeffs.append(ZERO)
        return self.num_vars - 1

    def add_vars(self, count: int, prefix: str, nonneg: bool = False) -> list[int]:
        return [self.add_var(f"{prefix}{k}", nonneg) for k in range(count)]

    def _row(self, terms) -> list[Fraction]:
        row = [ZERO] * self.num_vars
        items = terms.items() if isinstance(terms, dict) else enumerate(terms)
        for j, c in items:
            row[j] += to_fraction(c, self.exact)
        return row

    def add_eq(self, terms, rhs=0):
        self.eq_rows.append((self._row(terms), to_fraction(rhs, self.exact)))

    def add_le(self, terms, rhs=0):
        self.le_rows.append((self._row(terms), to_fraction(rhs, self.exact)))

    def add_ge(self, terms, rhs=0):
        row = self._row(terms)
        self.le_rows.append(([-c for c in row], -to_fraction(rhs, self.exact)))

    def satisfied_by(self, point: Sequence[Fraction]) -> bool:
        """Exact check of a candidate point."""
        if len(point) != self.num_vars:
            return False
        for j, flag in enumerate(self.nonneg):
            if flag and point[j] < 0:
                return False
        for coeffs, rhs in self.eq_rows:
            if sum((c * x for c, x in zip(coeffs, point)), ZERO) != rhs:
                return False
        for coeffs, rhs in self.le_rows:
            if sum((c * x for c, x in zip(coeffs, point)), ZERO) > rhs:
                return False
        return True


@dataclass(frozen=True)
class LPResult:
    feasible: bool
    point: tuple | None = None

    def __bool__(self):
        return self.feasible


def lp_feasible(rlp: RationalLP) -> LPResult:
    """Decide feasibility of ``rlp`` exactly; returns a rational witness if feasible."""
    n = rlp.num_vars
    # Column layout: one column per nonneg variable, two (plus/minus) per free
    # variable, then one slack per inequality row.
    col_of = []
    ncols = 0
    for j in range(n):
        if rlp.nonneg[j]:
            col_of.append((ncols, None))
            ncols += 1
        else:
            col_of.append((ncols, ncols + 1))
            ncols += 2
    rows = []
    for coeffs, rhs in rlp.eq_rows:
        rows.append((coeffs, rhs, None))
    for k, (coeffs, rhs) in enumerate(rlp.le_rows):
        rows.append((coeffs, rhs, ncols + k))
    nstruct = ncols + len(rlp.le_rows)
    m = len(rows)
    if m == 0:
        return LPResult(True, tuple(ZERO for _ in range(n)))
    width = nstruct + m + 1  # artificials then rhs
    tableau = []
    for i, (coeffs, rhs, slack) in enumerate(rows):
        row = [ZERO] * width
        for j, c in enumerate(coeffs):
            if c:
                plus, minus = col_of[j]
                row[plus] += c
                if minus is not None:
                    row[minus] -= c
        if slack is not None:
            row[slack] = ONE
        row[-1] = rhs
        if rhs < 0:
            row = [-v for v in row]
        row[nstruct + i] = ONE
        tableau.append(row)
    basis = [nstruct + i for i in range(m)]
    cost = [ZERO] * width
    for row in tableau:
        for j in range(nstruct):
            cost[j] -= row[j]
        cost[-1] -= row[-1]

    while True:
        entering = next((j for j in range(nstruct + m) if cost[j] < 0), None)
        if entering is None:
            break
        leaving = None
        best = None
        for i, row in enumerate(tableau):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:  # unbounded direction; cannot happen for phase 1
            break
        _pivot(tableau, cost, leaving, entering)
        basis[leaving] = entering

    if cost[-1] != 0:
        return LPResult(False)
    values = [ZERO] * width
    for i, b in enumerate(basis):
        values[b] = tableau[i][-1]
    point = []
    for j in range(n):
        plus, minus = col_of[j]
        point.append(values[plus] - (values[minus] if minus is not None else ZERO))
    return LPResult(True, tuple(point))


def _pivot(tableau, cost, r, c):
    prow = tableau[r]
    p = prow[c]
    if p != 1:
        prow[:] = [v / p for v in prow]
    nz = [j for j, v in enumerate(prow) if v]
    for i, row in enumerate(tableau):
        if i != r:
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
    f = cost[c]
    if f:
        for j in nz:
            cost[j] -= f * prow[j]


def _to_inequalities(rlp: RationalLP):
    rows = []
    for coeffs, rhs in rlp.le_rows:
        rows.append((list(coeffs), rhs))
    for coeffs, rhs in rlp.eq_rows:
        rows.append((list(coeffs), rhs))
        rows.append(([-c for c in coeffs], -rhs))
    for j, flag in enumerate(rlp.nonneg):
        if flag:
            row = [ZERO] * rlp.num_vars
            row[j] = -ONE
            rows.append((row, ZERO))
    return rows


def _normalize(coeffs, rhs):
    lead = next((abs(c) for c in coeffs if c), ONE)
    return tuple(c / lead for c in coeffs) + (rhs / lead,)


def fourier_motzkin_feasible(rlp: RationalLP) -> bool:
    """Feasibility of ``rlp`` by Fourier-Motzkin elimination with Chernikov pruning.

    Exponential in the worst case; intended as an oracle for small systems.
    """
    rows = []
    for k, (coeffs, rhs) in enumerate(_to_inequalities(rlp)):
        rows.append((coeffs, rhs, frozenset([k])))
    n = rlp.num_vars
    for eliminated, var in enumerate(range(n), start=1):
        pos, neg, rest = [], [], []
        for row in rows:
            c = row[0][var]
            (pos if c > 0 else neg if c < 0 else rest).append(row)
        new_rows = list(rest)
        for cp, bp, hp in pos:
            for cn, bn, hn in neg:
                hist = hp | hn
                # Chernikov: after k eliminations a row combining more than
                # k + 1 originals is implied by the others.
                if len(hist) > eliminated + 1:
                    continue
                a, b = cp[var], -cn[var]
                coeffs = [b * x + a * y for x, y in zip(cp, cn)]
                coeffs[var] = ZERO
                new_rows.append((coeffs, b * bp + a * bn, hist))
        rows = []
        seen = {}
        for coeffs, rhs, hist in new_rows:
            if not any(coeffs):
                if rhs < 0:
                    return False
                continue
            # Only exact duplicates are merged: dropping a looser row whose
            # history is smaller would defeat the Chernikov bookkeeping.
            key = _normalize(coeffs, rhs)
            prev = seen.get(key)
            if prev is None or len(hist) < len(prev[2]):
                seen[key] = (coeffs, rhs, hist)
        rows = list(seen.values())
    return all(rhs >= 0 for _, rhs, _ in rows)
