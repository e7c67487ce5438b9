"""Incremental exact simplex for bound-constrained linear feasibility.

This is the general simplex used inside DPLL(T)-style solvers: every linear
form gets a slack variable, constraints are bounds on variables, and
``check`` restores feasibility with Bland's rule.  Bounds can be pushed and
popped cheaply, which is what the branching search in ``solver`` needs.
All arithmetic is over ``fractions.Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple


class BudgetExhausted(RuntimeError):
    """The configured search budget ran out before a verdict was reached."""


class Simplex:
    def __init__(self, budget=None):
        self.lower: List[Optional[Fraction]] = []
        self.upper: List[Optional[Fraction]] = []
        self.value: List[Fraction] = []
        self.rows: Dict[int, Dict[int, Fraction]] = {}   # basic var -> {nonbasic: coeff}
        self.cols: Dict[int, set] = {}                   # nonbasic var -> basic vars using it
        self.trail: List[Tuple[int, Optional[Fraction], Optional[Fraction]]] = []
        self.marks: List[int] = []
        self.budget = budget
        self.pivots = 0

    # -- construction

    def add_var(self) -> int:
        v = len(self.value)
        self.lower.append(None)
        self.upper.append(None)
        self.value.append(Fraction(0))
        self.cols[v] = set()
        return v

    def add_row(self, coeffs: Mapping[int, int]) -> int:
        """New basic variable equal to ``sum(coeffs[v] * v)``."""
        row: Dict[int, Fraction] = {}
        for v, a in coeffs.items():
            a = Fraction(a)
            if v in self.rows:
                for w, b in self.rows[v].items():
                    row[w] = row.get(w, 0) + a * b
            else:
                row[v] = row.get(v, 0) + a
        row = {w: a for w, a in row.items() if a}
        s = len(self.value)
        self.lower.append(None)
        self.upper.append(None)
        self.value.append(sum((a * self.value[w] for w, a in row.items()), Fraction(0)))
        self.rows[s] = row
        for w in row:
            self.cols[w].add(s)
        return s

    # -- bounds

    def push(self):
        self.marks.append(len(self.trail))

    def pop(self):
        mark = self.marks.pop()
        while len(self.trail) > mark:
            v, lo, hi = self.trail.pop()
            self.lower[v] = lo
            self.upper[v] = hi

    def assert_lower(self, v: int, c) -> bool:
        c = Fraction(c)
        lo, hi = self.lower[v], self.upper[v]
        if lo is not None and c <= lo:
            return True
        if hi is not None and c > hi:
            return False
        self.trail.append((v, lo, hi))
        self.lower[v] = c
        if v not in self.rows and self.value[v] < c:
            self._update(v, c)
        return True

    def assert_upper(self, v: int, c) -> bool:
        c = Fraction(c)
        lo, hi = self.lower[v], self.upper[v]
        if hi is not None and c >= hi:
            return True
        if lo is not None and c < lo:
            return False
        self.trail.append((v, lo, hi))
        self.upper[v] = c
        if v not in self.rows and self.value[v] > c:
            self._update(v, c)
        return True

    # -- core

    def _update(self, j: int, v: Fraction):
        d = v - self.value[j]
        for b in self.cols[j]:
            self.value[b] += self.rows[b][j] * d
        self.value[j] = v

    def _pivot_and_update(self, i: int, j: int, v: Fraction):
        row_i = self.rows[i]
        a_ij = row_i[j]
        theta = (v - self.value[i]) / a_ij
        self.value[i] = v
        self.value[j] += theta
        for b in self.cols[j]:
            if b != i:
                self.value[b] += self.rows[b][j] * theta
        self._pivot(i, j)

    def _pivot(self, i: int, j: int):
        self.pivots += 1
        row_i = self.rows.pop(i)
        a_ij = row_i.pop(j)
        # x_j = (x_i - sum_k a_ik x_k) / a_ij
        new_row = {k: -a / a_ij for k, a in row_i.items()}
        new_row[i] = 1 / a_ij
        for k in row_i:
            self.cols[k].discard(i)
        users = self.cols.pop(j)
        users.discard(i)
        self.cols[i] = set()
        for b in users:
            row_b = self.rows[b]
            c = row_b.pop(j)
            for k, a in new_row.items():
                nv = row_b.get(k, 0) + c * a
                if nv:
                    if k not in row_b:
                        self.cols[k].add(b)
                    row_b[k] = nv
                elif k in row_b:
                    del row_b[k]
                    self.cols[k].discard(b)
        self.rows[j] = new_row
        for k in new_row:
            self.cols[k].add(j)

    def check(self) -> bool:
        """Restore feasibility; False means the current bounds are infeasible."""
        while True:
            if self.budget is not None:
                self.budget.spend()
            bad = None
            for b in sorted(self.rows):
                val = self.value[b]
                lo, hi = self.lower[b], self.upper[b]
                if lo is not None and val < lo:
                    bad = (b, lo, True)
                    break
                if hi is not None and val > hi:
                    bad = (b, hi, False)
                    break
            if bad is None:
                return True
            i, target, raise_it = bad
            row = self.rows[i]
            pick = None
            for j in sorted(row):
                a = row[j]
                val = self.value[j]
                if raise_it == (a > 0):
                    ok = self.upper[j] is None or val < self.upper[j]
                else:
                    ok = self.lower[j] is None or val > self.lower[j]
                if ok:
                    pick = j
                    break
            if pick is None:
                return False
            self._pivot_and_update(i, pick, target)

    def row_of(self, v: int) -> Optional[Dict[int, Fraction]]:
        return self.rows.get(v)


class Budget:
    """Shared node counter; raises ``BudgetExhausted`` when exceeded."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1):
        self.used += n
        if self.used > self.limit:
            raise BudgetExhausted(f"solver budget of {self.limit} nodes exhausted")
