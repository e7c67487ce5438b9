"""Exact satisfiability for quantifier-free Presburger formulas.

Variables range over the naturals unless listed in ``extra_int_vars``.  The
procedure is a model-guided case split over the disjunctions of the negation
normal form, combined with branch-and-bound on the exact rational simplex.
Remainder atoms become equations with a fresh integer multiplier.  Every
integer variable is boxed by a small-model bound for integer programs, so
branching is finite and the procedure is complete; in practice the node
budget is what stops pathological instances, and running out of it is
reported as ``BudgetExhausted`` rather than as unsatisfiable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .formula import (And, Const, Formula, Or, Remainder, Threshold,
                      atoms, conj, evaluate, free_vars, neg, normalize)
from .simplex import Budget, BudgetExhausted, Simplex

DEFAULT_BUDGET = 10 ** 7


def default_budget() -> int:
    env = os.environ.get("PPVERIFY_SOLVER_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_BUDGET


@dataclass(frozen=True)
class Sat:
    witness: Dict[str, int]

    @property
    def sat(self) -> bool:
        return True


@dataclass(frozen=True)
class Unsat:
    @property
    def sat(self) -> bool:
        return False


SolveResult = Union[Sat, Unsat]


@dataclass(frozen=True)
class Implication:
    holds: bool
    counterexample: Optional[Dict[str, int]] = None


# -- canonical linear atoms ------------------------------------------------

@dataclass
class _Atom:
    form: Tuple[Tuple[int, int], ...]   # (solver var, coeff) over original vars
    sv: int                              # simplex var carrying the form's value
    kind: str                            # "le", "ge" or "eq"
    const: int

    def status(self, lo: Optional[Fraction], hi: Optional[Fraction]) -> Optional[bool]:
        c = self.const
        if self.kind == "le":
            if hi is not None and hi <= c:
                return True
            if lo is not None and lo > c:
                return False
        elif self.kind == "ge":
            if lo is not None and lo >= c:
                return True
            if hi is not None and hi < c:
                return False
        else:
            if lo is not None and hi is not None and lo == hi == c:
                return True
            if (lo is not None and lo > c) or (hi is not None and hi < c):
                return False
        return None

    def holds_at(self, value: Fraction) -> bool:
        if self.kind == "le":
            return value <= self.const
        if self.kind == "ge":
            return value >= self.const
        return value == self.const


def _axpy(target: Dict[int, int], source: Dict[int, int], q: int):
    """target += q * source, on sparse integer vectors."""
    for v, u in source.items():
        nv = target.get(v, 0) + q * u
        if nv:
            target[v] = nv
        else:
            target.pop(v, None)


class _Problem:
    def __init__(self, f: Formula, extra_int_vars: Iterable[str], budget: Budget):
        self.budget = budget
        self.simplex = Simplex(budget)
        self.names: List[str] = []
        self.var_index: Dict[str, int] = {}
        self.natural: List[bool] = []
        self.forms: Dict[Tuple, int] = {}
        self.atoms: List[_Atom] = []
        self.atom_index: Dict[Tuple, int] = {}
        extra = set(extra_int_vars)
        for v in sorted(free_vars(f)):
            self._new_var(v, v not in extra)
        # integer variables must occupy simplex slots 0..n-1, before any row
        rems = sorted((a for a in atoms(f) if isinstance(a, Remainder)),
                      key=lambda a: (a.coeffs, a.modulus, a.residue))
        for a in rems:
            k = self._new_var(f"#k{len(self.names)}", False)
            self.var_index[("rem", a.coeffs, a.modulus, a.residue)] = k
        self.tree = self._convert(f)

    def _new_var(self, name: str, natural: bool) -> int:
        sv = self.simplex.add_var()
        self.names.append(name)
        self.var_index[name] = sv
        self.natural.append(natural)
        if natural:
            self.simplex.assert_lower(sv, 0)
        return sv

    def _form_var(self, form: Tuple[Tuple[int, int], ...]) -> int:
        if len(form) == 1 and form[0][1] == 1:
            return form[0][0]
        if form not in self.forms:
            self.forms[form] = self.simplex.add_row(dict(form))
        return self.forms[form]

    def _atom(self, coeffs: Dict[int, int], kind: str, const: int):
        g = 0
        for a in coeffs.values():
            g = math.gcd(g, a)
        if g == 0:
            ok = {"le": 0 <= const, "ge": 0 >= const, "eq": const == 0}[kind]
            return ("const", ok)
        if kind == "eq":
            if const % g:
                return ("const", False)
            const //= g
        elif kind == "le":
            const = math.floor(Fraction(const, g))
        else:
            const = math.ceil(Fraction(const, g))
        form = tuple(sorted((v, a // g) for v, a in coeffs.items()))
        if form[0][1] < 0:
            form = tuple((v, -a) for v, a in form)
            const = -const
            kind = {"le": "ge", "ge": "le", "eq": "eq"}[kind]
        key = (form, kind, const)
        if key not in self.atom_index:
            self.atom_index[key] = len(self.atoms)
            self.atoms.append(_Atom(form, self._form_var(form), kind, const))
        return ("atom", self.atom_index[key])

    def _convert(self, f: Formula):
        if isinstance(f, Const):
            return ("const", f.value)
        if isinstance(f, Threshold):
            coeffs = {self.var_index[v]: a for v, a in f.coeffs}
            kind = {"<=": "le", ">=": "ge", "=": "eq"}[f.op]
            return self._atom(coeffs, kind, f.bound)
        if isinstance(f, Remainder):
            k = self.var_index[("rem", f.coeffs, f.modulus, f.residue)]
            coeffs = {self.var_index[v]: a for v, a in f.coeffs}
            coeffs[k] = -f.modulus
            return self._atom(coeffs, "eq", f.residue)
        if isinstance(f, And):
            return ("and", [self._convert(g) for g in f.args])
        if isinstance(f, Or):
            return ("or", [self._convert(g) for g in f.args])
        raise TypeError(f"formula not in normal form: {f!r}")

    # -- bounds and evaluation

    def interval(self, atom: _Atom):
        sx = self.simplex
        lo = Fraction(0)
        hi = Fraction(0)
        for v, a in atom.form:
            vl, vh = sx.lower[v], sx.upper[v]
            if a > 0:
                lo = None if lo is None or vl is None else lo + a * vl
                hi = None if hi is None or vh is None else hi + a * vh
            else:
                lo = None if lo is None or vh is None else lo + a * vh
                hi = None if hi is None or vl is None else hi + a * vl
        sl, sh = sx.lower[atom.sv], sx.upper[atom.sv]
        if sl is not None and (lo is None or sl > lo):
            lo = sl
        if sh is not None and (hi is None or sh < hi):
            hi = sh
        return lo, hi

    def status(self, node) -> Optional[bool]:
        tag = node[0]
        if tag == "const":
            return node[1]
        if tag == "atom":
            atom = self.atoms[node[1]]
            return atom.status(*self.interval(atom))
        if tag == "and":
            result = True
            for child in node[1]:
                s = self.status(child)
                if s is False:
                    return False
                if s is None:
                    result = None
            return result
        result = False
        for child in node[1]:
            s = self.status(child)
            if s is True:
                return True
            if s is None:
                result = None
        return result

    def holds_now(self, node) -> bool:
        tag = node[0]
        if tag == "const":
            return node[1]
        if tag == "atom":
            atom = self.atoms[node[1]]
            value = sum((a * self.simplex.value[v] for v, a in atom.form), Fraction(0))
            return atom.holds_at(value)
        if tag == "and":
            return all(self.holds_now(c) for c in node[1])
        return any(self.holds_now(c) for c in node[1])

    def holds_robustly(self, node, fractional) -> bool:
        """Holds at the current point without relying on fractional variables."""
        tag = node[0]
        if tag == "const":
            return node[1]
        if tag == "atom":
            atom = self.atoms[node[1]]
            return self.holds_now(node) and not any(v in fractional for v, _ in atom.form)
        if tag == "and":
            return all(self.holds_robustly(c, fractional) for c in node[1])
        return any(self.holds_robustly(c, fractional) for c in node[1])

    def assert_atom(self, atom: _Atom) -> bool:
        sx = self.simplex
        if atom.kind == "le":
            return sx.assert_upper(atom.sv, atom.const)
        if atom.kind == "ge":
            return sx.assert_lower(atom.sv, atom.const)
        return sx.assert_lower(atom.sv, atom.const) and sx.assert_upper(atom.sv, atom.const)

    # -- search

    def search(self, pending: list, clauses: list) -> Optional[Dict[str, int]]:
        """Run the case split with an explicit stack of suspended nodes."""
        stack = [self._node(pending, clauses)]
        result = None
        while stack:
            try:
                call = stack[-1].send(result)
            except StopIteration as stop:
                stack.pop()
                result = stop.value
                continue
            stack.append(self._node(*call))
            result = None
        return result

    def _node(self, pending: list, clauses: list):
        self.budget.spend()
        sx = self.simplex
        sx.push()
        try:
            queue = list(pending)
            while True:
                while queue:
                    node = queue.pop()
                    tag = node[0]
                    if tag == "const":
                        if not node[1]:
                            return None
                    elif tag == "atom":
                        if not self.assert_atom(self.atoms[node[1]]):
                            return None
                    elif tag == "bound":
                        _, v, kind, c = node
                        ok = sx.assert_upper(v, c) if kind == "le" else sx.assert_lower(v, c)
                        if not ok:
                            return None
                    elif tag == "and":
                        queue.extend(node[1])
                    else:
                        clauses = clauses + [node[1]]
                remaining = []
                for clause in clauses:
                    live = []
                    satisfied = False
                    for d in clause:
                        s = self.status(d)
                        if s is True:
                            satisfied = True
                            break
                        if s is None:
                            live.append(d)
                    if satisfied:
                        continue
                    if not live:
                        return None
                    if len(live) == 1:
                        queue.append(live[0])
                    else:
                        remaining.append(live)
                clauses = remaining
                if not queue:
                    break
            directions = self.lattice()
            if directions is None or not sx.check():
                return None
            open_clauses = [c for c in clauses if not any(self.holds_now(d) for d in c)]
            if open_clauses:
                chosen = min(open_clauses, key=len)
                rest = [c for c in clauses if c is not chosen]
                for d in chosen:
                    found = yield ([d], rest)
                    if found is not None:
                        return found
                return None
            fractional = {v for v in range(len(self.names)) if sx.value[v].denominator != 1}
            if fractional:
                # clauses satisfied only through fractional values are decided
                # before any integer branching
                shaky = [c for c in clauses if not any(self.holds_robustly(d, fractional) for d in c)]
                if shaky:
                    chosen = min(shaky, key=len)
                    rest = [c for c in clauses if c is not chosen]
                    for d in chosen:
                        found = yield ([d], rest)
                        if found is not None:
                            return found
                    return None
            for row in directions:
                val = sum((a * sx.value[v] for v, a in row.items()), Fraction(0))
                if val.denominator != 1:
                    lo = math.floor(val)
                    found = yield ([self._atom(row, "le", lo)], clauses)
                    if found is not None:
                        return found
                    return (yield ([self._atom(row, "ge", lo + 1)], clauses))
            for v, name in enumerate(self.names):
                val = sx.value[v]
                if val.denominator != 1:
                    lo = math.floor(val)
                    found = yield ([("bound", v, "le", lo)], clauses)
                    if found is not None:
                        return found
                    return (yield ([("bound", v, "ge", lo + 1)], clauses))
            return {name: int(sx.value[v]) for v, name in enumerate(self.names)}
        finally:
            sx.pop()

    def lattice(self):
        """Integer structure of the equalities fixed by the current bounds.

        Returns None when they have no integer solution.  Otherwise returns
        linear forms over the variables whose values must be integral at any
        integer point of the equality lattice; a fractional value of one of
        them is a good branching direction.  Variables with equal bounds are
        substituted first; the rest is solved by unimodular column elimination
        ``x = V t`` while tracking the rows of ``V^-1``.
        """
        sx = self.simplex
        fixed = {}
        for v in range(len(self.names)):
            lo = sx.lower[v]
            if lo is not None and lo == sx.upper[v]:
                fixed[v] = lo
        eqs = []
        for form, sv in self.forms.items():
            lo = sx.lower[sv]
            if lo is None or lo != sx.upper[sv]:
                continue
            c = lo
            row = {}
            for v, a in form:
                if v in fixed:
                    c -= a * fixed[v]
                else:
                    row[v] = a
            if not row:
                if c:
                    return None
                continue
            if c.denominator != 1:
                return None
            eqs.append((row, int(c)))
        if not eqs:
            return []
        cols: List[Optional[Dict[int, int]]] = []
        inv: List[Dict[int, int]] = []
        param_of: Dict[int, int] = {}
        t_fixed: Dict[int, int] = {}
        for row, c in eqs:
            for v in row:
                if v not in param_of:
                    param_of[v] = len(cols)
                    cols.append({v: 1})
                    inv.append({v: 1})
            b = {}
            for j, col in enumerate(cols):
                s = sum(row.get(v, 0) * u for v, u in col.items())
                if not s:
                    continue
                if j in t_fixed:
                    c -= s * t_fixed[j]
                else:
                    b[j] = s
            if not b:
                if c:
                    return None
                continue
            while len(b) > 1:
                items = sorted(b.items(), key=lambda kv: abs(kv[1]))
                p, bp = items[0]
                for j, bj in items[1:]:
                    q = bj // bp
                    _axpy(cols[j], cols[p], -q)
                    _axpy(inv[p], inv[j], q)
                    r = bj - q * bp
                    if r:
                        b[j] = r
                    else:
                        del b[j]
            (p, g), = b.items()
            if c % g:
                return None
            t_fixed[p] = c // g
        return [inv[j] for j in range(len(cols)) if j not in t_fixed and len(inv[j]) > 1]

    def max_constant(self) -> int:
        return max([1] + [abs(atom.const) for atom in self.atoms])

    def small_model_box(self) -> int:
        n = max(1, len(self.names))
        m = max(1, len(self.atoms)) + n
        a = 1
        for atom in self.atoms:
            a = max(a, abs(atom.const), *(abs(c) for _, c in atom.form))
        return (2 * n + m) * ((m + n) * a) ** (2 * (m + n) + 1)


def _search_in_box(problem: _Problem, box: int):
    sx = problem.simplex
    sx.push()
    try:
        for v, natural in enumerate(problem.natural):
            sx.assert_upper(v, box)
            if not natural:
                sx.assert_lower(v, -box)
        return problem.search([problem.tree], [])
    finally:
        sx.pop()


def solve(f: Formula, extra_int_vars: Iterable[str] = (), budget=None) -> SolveResult:
    """Decide satisfiability of ``f``; Sat results carry a verified witness."""
    if budget is None:
        budget = Budget(default_budget())
    elif isinstance(budget, int):
        budget = Budget(budget)
    variables = free_vars(f)
    g = normalize(f)
    if isinstance(g, Const):
        if not g.value:
            return Unsat()
        return Sat({v: 0 for v in sorted(variables)})
    problem = _Problem(g, extra_int_vars, budget)
    full = problem.small_model_box()
    # A small box first: branch-and-bound is finite there and most satisfiable
    # queries have small witnesses.  The second round is the complete one.
    small = 16 + 2 * problem.max_constant()
    model = None
    for box in ((small, full) if small < full else (full,)):
        model = _search_in_box(problem, box)
        if model is not None:
            break
    if model is None:
        return Unsat()
    witness = {v: model.get(v, 0) for v in sorted(variables)}
    if not evaluate(f, witness):
        raise AssertionError("solver produced a witness that does not satisfy the formula")
    return Sat(witness)


def is_sat(f: Formula, extra_int_vars: Iterable[str] = (), budget=None) -> bool:
    return isinstance(solve(f, extra_int_vars, budget), Sat)


def check_implication(f: Formula, g: Formula, extra_int_vars: Iterable[str] = (),
                      budget=None) -> Implication:
    """Does ``f`` imply ``g`` over the naturals?"""
    res = solve(conj(f, normalize(neg(g))), extra_int_vars, budget)
    if isinstance(res, Sat):
        return Implication(False, res.witness)
    return Implication(True)


__all__ = ["Sat", "Unsat", "SolveResult", "Implication", "BudgetExhausted", "Budget",
           "solve", "is_sat", "check_implication", "default_budget", "DEFAULT_BUDGET"]
