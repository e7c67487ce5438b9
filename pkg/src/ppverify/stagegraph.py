"""Stage graphs and their checker.

A stage graph certifies that every run from the initial stage reaches a
stable consensus with probability 1.  Each obligation is reduced to the
unsatisfiability of one quantifier-free Presburger formula:

* initial containment: ``init(C) & phi_b(in) & !S_init(C)``;
* inductivity: ``S(C) & step_t(C, C') & !S(C')`` for every transition t;
* ranking well-formedness: guards exhaustive and disjoint on the stage and
  every piece nonnegative on its guard;
* bounded weak decrease (``check_node``): no C in the parent, outside all
  children, at which every enabled sequence of at most B transitions fails
  to decrease the ranking function;
* consensus bottoms: ``S(C) & sum of wrong-output states >= 1``.

Node and inductivity obligations quantify over nonempty populations; the
empty configuration has no runs to speak of.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import Configuration, Protocol
from .flow import FlowRoot
from .presburger import (FALSE, TRUE, Budget, Formula, Sat, conj, disj, neg, rename, shift,
                         solve, threshold)

PRIME = "'"
DEFAULT_MAX_BOUND = 3
DEFAULT_MAX_SEQUENCES = 20000


class StageGraphError(ValueError):
    """Malformed stage graph (cycle, missing ranking, unknown stage...)."""


class BoundTooLarge(StageGraphError):
    """The transition-sequence expansion for a bound exceeds the configured cap."""


# -- data model -------------------------------------------------------------

@dataclass(frozen=True)
class RankingFunction:
    """Piecewise-linear ranking function with an optional step bound.

    ``pieces`` is a sequence of ``(guard, coeffs, const)``; on configurations
    satisfying ``guard`` the value is ``sum(coeffs[v] * C[v]) + const``.  A
    bound of None lets the checker try 1, 2 and 3 in turn.
    """
    pieces: Tuple[Tuple[Formula, Tuple[Tuple[str, int], ...], int], ...]
    bound: Optional[int] = None

    @staticmethod
    def linear(coeffs: Mapping[str, int], bound: Optional[int] = 1, const: int = 0):
        cs = tuple(sorted((v, int(a)) for v, a in coeffs.items() if a))
        return RankingFunction(((TRUE, cs, int(const)),), bound)

    def with_bound(self, bound: Optional[int]) -> "RankingFunction":
        return RankingFunction(self.pieces, bound)

    def value(self, assignment: Mapping[str, int]) -> int:
        from .presburger import evaluate
        for guard, cs, c in self.pieces:
            if evaluate(guard, assignment):
                return sum(a * assignment[v] for v, a in cs) + c
        raise ValueError("no ranking piece applies")

    def describe(self) -> str:
        from .presburger import to_str
        out = []
        for guard, cs, c in self.pieces:
            terms = " + ".join(v if a == 1 else f"{a}*{v}" for v, a in cs) or "0"
            if c:
                terms += f" + {c}" if c > 0 else f" - {-c}"
            out.append(terms if guard == TRUE else f"[{to_str(guard)}] {terms}")
        return "; ".join(out)


@dataclass(frozen=True)
class Stage:
    """A set of configurations.

    For plain stages ``constraint`` is the whole description.  When ``flow``
    is set the stage is ``flow-membership & constraint``: the constraint is
    then only the quantifier-free refinement of a shared state-equation root.
    """
    id: str
    constraint: Formula
    rank: Optional[RankingFunction] = None
    flow: Optional[FlowRoot] = None
    dead: frozenset = frozenset()

    def member(self) -> Formula:
        if self.flow is None:
            return self.constraint
        return self.flow.membership(self.constraint)


@dataclass
class StageGraph:
    stages: Dict[str, Stage]
    edges: List[Tuple[str, str]]
    target: int
    initial: str

    def children(self, sid: str) -> List[str]:
        return [c for p, c in self.edges if p == sid]

    def bottoms(self) -> List[str]:
        return [s for s in self.stages if not self.children(s)]

    def validate(self):
        if self.target not in (0, 1):
            raise StageGraphError("target must be 0 or 1")
        if self.initial not in self.stages:
            raise StageGraphError(f"initial stage {self.initial!r} is not defined")
        for p, c in self.edges:
            for s in (p, c):
                if s not in self.stages:
                    raise StageGraphError(f"edge refers to unknown stage {s!r}")
        # cycle check by depth-first search
        state: Dict[str, int] = {}

        def visit(s: str):
            state[s] = 1
            for c in self.children(s):
                if state.get(c) == 1:
                    raise StageGraphError(f"stage graph has a cycle through {c!r}")
                if c not in state:
                    visit(c)
            state[s] = 2

        for s in self.stages:
            if s not in state:
                visit(s)
        for s, st in self.stages.items():
            if self.children(s) and st.rank is None:
                raise StageGraphError(f"stage {s!r} has children but no ranking function")
            if not self.children(s) and st.rank is not None:
                raise StageGraphError(f"bottom stage {s!r} must not carry a ranking function")


@dataclass
class Obligation:
    id: str
    kind: str
    stages: Tuple[str, ...]
    passed: bool
    counterexample: Optional[Tuple[Configuration, ...]] = None
    detail: str = ""
    bound: Optional[int] = None


@dataclass
class CheckReport:
    target: int
    obligations: List[Obligation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.obligations)

    def failures(self) -> List[Obligation]:
        return [o for o in self.obligations if not o.passed]


@dataclass
class InductiveResult:
    holds: bool
    counterexample: Optional[Tuple[Configuration, Configuration]] = None
    transition: Optional[int] = None


@dataclass
class NodeResult:
    holds: bool
    counterexample: Optional[Configuration] = None
    bound: Optional[int] = None
    detail: str = ""


# -- formula constructions -------------------------------------------------

def primed(v: str) -> str:
    return v + PRIME


def _config_of(p: Protocol, witness: Mapping[str, int], suffix: str = "") -> Configuration:
    return tuple(int(witness.get(v + suffix, 0)) for v in p.var_names)


def step_formula(p: Protocol, transitions: Optional[Iterable[int]] = None,
                 silent: bool = True) -> Formula:
    """One-step relation over C (state variables) and C' (primed variables)."""
    names = p.var_names
    ts = range(len(p.transitions)) if transitions is None else transitions
    disjuncts = []
    if silent:
        disjuncts.append(conj(*(threshold({primed(v): 1, v: -1}, "=", 0) for v in names)))
    for t in ts:
        pre, delta = p.pre(t), p.delta(t)
        parts = [threshold({v: 1}, ">=", pre[i]) for i, v in enumerate(names) if pre[i]]
        parts += [threshold({primed(v): 1, v: -1}, "=", delta[i]) for i, v in enumerate(names)]
        disjuncts.append(conj(*parts))
    return disj(*disjuncts)


def reach_formula(p: Protocol, bound: int) -> Formula:
    """C reaches C' in at most ``bound`` steps; intermediates are fresh variables.

    Only meaningful under existential solving: the intermediates are free
    variables of the result, so the formula must not be negated.
    """
    if bound < 1:
        raise ValueError("reach bound must be at least 1")
    names = p.var_names
    step = step_formula(p)
    layers = [{v: v for v in names}]
    for k in range(1, bound):
        layers.append({v: f"_r{k}_{v}" for v in names})
    layers.append({v: primed(v) for v in names})
    parts = []
    for k in range(bound):
        src, dst = layers[k], layers[k + 1]
        mapping = {v: src[v] for v in names}
        mapping.update({primed(v): dst[v] for v in names})
        parts.append(_rename_all(step, mapping))
    return conj(*parts)


def _rename_all(f: Formula, mapping: Mapping[str, str]) -> Formula:
    # simultaneous renaming through placeholders avoids capture
    tmp = {v: f"\x00{i}" for i, v in enumerate(mapping)}
    g = rename(f, tmp)
    return rename(g, {tmp[v]: w for v, w in mapping.items()})


def _nonempty(p: Protocol) -> Formula:
    return threshold({v: 1 for v in p.var_names}, ">=", 1)


def init_formula(p: Protocol) -> Formula:
    """Initial configurations, with input variables named ``_in_<x>``."""
    names = p.var_names
    parts = []
    for i, q in enumerate(p.states):
        coeffs = {names[i]: 1}
        for x in p.input_vars:
            if p.input_state[x] == q:
                coeffs[input_var(x)] = -1
        parts.append(threshold(coeffs, "=", p.leaders.get(q, 0)))
    return conj(*parts)


def input_var(x: str) -> str:
    return f"_in_{x}"


def predicate_side(p: Protocol, phi: Formula, b: int) -> Formula:
    f = rename(phi, {x: input_var(x) for x in p.input_vars})
    return f if b == 1 else neg(f)


def wrong_output(p: Protocol, b: int) -> Formula:
    qs = [v for q, v in zip(p.states, p.var_names) if p.output[q] != b]
    if not qs:
        return FALSE
    return threshold({v: 1 for v in qs}, ">=", 1)


# -- obligations ------------------------------------------------------------

def _minimize(p: Protocol, f: Formula, witness: Dict[str, int], budget,
              extra_int_vars=()) -> Dict[str, int]:
    """Greedy descent on the number of agents of C while f stays satisfiable."""
    names = p.var_names
    size = sum(witness.get(v, 0) for v in names)
    while size > 0:
        res = solve(conj(f, threshold({v: 1 for v in names}, "<=", size - 1)),
                    extra_int_vars, budget)
        if not isinstance(res, Sat):
            break
        witness = res.witness
        size = sum(witness.get(v, 0) for v in names)
    return witness


def check_inductive(p: Protocol, s: Stage, budget=None, minimize: bool = True) -> InductiveResult:
    """Is the stage closed under every transition?"""
    names = p.var_names
    for t in p.effective_transitions():
        pre, delta = p.pre(t), p.delta(t)
        offsets = {v: delta[i] for i, v in enumerate(names) if delta[i]}
        enabled = conj(*(threshold({v: 1}, ">=", pre[i]) for i, v in enumerate(names) if pre[i]))
        f = conj(s.member(), enabled, neg(shift(s.constraint, offsets)))
        res = solve(f, (), budget)
        if isinstance(res, Sat):
            w = _minimize(p, f, res.witness, budget) if minimize else res.witness
            c = _config_of(p, w)
            c2 = tuple(ci + di for ci, di in zip(c, delta))
            return InductiveResult(False, (c, c2), t)
    return InductiveResult(True)


def _sequence_summaries(p: Protocol, bound: int, max_bound: int, max_sequences: int):
    """Distinct (requirement, effect) pairs of transition sequences of length 1..bound."""
    ts = p.effective_transitions()
    if bound > max_bound or len(ts) ** bound > max_sequences:
        raise BoundTooLarge(f"bound {bound} with {len(ts)} transitions exceeds the sequence cap "
                            f"(B <= {max_bound}, |T|^B <= {max_sequences})")
    n = p.n_states
    seen = set()
    frontier = [((0,) * n, (0,) * n)]
    for _ in range(bound):
        nxt = []
        for need, eff in frontier:
            for t in ts:
                pre, delta = p.pre(t), p.delta(t)
                need2 = tuple(max(need[i], pre[i] - eff[i]) for i in range(n))
                eff2 = tuple(eff[i] + delta[i] for i in range(n))
                key = (need2, eff2)
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
        frontier = nxt
    return sorted(seen)


def _no_decrease(p: Protocol, rank: RankingFunction, need, eff) -> Formula:
    """enabled_sigma(C) -> f(C + eff) >= f(C), with a case split over ranking pieces."""
    names = p.var_names
    enabled = conj(*(threshold({v: 1}, ">=", need[i]) for i, v in enumerate(names) if need[i]))
    offsets = {v: eff[i] for i, v in enumerate(names) if eff[i]}
    cases = []
    for g1, cs1, c1 in rank.pieces:
        for g2, cs2, c2 in rank.pieces:
            # value after minus value before, both linear in C
            coeffs: Dict[str, int] = {}
            const = c2 - c1
            for v, a in cs2:
                coeffs[v] = coeffs.get(v, 0) + a
                const += a * offsets.get(v, 0)
            for v, a in cs1:
                coeffs[v] = coeffs.get(v, 0) - a
            cases.append(conj(g1, shift(g2, offsets), threshold(coeffs, ">=", -const)))
    return disj(neg(enabled), disj(*cases))


def _outside_children(parent: Stage, children: Sequence[Stage]) -> Formula:
    parts = []
    for ch in children:
        if ch.flow is None:
            parts.append(neg(ch.constraint))
        elif parent.flow is not None and ch.flow is parent.flow:
            parts.append(neg(ch.constraint))
        else:
            raise StageGraphError(
                f"child {ch.id!r} is flow-rooted but does not share the root of {parent.id!r}")
    return conj(*parts)


def node_formula(p: Protocol, parent: Stage, children: Sequence[Stage], rank: RankingFunction,
                 bound: int, max_bound: int = DEFAULT_MAX_BOUND,
                 max_sequences: int = DEFAULT_MAX_SEQUENCES) -> Formula:
    parts = [parent.member(), _nonempty(p), _outside_children(parent, children)]
    for need, eff in _sequence_summaries(p, bound, max_bound, max_sequences):
        parts.append(_no_decrease(p, rank, need, eff))
    return conj(*parts)


def check_node(p: Protocol, parent: Stage, children: Sequence[Stage], bound: Optional[int] = None,
               budget=None, max_bound: int = DEFAULT_MAX_BOUND,
               max_sequences: int = DEFAULT_MAX_SEQUENCES, minimize: bool = True) -> NodeResult:
    """Bounded weak decrease of the parent's ranking function towards its children."""
    rank = parent.rank
    if rank is None:
        raise StageGraphError(f"stage {parent.id!r} has no ranking function")
    if bound is None:
        bound = rank.bound
    bounds = [bound] if bound is not None else list(range(1, max_bound + 1))
    last = None
    for b in bounds:
        f = node_formula(p, parent, children, rank, b, max_bound, max_sequences)
        res = solve(f, (), budget)
        if not isinstance(res, Sat):
            return NodeResult(True, None, b)
        w = _minimize(p, f, res.witness, budget) if minimize else res.witness
        last = NodeResult(False, _config_of(p, w), b,
                          "no sequence of at most %d steps decreases the ranking function" % b)
    return last


def check_ranking(p: Protocol, s: Stage, budget=None) -> Tuple[bool, Optional[Configuration], str]:
    """Guards exhaustive and disjoint on the stage, pieces nonnegative."""
    rank = s.rank
    member = s.member()
    guards = [g for g, _, _ in rank.pieces]
    res = solve(conj(member, neg(disj(*guards))), (), budget)
    if isinstance(res, Sat):
        return False, _config_of(p, res.witness), "no ranking piece applies"
    for i, j in itertools.combinations(range(len(guards)), 2):
        res = solve(conj(member, guards[i], guards[j]), (), budget)
        if isinstance(res, Sat):
            return False, _config_of(p, res.witness), f"ranking pieces {i} and {j} overlap"
    for g, cs, c in rank.pieces:
        f = conj(member, g, threshold(dict(cs), "<=", -c - 1))
        res = solve(f, (), budget)
        if isinstance(res, Sat):
            return False, _config_of(p, res.witness), "ranking function is negative"
    return True, None, ""


def check_initial(p: Protocol, g: StageGraph, phi: Formula, budget=None):
    s = g.stages[g.initial]
    inputs = [input_var(x) for x in p.input_vars]
    if s.flow is None:
        contained = s.constraint
    else:
        # the origin itself lies in the root (o = C, x = 0)
        contained = conj(s.flow.origin, s.constraint)
    parts = [init_formula(p), predicate_side(p, phi, g.target), neg(contained)]
    if inputs:
        parts.append(threshold({v: 1 for v in inputs}, ">=", 1))
    f = conj(*parts)
    res = solve(f, (), budget)
    if isinstance(res, Sat):
        w = _minimize(p, f, res.witness, budget)
        return False, _config_of(p, w)
    return True, None


def check_bottom(p: Protocol, s: Stage, b: int, budget=None):
    f = conj(s.member(), wrong_output(p, b))
    res = solve(f, (), budget)
    if isinstance(res, Sat):
        w = _minimize(p, f, res.witness, budget)
        return False, _config_of(p, w)
    return True, None


def check_stage_graph(p: Protocol, g: StageGraph, phi: Formula, budget=None,
                      max_bound: int = DEFAULT_MAX_BOUND,
                      max_sequences: int = DEFAULT_MAX_SEQUENCES) -> CheckReport:
    """Check every obligation of ``g`` against predicate ``phi``."""
    g.validate()
    if isinstance(budget, int):
        budget = Budget(budget)
    report = CheckReport(g.target)
    order = sorted(g.stages)
    ok, cex = check_initial(p, g, phi, budget)
    report.obligations.append(Obligation(
        "1-initial", "initial", (g.initial,), ok, None if ok else (cex,),
        "" if ok else "initial configuration of the predicate side outside the initial stage"))
    for sid in order:
        res = check_inductive(p, g.stages[sid], budget)
        detail = "" if res.holds else f"transition {p.transition_name(res.transition)} leaves the stage"
        report.obligations.append(Obligation(
            f"2-inductive-{sid}", "inductive", (sid,), res.holds, res.counterexample, detail))
    for sid in order:
        s = g.stages[sid]
        kids = g.children(sid)
        if not kids:
            continue
        ok, cex, detail = check_ranking(p, s, budget)
        report.obligations.append(Obligation(
            f"3-ranking-{sid}", "ranking", (sid,), ok, None if ok else (cex,), detail))
        res = check_node(p, s, [g.stages[c] for c in kids], None, budget, max_bound, max_sequences)
        report.obligations.append(Obligation(
            f"4-node-{sid}", "node", (sid,) + tuple(kids), res.holds,
            None if res.holds else (res.counterexample,), res.detail, res.bound))
    for sid in order:
        if g.children(sid):
            continue
        ok, cex = check_bottom(p, g.stages[sid], g.target, budget)
        report.obligations.append(Obligation(
            f"5-bottom-{sid}", "bottom", (sid,), ok, None if ok else (cex,),
            "" if ok else f"configuration is not a {g.target}-consensus"))
    report.obligations.sort(key=lambda o: o.id)
    return report
