"""Automatic stage-graph synthesis.

The loop keeps a worklist of stages.  A stage whose configurations are all
b-consensuses becomes a bottom.  Otherwise it looks for a set U of
eventually dead transitions, certified by a linear function g that no
transition increases and every transition of U strictly decreases; the child
stage is the part of the stage where U is dead.  When no certificate exists,
the stage is split by zero tests on single states.

All stages of one graph share a state-equation root (see ``flow``), so the
negated child constraints that the checker needs are quantifier-free.  Every
graph is re-checked by ``stagegraph.check_stage_graph`` before success is
reported.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .core import Protocol
from .flow import FlowRoot
from .presburger import (FALSE, TRUE, Budget, BudgetExhausted, Formula, conj, default_budget,
                         disj, is_sat, neg, shift, threshold, var_eq, var_ge)
from .presburger.simplex import Simplex
from .stagegraph import (BoundTooLarge, CheckReport, RankingFunction, Stage, StageGraph,
                         check_node, check_stage_graph, init_formula, input_var,
                         predicate_side, wrong_output)

DEFAULT_MAX_STAGES = 200
QUERY_BUDGET = 20_000      # nodes per individual synthesis query


def _limited(budget, factor, fn, unknown):
    """Run ``fn(local_budget)`` under a per-query node limit.

    Synthesis only uses these answers heuristically (every graph is re-checked
    at the end), so a query that runs out of its own nodes returns ``unknown``.
    Nodes are charged to the shared ``budget``; running that one dry still
    aborts synthesis.
    """
    remaining = budget.limit - budget.used
    local = Budget(max(0, min(QUERY_BUDGET * factor, remaining)))
    try:
        return fn(local)
    except (BudgetExhausted, BoundTooLarge):
        if local.used > remaining:
            raise BudgetExhausted(f"solver budget of {budget.limit} nodes exhausted") from None
        return unknown
    finally:
        budget.used += local.used


def _sat(f: Formula, budget, unknown: bool = True) -> bool:
    if budget is None:
        budget = Budget(default_budget())
    return _limited(budget, 1, lambda b: is_sat(f, (), b), unknown)


def _node_holds(p, parent: Stage, kid: Stage, budget):
    """The node check for ``parent -> kid``, or None when it fails or is undecided."""
    if budget is None:
        budget = Budget(default_budget())
    res = _limited(budget, 10, lambda b: check_node(p, parent, [kid], None, b, minimize=False), None)
    return res if res is not None and res.holds else None


@dataclass(frozen=True)
class DeadCertificate:
    """U is eventually dead on the stage: g >= 0 there, no step increases g,
    and every transition of U decreases it by at least 1."""
    transitions: FrozenSet[int]
    coeffs: Tuple[Tuple[str, Fraction], ...]

    def integer_coeffs(self) -> Dict[str, int]:
        den = 1
        for _, c in self.coeffs:
            den = den * c.denominator // np.gcd(den, c.denominator)
        return {v: int(c * den) for v, c in self.coeffs if c}

    def ranking(self, bound: Optional[int] = 1) -> RankingFunction:
        return RankingFunction.linear(self.integer_coeffs(), bound)


@dataclass
class SynthesisResult:
    graphs: Optional[Tuple[StageGraph, StageGraph]]      # (target 1, target 0)
    trace: List[str] = field(default_factory=list)
    reason: str = ""
    reports: List[CheckReport] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.graphs is not None


class SynthesisFailure(Exception):
    pass


# -- building blocks ---------------------------------------------------------

def preach(p: Protocol, origin: Formula, traps: bool = True, name: str = "root") -> Stage:
    """Flow stage denoting the state-equation overapproximation of reach(origin)."""
    root = FlowRoot(p, origin, traps=traps, name=name)
    return Stage(name, TRUE, None, root)


def _enabled(p: Protocol, t: int) -> Formula:
    pre = p.pre(t)
    return conj(*(threshold({v: 1}, ">=", pre[i]) for i, v in enumerate(p.var_names) if pre[i]))


def alive_transitions(p: Protocol, s: Stage, budget=None) -> List[int]:
    """Effective transitions enabled at some configuration of the stage."""
    member = s.member()
    return [t for t in p.effective_transitions()
            if t not in s.dead and _sat(conj(member, _enabled(p, t)), budget)]


def _exact_certificate(p: Protocol, alive: Sequence[int], decreasing: Sequence[int],
                       monotone: bool) -> Optional[Dict[str, Fraction]]:
    """Exact rational g with g.delta_t <= 0 on alive and <= -1 on decreasing."""
    sx = Simplex(Budget(10 ** 6))
    names = p.var_names
    cols = [sx.add_var() for _ in names]
    if monotone:
        for c in cols:
            sx.assert_lower(c, 0)
    for t in alive:
        row = {cols[i]: d for i, d in enumerate(p.delta(t)) if d}
        if not row:
            continue
        r = sx.add_row(row)
        if not sx.assert_upper(r, -1 if t in decreasing else 0):
            return None
    if not sx.check():
        return None
    return {v: Fraction(sx.value[c]) for v, c in zip(names, cols)}


def _lp_decreasing(p: Protocol, alive: Sequence[int], monotone: bool) -> List[int]:
    """Largest set of alive transitions some feasible g strictly decreases."""
    n, m = p.n_states, len(alive)
    if m == 0:
        return []
    # variables: g (n), s (m); maximize sum s subject to g.delta_t + s_t <= 0
    a = np.zeros((m, n + m))
    for k, t in enumerate(alive):
        a[k, :n] = p.delta(t)
        a[k, n + k] = 1.0
    bounds = [(0, None) if monotone else (None, None)] * n + [(0, 1)] * m
    res = linprog(-np.ones(n + m) * np.r_[np.zeros(n), np.ones(m)], A_ub=a, b_ub=np.zeros(m),
                  bounds=bounds, method="highs")
    if res.status != 0:
        return []
    s = res.x[n:]
    return [t for k, t in enumerate(alive) if s[k] > 1e-7]


def find_eventually_dead(p: Protocol, s: Stage, budget=None,
                         alive: Optional[Sequence[int]] = None) -> Optional[DeadCertificate]:
    """Certificate for a maximal set of eventually dead transitions, or None.

    First with nonnegative coefficients (then g >= 0 holds everywhere), then
    with arbitrary signs, where nonnegativity on the stage is checked by the
    solver.
    """
    if alive is None:
        alive = alive_transitions(p, s, budget)
    if not alive:
        return None
    for monotone in (True, False):
        dec = _lp_decreasing(p, alive, monotone)
        while dec:
            g = _exact_certificate(p, alive, dec, monotone)
            if g is None:
                # numerical LP answer not confirmed exactly: drop the last candidate
                dec = dec[:-1]
                continue
            cert = DeadCertificate(frozenset(dec), tuple(sorted(g.items())))
            if monotone or _nonnegative(p, s, cert, budget):
                return cert
            break
    return None


def _nonnegative(p: Protocol, s: Stage, cert: DeadCertificate, budget=None) -> bool:
    g = cert.integer_coeffs()
    return not _sat(conj(s.member(), threshold(g, "<=", -1)), budget)


def _closure_step(p: Protocol, r: Formula, transitions: Sequence[int]) -> Formula:
    """Configurations of r whose every enabled step (among transitions) stays in r."""
    names = p.var_names
    parts = [r]
    for t in transitions:
        offsets = {v: p.delta(t)[i] for i, v in enumerate(names) if p.delta(t)[i]}
        parts.append(disj(neg(_enabled(p, t)), shift(r, offsets)))
    return conj(*parts)


def _implies_within(s: Stage, f: Formula, g: Formula, budget=None) -> bool:
    return not _sat(conj(s.member(), f, neg(g)), budget)


def dead_underapprox(p: Protocol, s: Stage, U, budget=None, alive: Optional[Sequence[int]] = None,
                     max_rounds: int = 2) -> Tuple[Formula, int]:
    """Closed refinement of s on which every transition of U is disabled.

    Starts from "every transition of U is disabled", with zero tests that are
    impossible on s dropped, and strengthens it by one-step closure under the
    other alive transitions until it is closed (at most ``max_rounds`` times).
    Returns (refinement, rounds); the refinement is FALSE if nothing closes.
    Configurations of s outside the refinement reach an enabled U transition
    within ``rounds`` steps, so the certificate works as a ranking function
    with bound ``rounds + 1``.
    """
    if alive is None:
        alive = alive_transitions(p, s, budget)
    names = p.var_names
    member = s.member()
    parts = []
    for t in sorted(U):
        pre = p.pre(t)
        options = [var_eq(names[i], 0) if pre[i] == 1 else threshold({names[i]: 1}, "<=", pre[i] - 1)
                   for i in range(p.n_states) if pre[i]]
        options = [o for o in options if _sat(conj(member, o), budget)]
        if not options:
            return FALSE, 0
        parts.append(disj(*options))
    r = conj(*parts)
    others = [t for t in alive if t not in U]
    for rounds in range(max_rounds + 1):
        nxt = _closure_step(p, r, others)
        if _implies_within(s, r, nxt, budget):
            if not _sat(conj(member, r), budget):
                return FALSE, 0
            return r, rounds
        r = nxt
    return FALSE, 0


def _closed_within(p: Protocol, s: Stage, r: Formula, alive: Sequence[int], budget=None) -> bool:
    return _implies_within(s, r, _closure_step(p, r, alive), budget)


def split_stage(p: Protocol, s: Stage, budget=None,
                alive: Optional[Sequence[int]] = None) -> List[Formula]:
    """Refinements partitioning s by a zero test on one state.

    Candidate states are the participants of alive transitions.  A split is
    used only if both halves are nonempty and closed; the result is empty when
    no candidate qualifies.
    """
    if alive is None:
        alive = alive_transitions(p, s, budget)
    names = p.var_names
    member = s.member()
    candidates = sorted({i for t in alive for i in range(p.n_states) if p.pre(t)[i]})
    for i in candidates:
        zero, pos = var_eq(names[i], 0), var_ge(names[i], 1)
        if not (_sat(conj(member, zero), budget) and _sat(conj(member, pos), budget)):
            continue
        if _closed_within(p, s, zero, alive, budget) and _closed_within(p, s, pos, alive, budget):
            return [zero, pos]
    return []


# -- the worklist -------------------------------------------------------------

def _weak_candidates(p: Protocol, alive: Sequence[int]):
    """(U, g) pairs for the weak fallback: U all alive transitions or one of
    them, g the count of a single state or of U's participants."""
    names = p.var_names
    if not alive:
        return
    us = [frozenset(alive)] + [frozenset([t]) for t in alive if len(alive) > 1]
    for U in us:
        gs = [{names[i]: 1} for i in range(p.n_states)]
        part = {names[i]: 1 for t in U for i in range(p.n_states) if p.pre(t)[i]}
        if part not in gs:
            gs.append(part)
        for g in gs:
            yield U, g


def _weak_step(p, s, alive, dead, budget, stages, new_stage, edges, trace, b):
    """Fallback when no linear certificate exists: accept a (U, g) pair whenever
    the bounded weak-decrease check proves it directly."""
    sid, root = s.id, s.flow
    tried = {}
    for U, g in _weak_candidates(p, alive):
        if U not in tried:
            r, _ = dead_underapprox(p, s, U, budget, alive)
            tried[U] = r
        r = tried[U]
        if r == FALSE:
            continue
        kid = new_stage(conj(s.constraint, r), dead | U)
        rank = RankingFunction.linear(g, None)
        res = _node_holds(p, Stage(sid, s.constraint, rank, root, dead), stages[kid], budget)
        if res is not None:
            stages[sid] = Stage(sid, s.constraint, rank.with_bound(res.bound), root, dead)
            edges.append((sid, kid))
            names = ",".join(p.transition_name(t) for t in sorted(U))
            trace.append(f"[{b}] {sid}: weakly dead {{{names}}} -> {kid} "
                         f"(rank {rank.describe()}, B={res.bound})")
            return kid
        del stages[kid]
    return None

def _graph_for(p: Protocol, phi: Formula, b: int, budget, max_stages: int,
               trace: List[str], traps: bool) -> StageGraph:
    origin = conj(init_formula(p), predicate_side(p, phi, b),
                  threshold({input_var(x): 1 for x in p.input_vars}, ">=", 1)
                  if p.input_vars else TRUE)
    root = FlowRoot(p, origin, traps=traps, name=f"root{b}")
    stages: Dict[str, Stage] = {}
    edges: List[Tuple[str, str]] = []
    counter = itertools.count(1)

    def new_stage(refinement: Formula, dead: FrozenSet[int]) -> str:
        sid = f"S{next(counter)}"
        stages[sid] = Stage(sid, refinement, None, root, frozenset(dead))
        return sid

    first_line = len(trace)
    work = [new_stage(TRUE, frozenset())]
    initial = work[0]
    while work:
        if len(stages) > max_stages:
            raise SynthesisFailure(f"stage budget of {max_stages} exceeded")
        sid = work.pop(0)
        s = stages[sid]
        if not _sat(conj(s.member(), wrong_output(p, b)), budget):
            trace.append(f"[{b}] {sid}: bottom")
            continue
        alive = alive_transitions(p, s, budget)
        if not alive:
            raise SynthesisFailure(f"stage {sid}: every transition is dead but the stage "
                                   f"contains configurations that are not {b}-consensuses")
        dead = frozenset(s.dead) | frozenset(t for t in p.effective_transitions() if t not in alive)
        s = Stage(sid, s.constraint, None, root, dead)
        stages[sid] = s
        child = None
        cert = find_eventually_dead(p, s, budget, alive)
        if cert is not None:
            candidates = [cert.transitions] + [frozenset([t]) for t in sorted(cert.transitions)
                                               if len(cert.transitions) > 1]
            for U in candidates:
                c = cert if U == cert.transitions else DeadCertificate(U, cert.coeffs)
                r, rounds = dead_underapprox(p, s, U, budget, alive)
                if r == FALSE:
                    continue
                refinement = conj(s.constraint, r)
                kid = new_stage(refinement, dead | U)
                rank = c.ranking(None)
                res = _node_holds(p, Stage(sid, s.constraint, rank, root, dead), stages[kid], budget)
                if res is not None:
                    stages[sid] = Stage(sid, s.constraint, rank.with_bound(res.bound), root, dead)
                    edges.append((sid, kid))
                    work.append(kid)
                    child = kid
                    names = ",".join(p.transition_name(t) for t in sorted(U))
                    trace.append(f"[{b}] {sid}: dead {{{names}}} -> {kid} (B={res.bound})")
                    break
                del stages[kid]
        if child is None:
            child = _weak_step(p, s, alive, dead, budget, stages, new_stage, edges, trace, b)
            if child is not None:
                work.append(child)
                continue
        else:
            continue
        parts = split_stage(p, s, budget, alive)
        if not parts:
            raise SynthesisFailure(f"stage {sid}: no eventually dead transitions and no split")
        kids = [new_stage(conj(s.constraint, part), dead) for part in parts]
        stages[sid] = Stage(sid, s.constraint, RankingFunction.linear({}, 1), root, dead)
        for kid in kids:
            edges.append((sid, kid))
            work.append(kid)
        trace.append(f"[{b}] {sid}: split -> {', '.join(kids)}")
    g, names = _relabel(StageGraph(stages, edges, b, initial))
    # keep the worklist trace in terms of the final stage names
    prefix = f"[{b}] "
    for i in range(first_line, len(trace)):
        if trace[i].startswith(prefix):
            trace[i] = re.sub(r"\bS\d+\b", lambda m: names.get(m.group(0), m.group(0)), trace[i])
    return g


def _relabel(g: StageGraph) -> Tuple[StageGraph, Dict[str, str]]:
    """Number stages S1, S2, ... in breadth-first order from the initial stage."""
    order, seen = [], {g.initial}
    queue = [g.initial]
    while queue:
        sid = queue.pop(0)
        order.append(sid)
        for c in g.children(sid):
            if c not in seen:
                seen.add(c)
                queue.append(c)
    names = {old: f"S{i + 1}" for i, old in enumerate(order)}
    stages = {}
    for old, st in g.stages.items():
        new = names[old]
        stages[new] = Stage(new, st.constraint, st.rank, st.flow, st.dead)
    edges = [(names[a], names[b]) for a, b in g.edges]
    return StageGraph(stages, edges, g.target, names[g.initial]), names


def synthesize(p: Protocol, phi: Formula, budget=None, max_stages: int = DEFAULT_MAX_STAGES,
               traps: bool = True) -> SynthesisResult:
    """Try to build and validate stage graphs for both sides of ``phi``."""
    if budget is None:
        budget = Budget(default_budget())
    elif isinstance(budget, int):
        budget = Budget(budget)
    trace: List[str] = []
    graphs = []
    try:
        for b in (1, 0):
            graphs.append(_graph_for(p, phi, b, budget, max_stages, trace, traps))
    except SynthesisFailure as e:
        trace.append(f"failure: {e}")
        return SynthesisResult(None, trace, str(e))
    except (BudgetExhausted, BoundTooLarge) as e:
        trace.append(f"failure: {type(e).__name__}: {e}")
        return SynthesisResult(None, trace, f"{type(e).__name__}: {e}")
    reports = []
    for g in graphs:
        try:
            report = check_stage_graph(p, g, phi, budget)
        except BudgetExhausted as e:
            trace.append(f"self-validation ran out of budget: {e}")
            return SynthesisResult(None, trace, "self-validation ran out of budget")
        reports.append(report)
        if not report.passed:
            bad = report.failures()[0]
            trace.append(f"self-validation failed: {bad.id} {bad.counterexample}")
            return SynthesisResult(None, trace, f"self-validation failed at {bad.id}", reports)
    trace.append("self-validation passed")
    return SynthesisResult((graphs[0], graphs[1]), trace, "", reports)
