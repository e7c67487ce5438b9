"""State-equation overapproximation of reachability, used as a stage root.

A root over an origin formula denotes every configuration ``C`` for which
there is an origin configuration ``o`` and a firing-count vector ``x`` with
``C = o + M x``.  Two families of side constraints from Petri-net theory
make the relaxation tighter while keeping it closed under steps:

* trap constraints: a set P whose every consumer also produces into P stays
  marked once marked.  Relative to a firing count this reads
  ``o_P >= 1  ->  C_P >= 1  or  some P-emptying transition fired``;
* siphon constraints: a set P that starts empty can only be entered through
  a transition that produces into P without consuming from it.

Both hold along every real run and are preserved when one more firing is
appended, so the denoted set stays inductive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional

from .core import Protocol
from .presburger import (TRUE, Formula, conj, disj, rename, threshold, var_eq, var_ge)


def origin_var(v: str) -> str:
    return f"_o_{v}"


def count_var(t: int) -> str:
    return f"_x{t}"


def _subsets(n: int, limit: Optional[int]):
    top = n if limit is None else min(limit, n)
    for k in range(1, top + 1):
        yield from combinations(range(n), k)


@dataclass(frozen=True, eq=False)
class FlowRoot:
    protocol: Protocol
    origin: Formula
    traps: bool = True
    subset_limit: Optional[int] = None   # None: all subsets for small protocols
    name: str = "root"
    _body: list = field(default_factory=list, repr=False, compare=False)

    def subset_size(self) -> Optional[int]:
        if self.subset_limit is not None:
            return self.subset_limit
        return None if self.protocol.n_states <= 6 else 2

    def body(self) -> Formula:
        """Membership of C in the root, over C, origin and firing-count variables."""
        if self._body:
            return self._body[0]
        p = self.protocol
        names = p.var_names
        ts = p.effective_transitions()
        parts = [rename(self.origin, {v: origin_var(v) for v in names})]
        for qi, v in enumerate(names):
            coeffs = {v: 1, origin_var(v): -1}
            for t in ts:
                d = p.delta(t)[qi]
                if d:
                    coeffs[count_var(t)] = -d
            parts.append(threshold(coeffs, "=", 0))
        if self.traps:
            parts.extend(self._subset_constraints(ts))
        f = conj(*parts)
        self._body.append(f)
        return f

    def _subset_constraints(self, ts: List[int]) -> List[Formula]:
        p = self.protocol
        names = p.var_names
        out = []
        for subset in _subsets(p.n_states, self.subset_size()):
            members = set(subset)
            consumers, producers, emptying, entering = [], [], [], []
            for t in ts:
                pre = p.pre(t)
                post = [pre[i] + p.delta(t)[i] for i in range(p.n_states)]
                consumes = any(pre[i] for i in members)
                produces = any(post[i] for i in members)
                if consumes:
                    consumers.append(t)
                    if not produces:
                        emptying.append(t)
                if produces and not consumes:
                    entering.append(t)
                if produces:
                    producers.append(t)
            c_sum = {names[i]: 1 for i in members}
            o_sum = {origin_var(names[i]): 1 for i in members}
            # trap: marked at the origin stays marked unless an emptying step fired
            if consumers:
                out.append(disj(threshold(o_sum, "<=", 0), threshold(c_sum, ">=", 1),
                                *(var_ge(count_var(t), 1) for t in emptying)))
            # siphon: empty at the origin can only be entered by an entering step
            if producers:
                out.append(disj(_not_entered(o_sum, c_sum, consumers),
                                *(var_ge(count_var(t), 1) for t in entering)))
        return out

    def aux_vars(self) -> List[str]:
        p = self.protocol
        return [origin_var(v) for v in p.var_names] + [count_var(t) for t in p.effective_transitions()]

    def membership(self, refinement: Formula = TRUE) -> Formula:
        return conj(self.body(), refinement)


def _not_entered(o_sum, c_sum, consumers) -> Formula:
    """not (o_P = 0 and (C_P >= 1 or some consumer of P fired))"""
    return disj(threshold(o_sum, ">=", 1),
                conj(threshold(c_sum, "<=", 0),
                     *(var_eq(count_var(t), 0) for t in consumers)))
