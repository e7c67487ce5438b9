"""Explicit-state ground truth for small populations.

The reachability graph from one configuration is finite, so the induced
Markov chain converges to its bottom strongly connected components with
probability 1.  A protocol converges to b from C0 iff every bottom SCC
consists of b-consensus configurations only.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import Configuration, Protocol, consensus_of, initial_config, size
from .presburger import Formula, evaluate

DEFAULT_NODE_CAP = 2_000_000


class ResourceError(RuntimeError):
    """The explicit state space exceeds the configured node cap."""


@dataclass
class ReachGraph:
    nodes: List[Configuration]
    index: Dict[Configuration, int]
    succ: List[List[int]]
    component: np.ndarray          # SCC label per node
    bottom: List[List[int]]        # node indices of each bottom SCC

    @property
    def bsccs(self) -> List[List[Configuration]]:
        return [[self.nodes[i] for i in comp] for comp in self.bottom]

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class Converges:
    value: int

    def __str__(self):
        return f"Converges({self.value})"


@dataclass(frozen=True)
class NotWellSpecified:
    witness: Tuple[Configuration, ...]
    reason: str = ""

    def __str__(self):
        return f"NotWellSpecified({self.reason})"


Classification = object  # Converges | NotWellSpecified


@dataclass(frozen=True)
class Pass:
    inputs: int

    @property
    def passed(self) -> bool:
        return True

    def __str__(self):
        return f"Pass ({self.inputs} inputs)"


@dataclass(frozen=True)
class CounterExample:
    input: Tuple[int, ...]
    expected: int
    got: object
    inputs: int = 0

    @property
    def passed(self) -> bool:
        return False

    def __str__(self):
        return f"CounterExample(input={self.input}, expected {self.expected}, got {self.got})"


def _moves(p: Protocol):
    """(participant indices with multiplicity, delta) for each effective transition."""
    out = []
    for t in p.effective_transitions():
        pre = p.pre(t)
        need = [(i, n) for i, n in enumerate(pre) if n]
        out.append((need, p.delta(t)))
    return out


def _successors(moves, c: Configuration) -> List[Configuration]:
    out = {c}
    if sum(c) >= 2:
        for need, delta in moves:
            if all(c[i] >= n for i, n in need):
                out.add(tuple(a + d for a, d in zip(c, delta)))
    return sorted(out)


def explore(p: Protocol, c0: Configuration, node_cap: int = DEFAULT_NODE_CAP) -> ReachGraph:
    """Breadth-first closure of ``c0`` under the step relation, with its bottom SCCs."""
    c0 = tuple(c0)
    moves = _moves(p)
    index = {c0: 0}
    nodes = [c0]
    succ: List[List[int]] = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        out = []
        for c in _successors(moves, nodes[i]):
            j = index.get(c)
            if j is None:
                if len(nodes) >= node_cap:
                    raise ResourceError(
                        f"reachability graph exceeds {node_cap} configurations")
                j = len(nodes)
                index[c] = j
                nodes.append(c)
                queue.append(j)
            out.append(j)
        while len(succ) <= i:
            succ.append([])
        succ[i] = out
    n = len(nodes)
    rows = np.repeat(np.arange(n), [len(s) for s in succ])
    cols = np.fromiter(itertools.chain.from_iterable(succ), dtype=np.int64, count=len(rows))
    adj = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    leaves = np.ones(ncomp, dtype=bool)
    cross = labels[rows] != labels[cols]
    leaves[labels[rows[cross]]] = False
    members: Dict[int, List[int]] = {}
    for i, lab in enumerate(labels):
        if leaves[lab]:
            members.setdefault(int(lab), []).append(i)
    bottom = [members[k] for k in sorted(members, key=lambda k: members[k][0])]
    return ReachGraph(nodes, index, succ, labels, bottom)


def classify_graph(p: Protocol, g: ReachGraph):
    values = []
    for comp in g.bottom:
        vals = {consensus_of(p, g.nodes[i]) for i in comp}
        if len(vals) != 1 or None in vals:
            bad = next(g.nodes[i] for i in comp if consensus_of(p, g.nodes[i]) is None) \
                if None in vals else g.nodes[comp[0]]
            return NotWellSpecified((bad,), "bottom SCC contains a non-consensus configuration")
        values.append((vals.pop(), g.nodes[comp[0]]))
    bs = {b for b, _ in values}
    if len(bs) > 1:
        w0 = next(c for b, c in values if b == 0)
        w1 = next(c for b, c in values if b == 1)
        return NotWellSpecified((w0, w1), "bottom SCCs with different consensus values")
    return Converges(bs.pop())


def classify(p: Protocol, c0: Configuration, node_cap: int = DEFAULT_NODE_CAP):
    return classify_graph(p, explore(p, c0, node_cap))


def stable_set(p: Protocol, g: ReachGraph, b: int) -> set:
    """Configurations of ``g`` from which every reachable configuration is a b-consensus."""
    n = len(g.nodes)
    bad = [consensus_of(p, c) != b for c in g.nodes]
    preds: List[List[int]] = [[] for _ in range(n)]
    for i, out in enumerate(g.succ):
        for j in out:
            preds[j].append(i)
    # everything that can reach a bad node is unstable
    queue = deque(i for i in range(n) if bad[i])
    while queue:
        j = queue.popleft()
        for i in preds[j]:
            if not bad[i]:
                bad[i] = True
                queue.append(i)
    return {g.nodes[i] for i in range(n) if not bad[i]}


def input_vectors(m: int, max_total: int, min_total: int = 1) -> Iterable[Tuple[int, ...]]:
    """Input vectors ordered by total, then lexicographically."""
    for total in range(min_total, max_total + 1):
        if m == 0:
            if total == 0:
                yield ()
            continue
        vs = []
        for cut in itertools.combinations(range(total + m - 1), m - 1):
            prev, v = -1, []
            for c in cut:
                v.append(c - prev - 1)
                prev = c
            v.append(total + m - 2 - prev)
            vs.append(tuple(v))
        yield from sorted(vs)


def _check_one(args):
    p, phi, v, node_cap = args
    expected = int(evaluate(phi, dict(zip(p.input_vars, v))))
    c0 = initial_config(p, v)
    if size(c0) == 0:
        return v, expected, Converges(1)
    return v, expected, classify(p, c0, node_cap)


def decide_up_to(p: Protocol, phi: Formula, n: int, include_empty: bool = False,
                 node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1):
    """Exhaustively compare the protocol with ``phi`` on all inputs of total at most n."""
    vs = list(input_vectors(len(p.input_vars), n, 0 if include_empty else 1))
    tasks = [(p, phi, v, node_cap) for v in vs]
    if jobs and jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_check_one, tasks, chunksize=4))
    else:
        results = map(_check_one, tasks)
    for v, expected, got in results:
        if got != Converges(expected):
            return CounterExample(v, expected, got, len(vs))
    return Pass(len(vs))
