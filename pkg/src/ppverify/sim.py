"""Stochastic simulation under the uniform random pairwise scheduler.

At every step an ordered pair of distinct agents is drawn uniformly among the
n(n-1) possibilities and the matching transition is applied (or nothing, for
silent pairs).  Parallel time is interactions / n, kept as an exact fraction.

Two stopping rules are available.  Exact mode explores the reachability graph
of the initial configuration with the oracle and stops as soon as the run
enters a stable consensus.  Heuristic mode stops once the same consensus has
persisted for a window of interactions (default 50 n^2).

Trace format: one line per configuration change, ``<interactions> <terms>``
where terms are ``count*state`` separated by spaces (``-`` for the empty
configuration), followed by one summary line starting with ``#``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Configuration, Protocol, consensus_of, initial_config, size
from .oracle import DEFAULT_NODE_CAP, Converges, ResourceError, classify_graph, explore, stable_set
from .presburger import Formula, evaluate

SEED_STRIDE = 2 ** 32


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StabilizedTo:
    value: int

    def __str__(self):
        return f"StabilizedTo({self.value})"


@dataclass(frozen=True)
class CutoffReached:
    consensus: Optional[int]

    def __str__(self):
        return f"CutoffReached({self.consensus if self.consensus is not None else 'none'})"


@dataclass
class RunResult:
    final: Configuration
    interactions: int
    parallel_time: Fraction
    outcome: object
    seed: int
    trace: Optional[List[Tuple[int, Configuration]]] = None

    @property
    def stabilized(self) -> bool:
        return isinstance(self.outcome, StabilizedTo)

    @property
    def value(self) -> Optional[int]:
        if isinstance(self.outcome, StabilizedTo):
            return self.outcome.value
        return self.outcome.consensus


@dataclass
class EnsembleStats:
    runs: int
    fraction_correct: float
    mean_parallel_time: Optional[float]
    seed: int
    expected: Optional[int] = None
    results: List[RunResult] = field(default_factory=list, repr=False)


class _Scheduler:
    def __init__(self, p: Protocol):
        self.n_states = p.n_states
        self.table: Dict[Tuple[int, int], Tuple[int, int]] = {}
        for q1, q2, r1, r2 in p.transitions:
            self.table[(p.index(q1), p.index(q2))] = (p.index(r1), p.index(r2))

    def pick(self, rng: random.Random, counts: List[int], n: int) -> Tuple[int, int]:
        r = rng.randrange(n)
        first = 0
        while r >= counts[first]:
            r -= counts[first]
            first += 1
        r = rng.randrange(n - 1)
        second = 0
        while True:
            c = counts[second] - (1 if second == first else 0)
            if r < c:
                break
            r -= c
            second += 1
        return first, second

    def silent(self, counts: List[int]) -> bool:
        """True when no non-silent pair can meet in ``counts``."""
        for i, j in self.table:
            if counts[i] and counts[j] and (i != j or counts[i] >= 2):
                return False
        return True


class _StableOracle:
    """Stable-consensus membership from an explicit exploration of C0's graph."""

    def __init__(self, p: Protocol, c0: Configuration, node_cap: int):
        try:
            g = explore(p, c0, node_cap)
        except ResourceError as e:
            raise SimulationError(f"{e}; use heuristic mode instead") from None
        self.graph = g
        self.stable = {b: stable_set(p, g, b) for b in (0, 1)}

    def verdict(self, c: Configuration) -> Optional[int]:
        for b in (0, 1):
            if c in self.stable[b]:
                return b
        return None


def simulate_run(p: Protocol, c0: Configuration, seed: int, cutoff: int = 10 ** 7,
                 exact_stability: bool = True, window: Optional[int] = None,
                 record_trace: bool = False, node_cap: int = DEFAULT_NODE_CAP,
                 _oracle: Optional[_StableOracle] = None) -> RunResult:
    """One seeded run from ``c0``; deterministic given the seed."""
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    c0 = tuple(c0)
    n = size(c0)
    counts = list(c0)
    trace = [(0, c0)] if record_trace else None
    oracle = None
    if exact_stability and n >= 1:
        oracle = _oracle or _StableOracle(p, c0, node_cap)
        b = oracle.verdict(c0)
        if b is not None:
            return RunResult(c0, 0, Fraction(0), StabilizedTo(b), seed, trace)
    if n == 0 and exact_stability:
        # the empty population is stable with consensus 1 by convention
        return RunResult(c0, 0, Fraction(0), StabilizedTo(1), seed, trace)
    if n < 2:
        return RunResult(c0, 0, Fraction(0), CutoffReached(consensus_of(p, c0)), seed, trace)
    rng = random.Random(seed)
    sched = _Scheduler(p)
    table = sched.table
    if window is None:
        window = 50 * n * n
    outputs = [p.output[q] for q in p.states]
    ones = sum(c for c, o in zip(counts, outputs) if o)
    since = 0            # interactions the current consensus has lasted
    steps = 0
    outcome = None
    frozen = sched.silent(counts)
    while steps < cutoff and not frozen:
        steps += 1
        i, j = sched.pick(rng, counts, n)
        move = table.get((i, j))
        if move is not None:
            frozen = counts[i] <= 3 or counts[j] <= 3
            r1, r2 = move
            counts[i] -= 1
            counts[j] -= 1
            counts[r1] += 1
            counts[r2] += 1
            ones += outputs[r1] + outputs[r2] - outputs[i] - outputs[j]
            if trace is not None:
                trace.append((steps, tuple(counts)))
            if oracle is not None:
                b = oracle.verdict(tuple(counts))
                if b is not None:
                    outcome = StabilizedTo(b)
                    break
        if oracle is None:
            if ones == 0 or ones == n:
                since += 1
                if since >= window:
                    outcome = StabilizedTo(1 if ones else 0)
                    break
            else:
                since = 0
        if frozen:
            frozen = sched.silent(counts)
    if frozen and outcome is None:
        # nothing can change any more: skip ahead to where the run would end
        if oracle is None and (ones == 0 or ones == n) and steps + window - since <= cutoff:
            steps += window - since
            outcome = StabilizedTo(1 if ones else 0)
        else:
            steps = cutoff
    final = tuple(counts)
    if outcome is None:
        outcome = CutoffReached(consensus_of(p, final))
    return RunResult(final, steps, Fraction(steps, n), outcome, seed, trace)


def run_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th run of an ensemble."""
    return seed * SEED_STRIDE + index


def _one(args):
    p, c0, s, cutoff, exact, window, node_cap = args
    return simulate_run(p, c0, s, cutoff, exact, window, False, node_cap)


def estimate(p: Protocol, v: Sequence[int], runs: int = 100, seed: int = 0,
             cutoff: int = 10 ** 7, predicate: Optional[Formula] = None,
             exact_stability: bool = True, window: Optional[int] = None,
             node_cap: int = DEFAULT_NODE_CAP, jobs: int = 1) -> EnsembleStats:
    """Independent seeded runs from the initial configuration of input ``v``.

    Correctness is measured against ``predicate`` when given, otherwise
    against the oracle's classification of the initial configuration.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    c0 = initial_config(p, v)
    oracle = None
    if predicate is not None:
        expected = int(evaluate(predicate, dict(zip(p.input_vars, v))))
    else:
        try:
            g = explore(p, c0, node_cap)
        except ResourceError as e:
            raise SimulationError(str(e)) from None
        verdict = classify_graph(p, g)
        expected = verdict.value if isinstance(verdict, Converges) else None
    seeds = [run_seed(seed, i) for i in range(runs)]
    if jobs and jobs > 1 and runs > 1:
        from concurrent.futures import ProcessPoolExecutor
        tasks = [(p, c0, s, cutoff, exact_stability, window, node_cap) for s in seeds]
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_one, tasks, chunksize=max(1, runs // (4 * jobs))))
    else:
        if exact_stability and size(c0) >= 1:
            oracle = _StableOracle(p, c0, node_cap)
        results = [simulate_run(p, c0, s, cutoff, exact_stability, window, False, node_cap,
                                _oracle=oracle) for s in seeds]
    correct = sum(1 for r in results if r.stabilized and r.value == expected)
    times = [float(r.parallel_time) for r in results if r.stabilized]
    mean = sum(times) / len(times) if times else None
    if not size(c0):
        mean = None
    return EnsembleStats(runs, correct / runs, mean, seed, expected, results)


def format_trace(p: Protocol, r: RunResult) -> str:
    lines = [f"{steps} {p.format_config(c)}" for steps, c in (r.trace or [])]
    lines.append(f"# interactions={r.interactions} parallel_time={r.parallel_time} "
                 f"outcome={r.outcome} seed={r.seed}")
    return "\n".join(lines) + "\n"


def parse_trace(p: Protocol, text: str) -> List[Tuple[int, Configuration]]:
    out = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        steps, _, rest = line.partition(" ")
        counts = {}
        if rest != "-":
            for term in rest.split():
                n, _, q = term.partition("*")
                counts[q] = int(n)
        out.append((int(steps), p.config(counts)))
    return out
