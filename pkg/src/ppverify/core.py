"""Population protocol model: protocols, configurations and one-step semantics.

A configuration is a tuple of non-negative ints indexed by the protocol's
state order.  Transitions are stored over ordered pairs of states; any pair
that is not listed is silent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

Configuration = Tuple[int, ...]
Transition = Tuple[str, str, str, str]

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED = {"true", "false", "forall", "exists"}


class ProtocolError(ValueError):
    """Raised for malformed protocols or invalid inputs to the semantics."""


@dataclass(frozen=True)
class Protocol:
    states: Tuple[str, ...]
    output: Mapping[str, int]
    input_vars: Tuple[str, ...]
    input_state: Mapping[str, str]
    leaders: Mapping[str, int] = field(default_factory=dict)
    transitions: Tuple[Transition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "input_vars", tuple(self.input_vars))
        object.__setattr__(self, "transitions", tuple(tuple(t) for t in self.transitions))
        object.__setattr__(self, "output", dict(self.output))
        object.__setattr__(self, "input_state", dict(self.input_state))
        object.__setattr__(self, "leaders", {q: n for q, n in dict(self.leaders).items() if n})
        self._validate()
        index = {q: i for i, q in enumerate(self.states)}
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_var_names", _variable_names(self.states))
        compiled = []
        for q1, q2, r1, r2 in self.transitions:
            pre = [0] * len(self.states)
            delta = [0] * len(self.states)
            pre[index[q1]] += 1
            pre[index[q2]] += 1
            for q in (q1, q2):
                delta[index[q]] -= 1
            for q in (r1, r2):
                delta[index[q]] += 1
            compiled.append((tuple(pre), tuple(delta)))
        object.__setattr__(self, "_compiled", tuple(compiled))

    def _validate(self):
        if len(set(self.states)) != len(self.states):
            raise ProtocolError("states: duplicate state identifiers")
        if not self.states:
            raise ProtocolError("states: protocol needs at least one state")
        known = set(self.states)
        for q in self.states:
            if not isinstance(q, str) or not q:
                raise ProtocolError(f"states: invalid state identifier {q!r}")
        for q, b in self.output.items():
            if q not in known:
                raise ProtocolError(f"outputs: unknown state {q!r}")
            if b not in (0, 1):
                raise ProtocolError(f"outputs: output of {q!r} must be 0 or 1")
        missing = [q for q in self.states if q not in self.output]
        if missing:
            raise ProtocolError(f"outputs: no output for state {missing[0]!r}")
        if len(set(self.input_vars)) != len(self.input_vars):
            raise ProtocolError("inputs: duplicate input variable")
        for x in self.input_vars:
            if not isinstance(x, str) or not _IDENT.match(x) or x in _RESERVED:
                raise ProtocolError(f"inputs: invalid variable name {x!r}")
            if x not in self.input_state:
                raise ProtocolError(f"inputs: variable {x!r} has no input state")
        for x, q in self.input_state.items():
            if x not in self.input_vars:
                raise ProtocolError(f"inputs: unknown variable {x!r}")
            if q not in known:
                raise ProtocolError(f"inputs: unknown state {q!r}")
        for q, n in self.leaders.items():
            if q not in known:
                raise ProtocolError(f"leaders: unknown state {q!r}")
            if not isinstance(n, int) or n < 0:
                raise ProtocolError(f"leaders: count for {q!r} must be a natural number")
        seen = set()
        for t in self.transitions:
            if len(t) != 4:
                raise ProtocolError(f"transitions: expected [q1,q2,q1p,q2p], got {list(t)}")
            for q in t:
                if q not in known:
                    raise ProtocolError(f"transitions: unknown state {q!r}")
            if (t[0], t[1]) == (t[2], t[3]):
                raise ProtocolError(f"transitions: {list(t)} is silent; omit it instead")
            if (t[0], t[1]) in seen:
                raise ProtocolError(f"transitions: pair ({t[0]}, {t[1]}) listed twice")
            seen.add((t[0], t[1]))

    # -- indexing helpers -------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, q: str) -> int:
        return self._index[q]

    @property
    def var_names(self) -> Tuple[str, ...]:
        """Formula variable name for each state (state id if it is an identifier)."""
        return self._var_names

    def pre(self, t: int) -> Configuration:
        return self._compiled[t][0]

    def delta(self, t: int) -> Configuration:
        return self._compiled[t][1]

    def transition_index(self, pair: Tuple[str, str]) -> int:
        for i, t in enumerate(self.transitions):
            if (t[0], t[1]) == tuple(pair):
                return i
        raise ProtocolError(f"unknown transition {pair!r}")

    def transition_name(self, t: int) -> str:
        q1, q2, r1, r2 = self.transitions[t]
        return f"{q1},{q2}->{r1},{r2}"

    def effective_transitions(self) -> List[int]:
        """Indices of transitions that actually change the configuration."""
        return [i for i in range(len(self.transitions)) if any(self.delta(i))]

    def leader_vector(self) -> Configuration:
        return tuple(self.leaders.get(q, 0) for q in self.states)

    def config(self, counts: Mapping[str, int]) -> Configuration:
        """Build a configuration from a state -> count mapping."""
        for q in counts:
            if q not in self._index:
                raise ProtocolError(f"unknown state {q!r}")
        return tuple(int(counts.get(q, 0)) for q in self.states)

    def format_config(self, c: Configuration) -> str:
        terms = [f"{n}*{q}" for q, n in zip(self.states, c) if n]
        return " ".join(terms) if terms else "-"

    def without_transition(self, pair: Tuple[str, str]) -> "Protocol":
        i = self.transition_index(pair)
        ts = self.transitions[:i] + self.transitions[i + 1:]
        return Protocol(self.states, self.output, self.input_vars, self.input_state,
                        self.leaders, ts)

    def __eq__(self, other):
        if not isinstance(other, Protocol):
            return NotImplemented
        return (self.states == other.states and self.output == other.output
                and self.input_vars == other.input_vars
                and self.input_state == other.input_state
                and self.leaders == other.leaders
                and set(self.transitions) == set(other.transitions))

    def __hash__(self):
        return hash((self.states, self.input_vars, frozenset(self.transitions)))


def _variable_names(states: Sequence[str]) -> Tuple[str, ...]:
    names = []
    taken = {q for q in states if _IDENT.match(q) and q.lower() not in _RESERVED}
    for i, q in enumerate(states):
        if q in taken:
            names.append(q)
        else:
            name = f"q{i}"
            while name in taken:
                name = "_" + name
            taken.add(name)
            names.append(name)
    return tuple(names)


# -- semantics ------------------------------------------------------------

def initial_config(p: Protocol, v: Sequence[int]) -> Configuration:
    """Initial configuration for input vector ``v`` (ordered like ``p.input_vars``)."""
    if isinstance(v, Mapping):
        v = [v[x] for x in p.input_vars]
    v = list(v)
    if len(v) != len(p.input_vars):
        raise ProtocolError(f"input arity mismatch: expected {len(p.input_vars)} values, got {len(v)}")
    if any(n < 0 for n in v):
        raise ProtocolError("input values must be natural numbers")
    c = list(p.leader_vector())
    for x, n in zip(p.input_vars, v):
        c[p.index(p.input_state[x])] += n
    return tuple(c)


def size(c: Configuration) -> int:
    return sum(c)


def _check_transition(p: Protocol, t) -> int:
    if isinstance(t, int):
        if not 0 <= t < len(p.transitions):
            raise ProtocolError(f"unknown transition index {t}")
        return t
    return p.transition_index(tuple(t[:2]))


def enabled(p: Protocol, c: Configuration, t) -> bool:
    i = _check_transition(p, t)
    return all(ci >= pi for ci, pi in zip(c, p.pre(i)))


def apply_transition(p: Protocol, c: Configuration, t) -> Configuration:
    i = _check_transition(p, t)
    if not enabled(p, c, i):
        raise ProtocolError(f"transition {p.transition_name(i)} not enabled at {p.format_config(c)}")
    return tuple(ci + di for ci, di in zip(c, p.delta(i)))


def successors(p: Protocol, c: Configuration) -> set:
    """One-step successors; always contains ``c`` (silent interactions)."""
    out = {tuple(c)}
    if sum(c) < 2:
        return out
    for i in range(len(p.transitions)):
        if enabled(p, c, i):
            out.add(tuple(ci + di for ci, di in zip(c, p.delta(i))))
    return out


def consensus_of(p: Protocol, c: Configuration) -> Optional[int]:
    """Common output of all populated states, or None for mixed outputs.

    The empty configuration counts as a 1-consensus.
    """
    values = {p.output[q] for q, n in zip(p.states, c) if n}
    if not values:
        return 1
    if len(values) == 1:
        return values.pop()
    return None


def configs_of_size(n_states: int, n: int) -> Iterable[Configuration]:
    """All configurations with exactly ``n`` agents over ``n_states`` states."""
    if n_states == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in configs_of_size(n_states - 1, n - first):
            yield (first,) + rest
