"""Generators for concrete protocols, each paired with the predicate it decides."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

from .core import Protocol, ProtocolError
from .presburger import Formula, conj, disj, parse_formula, to_str


@dataclass(frozen=True)
class GeneratedProtocol:
    protocol: Protocol
    predicate: Formula
    states_formula: str          # closed form of |Q| in the parameters
    expected_states: int
    name: str = ""
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def predicate_text(self) -> str:
        return to_str(self.predicate)


def _build(states, output, inputs, transitions, leaders=None) -> Protocol:
    """Assemble a protocol, dropping listed pairs whose result equals the pair."""
    ts = [t for t in transitions if (t[0], t[1]) != (t[2], t[3])]
    return Protocol(states=list(states), output=output, input_vars=list(inputs),
                    input_state=inputs, leaders=leaders or {}, transitions=ts)


def _require_k(k: int):
    if not isinstance(k, int) or k < 1:
        raise ProtocolError(f"parameter k must be a positive integer, got {k!r}")


# -- majority -----------------------------------------------------------------

def gen_majority() -> GeneratedProtocol:
    """Active/passive majority: decides x >= y (ties go to 1)."""
    p = _build(
        ["AY", "AN", "PY", "PN"],
        {"AY": 1, "AN": 0, "PY": 1, "PN": 0},
        {"x": "AY", "y": "AN"},
        [("AY", "AN", "PY", "PN"),
         ("AY", "PN", "AY", "PY"),
         ("AN", "PY", "AN", "PN"),
         ("PY", "PN", "PY", "PY")])
    return GeneratedProtocol(p, parse_formula("x >= y"), "4", 4, "majority")


# -- flock of birds -------------------------------------------------------------

def gen_flock_linear(k: int) -> GeneratedProtocol:
    """Agents hold values 0..k and pool them; once some agent reaches k it converts everyone."""
    _require_k(k)
    states = [str(i) for i in range(k + 1)]
    ts = []
    for i, j in itertools.product(range(k + 1), repeat=2):
        if i == k or j == k:
            ts.append((str(i), str(j), str(k), str(k)))
        elif i >= 1 and j >= 1:
            w = min(i + j, k)
            ts.append((str(i), str(j), str(w), str(i + j - w)))
    p = _build(states, {s: int(s == str(k)) for s in states}, {"x": "1"}, ts)
    return GeneratedProtocol(p, parse_formula(f"x >= {k}"), "k + 1", k + 1,
                             f"flock_linear({k})", {"k": k})


# -- succinct thresholds ----------------------------------------------------------

def gen_threshold_power2(k: int) -> GeneratedProtocol:
    """Decides x >= 2^k with k + 3 states.

    States: ``zero``, ``p0`` .. ``pk`` (an agent in ``pi`` holds 2^i) and ``acc``.
    Two equal powers below 2^k merge; an agent holding 2^k turns itself and its
    partner into ``acc``, which then spreads.
    """
    _require_k(k)
    powers = [f"p{i}" for i in range(k + 1)]
    states = ["zero"] + powers + ["acc"]
    ts = []
    for i in range(k):
        ts.append((powers[i], powers[i], powers[i + 1], "zero"))
    top = powers[k]
    for q in states:
        ts.append((top, q, "acc", "acc"))
        ts.append((q, top, "acc", "acc"))
        ts.append(("acc", q, "acc", "acc"))
        ts.append((q, "acc", "acc", "acc"))
    # the first rule listed for a pair wins
    unique = list({(t[0], t[1]): t for t in reversed(ts)}.values())[::-1]
    output = {q: int(q in (top, "acc")) for q in states}
    p = _build(states, output, {"x": "p0"}, unique)
    return GeneratedProtocol(p, parse_formula(f"x >= {2 ** k}"), "k + 3", k + 3,
                             f"threshold_power2({k})", {"k": k})


def _pebble_state(color: str, bag: int, flag: int) -> str:
    return f"{color}{bag}_{'u' if flag else 'd'}"


def _pebble_protocol(k: int, bags: List[int], blue_rule: Callable, cancel: Callable) -> Protocol:
    full = 2 ** k
    states, output = [], {}
    for color in "BR":
        for bag in bags:
            for flag in (0, 1):
                s = _pebble_state(color, bag, flag)
                states.append(s)
                output[s] = flag
    ts = []
    for (c1, b1, f1), (c2, b2, f2) in itertools.product(
            itertools.product("BR", bags, (0, 1)), repeat=2):
        if c1 == "R" and c2 == "R":
            continue
        both_up = f1 and f2
        if c1 == "B" and c2 == "B":
            n1, n2 = blue_rule(b1, b2)
            flag = int(n1 == full or n2 == full or both_up)
        else:
            blue, red = (b1, b2) if c1 == "B" else (b2, b1)
            if cancel(blue, red):
                nb, nr, flag = blue - 1, red - 1, 0
            else:
                nb, nr = blue, red
                flag = int(blue == full or both_up)
            n1, n2 = (nb, nr) if c1 == "B" else (nr, nb)
        ts.append((_pebble_state(c1, b1, f1), _pebble_state(c2, b2, f2),
                   _pebble_state(c1, n1, flag), _pebble_state(c2, n2, flag)))
    inputs = {"x": _pebble_state("B", 1, 0), "y": _pebble_state("R", 1, 0)}
    return _build(states, output, inputs, ts)


def gen_diff_power2_first(k: int) -> GeneratedProtocol:
    """Bags of capacity 2^k and a flag; decides x - y >= 2^k.

    Between two blue agents the initiator hands the responder as many pebbles
    as fit.  Flags are compared as they were before the interaction.
    """
    _require_k(k)
    full = 2 ** k

    def blue(b1, b2):
        recv = min(b1 + b2, full)
        return b1 + b2 - recv, recv

    p = _pebble_protocol(k, list(range(full + 1)), blue, lambda b, r: b > 0 and r > 0)
    n = 2 * (full + 1) * 2
    return GeneratedProtocol(p, parse_formula(f"x >= y + {full}"), "2*(2^k+1)*2", n,
                             f"diff_power2_first({k})", {"k": k})


def gen_diff_power2_second(k: int) -> GeneratedProtocol:
    """Bags hold 0 or a power of two up to 2^k; decides x - y >= 2^k.

    Equal bags merge (initiator gives to responder); an empty agent receives
    half of an even bag; a bag of one pebble is never split.
    """
    _require_k(k)
    full = 2 ** k

    def blue(b1, b2):
        if b1 == b2 and b1 > 0:
            recv = min(b1 + b2, full)
            return b1 + b2 - recv, recv
        if b1 == 0 and b2 >= 2:
            return b2 // 2, b2 // 2
        if b2 == 0 and b1 >= 2:
            return b1 // 2, b1 // 2
        return b1, b2

    bags = [0] + [2 ** i for i in range(k + 1)]
    p = _pebble_protocol(k, bags, blue, lambda b, r: b == 1 and r == 1)
    n = 2 * (k + 2) * 2
    return GeneratedProtocol(p, parse_formula(f"x >= y + {full}"), "2*(k+2)*2", n,
                             f"diff_power2_second({k})", {"k": k})


# -- remainder and threshold atoms ------------------------------------------------

def _input_names(n: int) -> List[str]:
    base = ["x", "y", "z"]
    return base[:n] if n <= 3 else [f"x{i + 1}" for i in range(n)]


def _linear_text(coeffs: Sequence[int], names: Sequence[str]) -> str:
    terms = []
    for a, x in zip(coeffs, names):
        if a == 0:
            continue
        mag = "" if abs(a) == 1 else f"{abs(a)}*"
        sign = "-" if a < 0 else "+"
        terms.append((sign, f"{mag}{x}"))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, t in terms[1:]:
        out += f" {sign} {t}"
    return out


def gen_remainder(a: Sequence[int], m: int, b: int) -> GeneratedProtocol:
    """Decides (sum a_i x_i) % m = b with m + 2 states.

    Active agents hold a residue; two actives merge into one active and one
    passive, and passives copy the verdict of the active agents they meet.
    """
    a = [int(v) for v in a]
    if not a:
        raise ProtocolError("remainder: at least one coefficient is required")
    if not isinstance(m, int) or m < 2:
        raise ProtocolError(f"remainder: modulus must be at least 2, got {m!r}")
    if not isinstance(b, int) or not 0 <= b < m:
        raise ProtocolError(f"remainder: residue must lie in 0..{m - 1}, got {b!r}")
    act = [f"r{u}" for u in range(m)]
    states = act + ["p0", "p1"]
    output = {f"r{u}": int(u == b) for u in range(m)}
    output.update({"p0": 0, "p1": 1})
    ts = []
    for u, v in itertools.product(range(m), repeat=2):
        w = (u + v) % m
        ts.append((act[u], act[v], act[w], f"p{int(w == b)}"))
    for u in range(m):
        verdict = f"p{int(u == b)}"
        for c in ("p0", "p1"):
            ts.append((act[u], c, act[u], verdict))
            ts.append((c, act[u], verdict, act[u]))
    names = _input_names(len(a))
    inputs = {x: act[ai % m] for x, ai in zip(names, a)}
    p = _build(states, output, inputs, ts)
    phi = parse_formula(f"{_linear_text(a, names)} % {m} = {b}" if any(a)
                        else ("true" if b == 0 else "false"))
    return GeneratedProtocol(p, phi, "m + 2", m + 2, f"remainder({tuple(a)},{m},{b})",
                             {"a": tuple(a), "m": m, "b": b})


def gen_atomic_threshold(a: Sequence[int], b: int) -> GeneratedProtocol:
    """Decides sum a_i x_i >= b with 4(2s+1) states, s = max(|b| + 1, max |a_i|).

    An agent is (leader bit, value in [-s, s], output bit).  When a leader
    meets any agent, the first agent keeps the sum clamped to [-s, s] and
    stays a leader, the second keeps the remainder and becomes a follower, and
    both outputs are set to [sum >= b].  Followers never interact with each
    other.
    """
    a = [int(v) for v in a]
    if not a or all(v == 0 for v in a):
        raise ProtocolError("atomic threshold: coefficients must not all be zero")
    b = int(b)
    s = max(abs(b) + 1, max(abs(v) for v in a))

    def name(lead, u, o):
        sign = "m" if u < 0 else "p"
        return f"{'L' if lead else 'F'}{sign}{abs(u)}_{o}"

    states, output = [], {}
    for lead in (1, 0):
        for u in range(-s, s + 1):
            for o in (0, 1):
                states.append(name(lead, u, o))
                output[name(lead, u, o)] = o
    ts = []
    agents = list(itertools.product((1, 0), range(-s, s + 1), (0, 1)))
    for (l1, u1, o1), (l2, u2, o2) in itertools.product(agents, repeat=2):
        if not (l1 or l2):
            continue
        total = u1 + u2
        w = max(-s, min(s, total))
        o = int(total >= b)
        ts.append((name(l1, u1, o1), name(l2, u2, o2), name(1, w, o), name(0, total - w, o)))
    names = _input_names(len(a))
    inputs = {x: name(1, ai, int(ai >= b)) for x, ai in zip(names, a)}
    p = _build(states, output, inputs, ts)
    phi = parse_formula(f"{_linear_text(a, names)} >= {b}")
    return GeneratedProtocol(p, phi, "4*(2*s+1), s = max(|b|+1, max|a_i|)", 4 * (2 * s + 1),
                             f"atomic_threshold({tuple(a)},{b})", {"a": tuple(a), "b": b})


# -- boolean combinations -----------------------------------------------------------

def gen_product(g1: GeneratedProtocol, g2: GeneratedProtocol, op: str = "and") -> GeneratedProtocol:
    """Run two protocols synchronously on the same interactions."""
    if op not in ("and", "or"):
        raise ProtocolError(f"product: op must be 'and' or 'or', got {op!r}")
    p1, p2 = g1.protocol, g2.protocol
    if p1.input_vars != p2.input_vars:
        raise ProtocolError("product: operands must have identical input variables")
    if p1.leaders or p2.leaders:
        raise ProtocolError("product: operands must be leaderless")

    def pair(q1, q2):
        return f"({q1},{q2})"

    states = [pair(q1, q2) for q1 in p1.states for q2 in p2.states]
    combine = (lambda u, v: u & v) if op == "and" else (lambda u, v: u | v)
    output = {pair(q1, q2): combine(p1.output[q1], p2.output[q2])
              for q1 in p1.states for q2 in p2.states}
    table1 = {(t[0], t[1]): (t[2], t[3]) for t in p1.transitions}
    table2 = {(t[0], t[1]): (t[2], t[3]) for t in p2.transitions}
    ts = []
    for (a1, a2), (b1, b2) in itertools.product(
            itertools.product(p1.states, p2.states), repeat=2):
        r1 = table1.get((a1, b1), (a1, b1))
        r2 = table2.get((a2, b2), (a2, b2))
        ts.append((pair(a1, a2), pair(b1, b2), pair(r1[0], r2[0]), pair(r1[1], r2[1])))
    inputs = {x: pair(p1.input_state[x], p2.input_state[x]) for x in p1.input_vars}
    p = _build(states, output, inputs, ts)
    phi = conj(g1.predicate, g2.predicate) if op == "and" else disj(g1.predicate, g2.predicate)
    n = len(p1.states) * len(p2.states)
    return GeneratedProtocol(p, phi, "|Q1|*|Q2|", n, f"product({g1.name},{g2.name},{op})",
                             {"op": op})


GENERATORS = {
    "majority": gen_majority,
    "flock": gen_flock_linear,
    "power2": gen_threshold_power2,
    "diff-first": gen_diff_power2_first,
    "diff-second": gen_diff_power2_second,
    "remainder": gen_remainder,
    "threshold": gen_atomic_threshold,
}
