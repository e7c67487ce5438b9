import itertools

import pytest

from ppverify.core import ProtocolError, initial_config
from ppverify.oracle import Converges, classify, decide_up_to
from ppverify.presburger import evaluate, parse_formula
from ppverify.protolib import (GENERATORS, gen_atomic_threshold,
                               gen_diff_power2_first, gen_diff_power2_second, gen_flock_linear,
                               gen_majority, gen_product, gen_remainder, gen_threshold_power2)


def test_majority_shape():
    g = gen_majority()
    assert g.protocol.n_states == 4 == g.expected_states
    assert [g.protocol.transition_name(t) for t in range(4)] == [
        "AY,AN->PY,PN", "AY,PN->AY,PY", "AN,PY->AN,PN", "PY,PN->PY,PY"]
    assert g.predicate_text == "x - y >= 0"


def test_flock():
    g = gen_flock_linear(3)
    assert g.protocol.n_states == 4
    assert classify(g.protocol, initial_config(g.protocol, (2,))) == Converges(0)
    assert decide_up_to(g.protocol, g.predicate, 8).passed


def test_threshold_power2_shape():
    g = gen_threshold_power2(4)
    assert g.protocol.n_states == 7
    assert g.predicate == parse_formula("x >= 16")
    assert decide_up_to(gen_threshold_power2(2).protocol, parse_formula("x >= 4"), 9).passed


def test_distinct_powers_below_threshold():
    # with no agent at 2^k, a total of at least 2^k forces two equal powers
    k = 4
    for r in range(1, k + 1):
        for powers in itertools.combinations(range(k), r):
            assert sum(2 ** i for i in powers) < 2 ** k


def test_diff_state_counts():
    assert gen_diff_power2_second(3).protocol.n_states == 20
    assert gen_diff_power2_first(3).protocol.n_states == 36


def test_diff_oracle():
    assert decide_up_to(gen_diff_power2_first(1).protocol, parse_formula("x >= y + 2"), 6).passed
    g = gen_diff_power2_second(1)
    assert decide_up_to(g.protocol, g.predicate, 6).passed


def test_remainder():
    g = gen_remainder((1, 1), 5, 3)
    assert g.protocol.n_states == 7
    assert g.predicate == parse_formula("(x + y) % 5 = 3")
    single = gen_remainder((1,), 2, 1)
    assert classify(single.protocol, initial_config(single.protocol, (1,))) == Converges(1)


def test_remainder_sum_invariant():
    g = gen_remainder((1, 2), 4, 1)
    p = g.protocol
    residue = {f"r{u}": u for u in range(4)}
    for q1, q2, r1, r2 in p.transitions:
        before = sum(residue.get(q, 0) for q in (q1, q2)) % 4
        after = sum(residue.get(q, 0) for q in (r1, r2)) % 4
        assert before == after


def test_remainder_validation():
    with pytest.raises(ProtocolError):
        gen_remainder((1,), 1, 0)
    with pytest.raises(ProtocolError):
        gen_remainder((1,), 3, 3)


def test_atomic_threshold():
    g = gen_atomic_threshold((1, -1), 2)
    assert g.protocol.n_states == g.expected_states == 28
    assert decide_up_to(g.protocol, parse_formula("x >= y + 2"), 7).passed
    one = gen_atomic_threshold((1,), 1)
    assert decide_up_to(one.protocol, parse_formula("x >= 1"), 6).passed


def test_atomic_threshold_value_conservation():
    g = gen_atomic_threshold((2, -1), 1)
    p = g.protocol

    def value(q):
        mag = int(q[2:q.index("_")])
        return -mag if q[1] == "m" else mag

    s = max(abs(1) + 1, 2)
    for q1, q2, r1, r2 in p.transitions:
        total = value(q1) + value(q2)
        assert value(r1) + value(r2) == total
        assert abs(value(r1)) <= s and abs(value(r2)) <= s


def test_product():
    f2 = gen_flock_linear(2)
    rem = gen_remainder((1,), 3, 0)
    g = gen_product(f2, rem, "and")
    assert g.protocol.n_states == 15 == g.expected_states
    assert decide_up_to(g.protocol, parse_formula("x >= 2 & x % 3 = 0"), 9).passed
    assert gen_product(gen_majority(), gen_majority()).protocol.n_states == 16
    g = gen_product(f2, rem, "or")
    assert decide_up_to(g.protocol, g.predicate, 7).passed


def test_product_with_trivial_protocol():
    f2 = gen_flock_linear(2)
    yes = gen_remainder((3,), 3, 0)      # 3x = 0 mod 3 holds for every x
    g = gen_product(f2, yes, "and")
    assert all(evaluate(g.predicate, {"x": x}) == evaluate(f2.predicate, {"x": x})
               for x in range(10))
    assert decide_up_to(g.protocol, f2.predicate, 7).passed


def test_product_rejects_mismatch():
    with pytest.raises(ProtocolError):
        gen_product(gen_majority(), gen_flock_linear(2))
    with pytest.raises(ProtocolError):
        gen_product(gen_flock_linear(2), gen_flock_linear(2), "xor")


@pytest.mark.parametrize("k", [0, -1, "2"])
def test_bad_k(k):
    with pytest.raises(ProtocolError):
        gen_flock_linear(k)


def test_registry():
    assert set(GENERATORS) == {"majority", "flock", "power2", "diff-first", "diff-second",
                               "remainder", "threshold"}
