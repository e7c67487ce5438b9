import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppverify.core import (Protocol, ProtocolError, apply_transition, configs_of_size,
                           consensus_of, enabled, initial_config, size, successors)
from ppverify.protolib import gen_flock_linear, gen_remainder, gen_threshold_power2


def leader_protocol():
    return Protocol(states=["L", "q", "r"], output={"L": 0, "q": 0, "r": 1},
                    input_vars=["x"], input_state={"x": "q"}, leaders={"L": 1},
                    transitions=[("L", "q", "L", "r")])


def test_initial_config(majority):
    assert initial_config(majority, (2, 1)) == (2, 1, 0, 0)
    assert initial_config(majority, (0, 0)) == (0, 0, 0, 0)
    assert initial_config(majority, {"x": 1, "y": 3}) == (1, 3, 0, 0)


def test_initial_config_with_leaders():
    p = leader_protocol()
    assert initial_config(p, (3,)) == (1, 3, 0)


def test_initial_config_arity(majority):
    with pytest.raises(ProtocolError):
        initial_config(majority, (1,))
    with pytest.raises(ProtocolError):
        initial_config(majority, (1, -1))


def test_enabled(majority):
    assert enabled(majority, (1, 1, 0, 0), ("AY", "AN"))
    assert not enabled(majority, (1, 0, 0, 0), ("AY", "AN"))


def test_enabled_same_state_needs_two_agents():
    p = gen_flock_linear(3).protocol
    t = ("1", "1")
    assert not enabled(p, (0, 1, 0, 0), t)
    assert enabled(p, (0, 2, 0, 0), t)


def test_enabled_unknown_transition(majority):
    with pytest.raises(ProtocolError):
        enabled(majority, (1, 1, 0, 0), ("AY", "AY"))


def test_apply_transition(majority):
    assert apply_transition(majority, (1, 1, 0, 0), ("AY", "AN")) == (0, 0, 1, 1)
    assert apply_transition(majority, (0, 0, 1, 1), ("PY", "PN")) == (0, 0, 2, 0)
    with pytest.raises(ProtocolError):
        apply_transition(majority, (1, 0, 0, 0), ("AY", "AN"))


def test_successors(majority):
    assert successors(majority, (1, 1, 0, 0)) == {(0, 0, 1, 1), (1, 1, 0, 0)}
    assert successors(majority, (0, 0, 2, 2)) == {(0, 0, 3, 1), (0, 0, 2, 2)}
    assert successors(majority, (1, 0, 0, 0)) == {(1, 0, 0, 0)}


def test_consensus(majority):
    assert consensus_of(majority, (0, 0, 3, 0)) == 1
    assert consensus_of(majority, (1, 0, 0, 1)) is None
    assert consensus_of(majority, (0, 2, 0, 1)) == 0
    assert consensus_of(majority, (0, 0, 0, 0)) == 1


@pytest.mark.parametrize("bad, field", [
    (dict(states=["a", "a"]), "states"),
    (dict(output={"a": 1}), "outputs"),
    (dict(output={"a": 1, "b": 2}), "outputs"),
    (dict(input_state={"x": "zz"}), "inputs"),
    (dict(leaders={"zz": 1}), "leaders"),
    (dict(transitions=[("a", "b", "a", "b")]), "transitions"),
    (dict(transitions=[("a", "b", "b", "c")]), "transitions"),
    (dict(transitions=[("a", "b", "b", "b"), ("a", "b", "a", "a")]), "transitions"),
])
def test_validation(bad, field):
    base = dict(states=["a", "b"], output={"a": 0, "b": 1}, input_vars=["x"],
                input_state={"x": "a"}, leaders={}, transitions=[])
    base.update(bad)
    with pytest.raises(ProtocolError, match=field):
        Protocol(**base)


def test_unknown_state_is_named():
    with pytest.raises(ProtocolError, match="'c'"):
        Protocol(states=["a", "b"], output={"a": 0, "b": 1}, input_vars=["x"],
                 input_state={"x": "a"}, transitions=[("a", "b", "c", "b")])


def test_variable_names():
    assert gen_flock_linear(2).protocol.var_names == ("q0", "q1", "q2")


def test_format_and_config(majority):
    c = majority.config({"AY": 2, "PN": 1})
    assert c == (2, 0, 0, 1)
    assert majority.format_config(c) == "2*AY 1*PN"
    assert majority.format_config((0, 0, 0, 0)) == "-"


def test_without_transition(majority):
    q = majority.without_transition(("PY", "PN"))
    assert len(q.transitions) == 3
    assert q != majority


def test_configs_of_size():
    cs = list(configs_of_size(4, 3))
    assert len(cs) == 20 and len(set(cs)) == 20
    assert all(sum(c) == 3 for c in cs)


PROTOCOLS = [gen_flock_linear(3).protocol, gen_threshold_power2(2).protocol,
             gen_remainder((1, 2), 3, 1).protocol]


@st.composite
def protocol_and_config(draw):
    p = draw(st.sampled_from(PROTOCOLS))
    c = tuple(draw(st.lists(st.integers(0, 4), min_size=p.n_states, max_size=p.n_states)))
    return p, c


@given(protocol_and_config())
def test_agent_conservation(pc):
    p, c = pc
    for t in range(len(p.transitions)):
        if enabled(p, c, t):
            assert size(apply_transition(p, c, t)) == size(c)
    for d in successors(p, c):
        diff = [a - b for a, b in zip(d, c)]
        assert sum(diff) == 0
        assert sum(1 for x in diff if x) <= 4


@given(protocol_and_config())
def test_enabled_matches_pre(pc):
    p, c = pc
    for t in range(len(p.transitions)):
        assert enabled(p, c, t) == all(a >= b for a, b in zip(c, p.pre(t)))


@given(st.lists(st.integers(0, 6), min_size=2, max_size=2),
       st.lists(st.integers(0, 6), min_size=2, max_size=2))
def test_initial_config_additive(v1, v2):
    p = gen_remainder((1, 2), 3, 1).protocol
    s = [a + b for a, b in zip(v1, v2)]
    c1, c2 = initial_config(p, v1), initial_config(p, v2)
    assert initial_config(p, s) == tuple(a + b for a, b in zip(c1, c2))
