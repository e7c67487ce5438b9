import pytest

from ppverify.core import initial_config
from ppverify.oracle import (Converges, CounterExample, NotWellSpecified, Pass, ResourceError,
                             classify, decide_up_to, explore, input_vectors, stable_set)
from ppverify.presburger import parse_formula
from ppverify.protolib import gen_flock_linear, gen_majority


def test_explore_majority(majority):
    g = explore(majority, (1, 1, 0, 0))
    assert set(g.nodes) == {(1, 1, 0, 0), (0, 0, 1, 1), (0, 0, 2, 0)}
    assert g.bsccs == [[(0, 0, 2, 0)]]


def test_single_agent(majority):
    g = explore(majority, (1, 0, 0, 0))
    assert len(g) == 1 and len(g.bsccs) == 1


def test_node_count_bound(majority):
    assert len(explore(majority, (4, 4, 0, 0))) <= 165


def test_node_cap(majority):
    with pytest.raises(ResourceError):
        explore(majority, (4, 4, 0, 0), node_cap=5)


def test_classify(majority):
    assert classify(majority, (1, 2, 0, 0)) == Converges(0)
    assert classify(majority, (2, 2, 0, 0)) == Converges(1)


def test_classify_mutant(majority):
    mutant = majority.without_transition(("PY", "PN"))
    res = classify(mutant, (2, 2, 0, 0))
    assert isinstance(res, NotWellSpecified)
    assert res.witness == ((0, 0, 2, 2),)


def test_stable_set(majority):
    g = explore(majority, (1, 1, 0, 0))
    assert stable_set(majority, g, 1) == {(0, 0, 2, 0)}
    assert stable_set(majority, g, 0) == set()
    g = explore(majority, (3, 2, 0, 0))
    stable = stable_set(majority, g, 1)
    for comp in g.bsccs:
        assert set(comp) <= stable


def test_input_vectors():
    vs = list(input_vectors(2, 8))
    assert len(vs) == 44
    assert vs[0] == (0, 1) and vs[1] == (1, 0)
    assert list(input_vectors(1, 3, 0)) == [(0,), (1,), (2,), (3,)]


def test_decide_majority(majority):
    res = decide_up_to(majority, parse_formula("x >= y"), 8)
    assert res == Pass(44) and str(res) == "Pass (44 inputs)"


def test_decide_flock():
    g = gen_flock_linear(3)
    assert decide_up_to(g.protocol, parse_formula("x >= 3"), 8).passed
    res = decide_up_to(g.protocol, parse_formula("x >= 4"), 8)
    assert res == CounterExample((3,), 0, Converges(1), 8)


def test_decide_parallel_matches_serial():
    p = gen_majority().protocol
    phi = parse_formula("x > y")
    assert decide_up_to(p, phi, 6, jobs=2) == decide_up_to(p, phi, 6)


def test_empty_input_convention(majority):
    assert decide_up_to(majority, parse_formula("x >= y"), 3, include_empty=True).passed
    assert not decide_up_to(majority, parse_formula("x > y"), 0, include_empty=True).passed
    assert initial_config(majority, (0, 0)) == (0, 0, 0, 0)
