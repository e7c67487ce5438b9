from hypothesis import given
from hypothesis import strategies as st

from ppverify.core import initial_config, successors
from ppverify.flow import FlowRoot, count_var, origin_var
from ppverify.presburger import FALSE, Sat, Unsat, conj, parse_formula, solve, var_eq
from ppverify.stagegraph import init_formula, input_var


def majority_root(p, traps=True):
    origin = conj(init_formula(p), parse_formula("_in_x + _in_y >= 1"))
    return FlowRoot(p, origin, traps=traps)


def fixed(p, c):
    return conj(*(var_eq(v, n) for v, n in zip(p.var_names, c)))


def test_member_after_one_firing(majority):
    root = majority_root(majority)
    res = solve(conj(root.body(), fixed(majority, (0, 0, 1, 1))))
    assert isinstance(res, Sat)
    assert res.witness.get(count_var(0), 0) == 1
    assert res.witness[origin_var("AY")] == 1 and res.witness[origin_var("AN")] == 1


def test_false_origin_is_empty(majority):
    root = FlowRoot(majority, FALSE)
    assert isinstance(solve(root.body()), Unsat)


def test_traps_exclude_unreachable(majority):
    # one passive agent of each colour with no active agent left is reachable
    # only from one AY and one AN; PY alone without history is not reachable
    # from an input with y >= 1 and x = 0
    root = majority_root(majority)
    f = conj(root.body(), parse_formula("_in_x = 0"), fixed(majority, (0, 0, 1, 0)))
    assert isinstance(solve(f), Unsat)


def test_aux_vars(majority):
    root = majority_root(majority)
    assert set(root.aux_vars()) == {origin_var(v) for v in majority.var_names} | \
        {count_var(t) for t in majority.effective_transitions()}


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 6), st.randoms(use_true_random=False))
def test_reachable_configurations_are_members(x, y, steps, rnd):
    from ppverify.protolib import gen_majority
    p = gen_majority().protocol
    if x + y == 0:
        return
    root = majority_root(p)
    c = initial_config(p, (x, y))
    for _ in range(steps):
        c = rnd.choice(sorted(successors(p, c)))
    f = conj(root.body(), fixed(p, c), var_eq(input_var("x"), x), var_eq(input_var("y"), y))
    assert isinstance(solve(f), Sat)
