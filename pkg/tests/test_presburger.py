import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppverify.presburger import (FALSE, TRUE, Budget, BudgetExhausted, FormulaError, Implies,
                                 ParseError, Remainder, Sat, Threshold, Unsat, check_implication,
                                 conj, disj, evaluate, export_smtlib, free_vars, neg, normalize,
                                 parse_formula, parse_linear, remainder, solve, threshold, to_str)
from ppverify.presburger.formula import And, Or

VARS = ["x", "y", "z"]


def test_parse_threshold():
    f = parse_formula("x - y >= 4")
    assert f == Threshold((("x", 1), ("y", -1)), ">=", 4)


def test_parse_remainder():
    assert parse_formula("(x + y) % 5 = 3") == Remainder((("x", 1), ("y", 1)), 5, 3)


def test_parse_moves_terms_across():
    f = parse_formula("x >= y + 2")
    assert f == Threshold((("x", 1), ("y", -1)), ">=", 2)


def test_parse_precedence():
    f = parse_formula("x >= 1 | y >= 1 & z >= 1")
    assert isinstance(f, Or)
    assert isinstance(f.args[1], And)
    g = parse_formula("!x >= 1")
    assert evaluate(g, {"x": 0}) and not evaluate(g, {"x": 1})


@pytest.mark.parametrize("text", ["forall z: z >= 0", "exists y: x = 2*y"])
def test_quantifiers_rejected(text):
    with pytest.raises(ParseError, match="quantifiers unsupported"):
        parse_formula(text)


@pytest.mark.parametrize("text", ["x >=", "x >= 1 &", "(x >= 1", "x % 1 = 0", "x $ 2", ""])
def test_syntax_errors(text):
    with pytest.raises(FormulaError):
        parse_formula(text)


def test_syntax_error_position():
    with pytest.raises(ParseError) as e:
        parse_formula("x >= 1 & & y")
    assert e.value.position == 9


def test_parse_linear():
    assert parse_linear("2*x - y + 3") == ({"x": 2, "y": -1}, 3)


def test_eval():
    assert evaluate(parse_formula("x >= 2"), {"x": 3})
    assert evaluate(parse_formula("(x + y) % 5 = 3"), {"x": 6, "y": 2})
    assert not evaluate(parse_formula("x - y >= 4"), {"x": 1, "y": 9})


def test_eval_negative_sum_uses_mathematical_mod():
    assert evaluate(parse_formula("(x - y) % 3 = 2"), {"x": 0, "y": 1})


def test_eval_missing_variable():
    with pytest.raises(FormulaError):
        evaluate(parse_formula("x >= 1"), {})


def test_normalize_examples():
    assert normalize(neg(parse_formula("x >= 4"))) == parse_formula("x <= 3")
    assert normalize(neg(parse_formula("x % 2 = 0"))) == parse_formula("x % 2 = 1")
    g = normalize(neg(conj(parse_formula("x >= 1"), parse_formula("y >= 1"))))
    assert isinstance(g, Or)


def test_remainder_validation():
    with pytest.raises(FormulaError):
        remainder({"x": 1}, 1, 0)
    assert remainder({"x": 1}, 3, 7) == remainder({"x": 1}, 3, 1)


def test_solve_examples():
    assert isinstance(solve(parse_formula("x >= 1 & x <= 0")), Unsat)
    assert solve(parse_formula("2*x + 3*y = 7")) == Sat({"x": 2, "y": 1})
    assert solve(parse_formula("x % 3 = 2 & x >= 4 & x <= 5")) == Sat({"x": 5})


def test_solve_integer_variables():
    f = parse_formula("d <= -2 & d >= -3")
    assert isinstance(solve(f), Unsat)
    res = solve(f, extra_int_vars={"d"})
    assert isinstance(res, Sat) and res.witness["d"] in (-2, -3)


def test_solve_parity_unsat():
    # no natural solution although the relaxation is feasible
    assert isinstance(solve(parse_formula("2*x - 2*y = 1")), Unsat)
    assert isinstance(solve(parse_formula("x % 2 = 0 & x % 4 = 1")), Unsat)


def test_budget_exhaustion_is_not_unsat():
    f = parse_formula("3*x + 5*y + 7*z = 1000 & x % 11 = 3 & y % 13 = 5")
    with pytest.raises(BudgetExhausted):
        solve(f, budget=Budget(3))


def test_budget_from_environment(monkeypatch):
    from ppverify.presburger import default_budget
    monkeypatch.setenv("PPVERIFY_SOLVER_BUDGET", "1234")
    assert default_budget() == 1234


def test_check_implication():
    assert check_implication(parse_formula("x >= 5"), parse_formula("x >= 2")).holds
    res = check_implication(parse_formula("x >= 2"), parse_formula("x >= 5"))
    assert not res.holds and res.counterexample == {"x": 2}
    assert check_implication(parse_formula("x % 4 = 0"), parse_formula("x % 2 = 0")).holds


# -- random formulas ----------------------------------------------------------

def atoms_strategy():
    coeffs = st.dictionaries(st.sampled_from(VARS), st.integers(-5, 5), min_size=1, max_size=3)
    thr = st.builds(threshold, coeffs, st.sampled_from(["<", "<=", "=", ">=", ">"]),
                    st.integers(-10, 10))
    rem = st.builds(lambda c, m, r: remainder(c, m, r % m), coeffs, st.integers(2, 5),
                    st.integers(0, 4))
    return st.one_of(thr, thr, rem)


formulas = st.recursive(
    atoms_strategy(),
    lambda sub: st.one_of(
        st.builds(neg, sub),
        st.builds(lambda a, b: conj(a, b), sub, sub),
        st.builds(lambda a, b: disj(a, b), sub, sub),
        st.builds(Implies, sub, sub)),
    max_leaves=6)

assignments = st.fixed_dictionaries({v: st.integers(0, 30) for v in VARS})


@given(formulas, assignments)
def test_print_parse_roundtrip(f, a):
    g = parse_formula(to_str(f))
    assert evaluate(f, a) == evaluate(g, a)


@given(formulas, assignments)
def test_normalize_preserves_semantics(f, a):
    assert evaluate(f, a) == evaluate(normalize(f), a)


def _brute(f, bound=20):
    vs = sorted(free_vars(f))
    for c in itertools.product(range(bound + 1), repeat=len(vs)):
        if evaluate(f, dict(zip(vs, c))):
            return dict(zip(vs, c))
    return None


@given(formulas)
def test_solver_against_enumeration(f):
    res = solve(f)
    if isinstance(res, Sat):
        assert evaluate(f, {**{v: 0 for v in free_vars(f)}, **res.witness})
    else:
        assert _brute(f) is None


def test_smtlib_shape():
    text = export_smtlib(parse_formula("x >= 1"))
    assert "(>= x 1)" in text and "(>= x 0)" in text and "(check-sat)" in text
    text = export_smtlib(parse_formula("(x + y) % 5 = 3"))
    assert "(* 5 k_0)" in text and "(declare-fun k_0 () Int)" in text
    assert "(assert (>= k_0 0))" not in text
    assert "(assert true)" in export_smtlib(TRUE)
    assert "(assert false)" in export_smtlib(FALSE)


def test_smtlib_quotes_primed_names():
    assert "|x'|" in export_smtlib(parse_formula("x' >= x"))


@given(formulas)
def test_smtlib_agrees_with_z3(f):
    z3 = pytest.importorskip("z3")
    s = z3.Solver()
    s.from_string(export_smtlib(f))
    verdict = s.check()
    assert (verdict == z3.sat) == isinstance(solve(f), Sat)
