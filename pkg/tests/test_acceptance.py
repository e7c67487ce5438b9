"""Acceptance suite: one test per criterion, each timed and reported on one line.

Run with ``pytest tests/test_acceptance.py -s`` (or as part of the full run) to
see the PASS/FAIL summary lines.
"""

import dataclasses
import itertools
import os
import random
import time
from fractions import Fraction

import pytest

from ppverify.core import configs_of_size, initial_config, successors
from ppverify.io import data_path, load_protocol, load_stage_graphs
from ppverify.oracle import decide_up_to
from ppverify.presburger import (Sat, conj, disj, evaluate, export_smtlib, free_vars, parse_formula,
                                 remainder, solve, threshold)
from ppverify.protolib import (gen_atomic_threshold, gen_diff_power2_first, gen_diff_power2_second,
                               gen_flock_linear, gen_majority, gen_product, gen_remainder,
                               gen_threshold_power2)
from ppverify.sim import StabilizedTo, estimate
from ppverify.stagegraph import (RankingFunction, StageGraph, check_stage_graph, primed,
                                 reach_formula, step_formula)
from ppverify.verifier import synthesize

JOBS = os.cpu_count() or 1


@pytest.fixture
def report(capsys):
    """Print ``criterion N: PASS/FAIL`` with the elapsed time, then enforce the limit."""
    start = time.perf_counter()

    def done(number, ok, limit, note=""):
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < limit
        line = (f"ACCEPTANCE criterion {number}: {'PASS' if ok else 'FAIL'} "
                f"({elapsed:.1f} s, limit {limit} s){' ' + note if note else ''}")
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return done


# -- 1. the worked example --------------------------------------------------------------

def _replace(g, sid, **changes):
    stages = dict(g.stages)
    stages[sid] = dataclasses.replace(stages[sid], **changes)
    return StageGraph(stages, list(g.edges), g.target, g.initial)


def test_criterion_1_worked_example(report):
    p = load_protocol(data_path("majority.json"))
    right, left = load_stage_graphs(p, data_path("fig1.json"))
    phi = parse_formula("x >= y")
    ok = all(check_stage_graph(p, g, phi).passed for g in (right, left))
    mutants = {
        "drop t4": (p.without_transition(("PY", "PN")), right),
        "weaken stage": (p, _replace(right, "S1", constraint=parse_formula("AY >= AN"))),
        "replace ranking": (p, _replace(left, "S1", rank=RankingFunction.linear({"PY": 1}, 1))),
        "bound zero": (p, _replace(left, "S1", rank=left.stages["S1"].rank.with_bound(0))),
        "swap edges": (p, StageGraph(left.stages, [("S1", "S3"), ("S2", "S3")], 0, "S1")),
        "flip bottom": (p, _replace(left, "S3", constraint=parse_formula("AN + PN = 0"))),
    }
    caught = 0
    for name, (q, g) in mutants.items():
        rep = check_stage_graph(q, g, phi)
        bad = rep.failures()
        if not rep.passed and all(o.counterexample for o in bad):
            caught += 1
    ok = ok and caught == len(mutants)
    report(1, ok, 10, f"graphs pass, {caught}/{len(mutants)} mutations caught")


# -- 2. exhaustive ground truth ------------------------------------------------------------

def _oracle_cases():
    cases = [(gen_majority(), 8)]
    cases += [(gen_flock_linear(k), 8) for k in range(1, 5)]
    cases += [(gen_threshold_power2(k), 9) for k in (1, 2)]
    cases += [(gen_diff_power2_first(1), 6), (gen_diff_power2_second(2), 8),
              (gen_remainder((1, 1), 5, 3), 7), (gen_atomic_threshold((1, -1), 2), 7),
              (gen_product(gen_flock_linear(2), gen_remainder((1,), 3, 0), "and"), 9)]
    return cases


def test_criterion_2_oracle(report):
    failed = []
    for g, n in _oracle_cases():
        res = decide_up_to(g.protocol, g.predicate, n, jobs=JOBS)
        if not res.passed:
            failed.append(f"{g.name}: {res}")
    report(2, not failed, 300, "; ".join(failed) or f"{len(_oracle_cases())} protocols")


# -- 3. synthesis ------------------------------------------------------------------------------

def test_criterion_3_synthesis(report):
    ok, notes = True, []
    for g in (gen_majority(), gen_flock_linear(3)):
        res = synthesize(g.protocol, g.predicate)
        good = res.success and all(check_stage_graph(g.protocol, s, g.predicate).passed
                                   for s in res.graphs)
        ok &= good
        notes.append(f"{g.name} {'verified' if good else 'failed'}")
    m = gen_majority()
    mutant = synthesize(m.protocol.without_transition(("PY", "PN")), m.predicate)
    ok &= not mutant.success
    notes.append("mutant rejected" if not mutant.success else "mutant ACCEPTED")
    report(3, ok, 120, ", ".join(notes))


# -- 4. formula layer -----------------------------------------------------------------------

def _explicit_reach(p, c, bound):
    seen, frontier = {c}, {c}
    for _ in range(bound):
        frontier = {d for e in frontier for d in successors(p, e)} - seen
        seen |= frontier
    return seen


def _reach_exact(p, bound, max_agents):
    """Enumerate every model of reach_formula with z3 and compare with explicit search."""
    import z3
    s = z3.Solver()
    s.from_string(export_smtlib(reach_formula(p, bound)).replace("(check-sat)", ""))
    xs = [z3.Int(v) for v in p.var_names]
    ys = [z3.Int(primed(v)) for v in p.var_names]
    for n in range(max_agents + 1):
        for c in configs_of_size(p.n_states, n):
            got = set()
            s.push()
            s.add(*[x == k for x, k in zip(xs, c)])
            while s.check() == z3.sat:
                m = s.model()
                d = tuple(m.eval(y, model_completion=True).as_long() for y in ys)
                got.add(d)
                s.add(z3.Or(*[y != k for y, k in zip(ys, d)]))
            s.pop()
            if got != _explicit_reach(p, c, bound):
                return False
    return True


def _step_exact(p, max_agents):
    f = step_formula(p)
    for n in range(max_agents + 1):
        configs = list(configs_of_size(p.n_states, n))
        for c in configs:
            succ = set(successors(p, c)) | {c}
            for d in configs:
                a = dict(zip(p.var_names, c))
                a.update({primed(v): k for v, k in zip(p.var_names, d)})
                if evaluate(f, a) != (d in succ):
                    return False
    return True


VARS = ("x", "y", "z")
BOX = 5


def _random_atom(rng):
    coeffs = {v: rng.randint(-3, 3) for v in rng.sample(VARS, rng.randint(1, 3))}
    if rng.random() < 0.7:
        return threshold(coeffs, rng.choice([">=", "<=", "=", ">", "<"]), rng.randint(-6, 6))
    m = rng.randint(2, 4)
    return remainder(coeffs, m, rng.randrange(m))


def _random_formula(rng, depth=2):
    if depth == 0 or rng.random() < 0.3:
        return _random_atom(rng)
    parts = tuple(_random_formula(rng, depth - 1) for _ in range(rng.randint(2, 3)))
    return (conj if rng.random() < 0.5 else disj)(*parts)


def _solver_exact(count, seed=2024):
    rng = random.Random(seed)
    box = conj(*[threshold({v: 1}, "<=", BOX) for v in VARS])
    for _ in range(count):
        f = conj(_random_formula(rng), box)
        names = sorted(free_vars(f))
        models = [a for a in (dict(zip(names, vals))
                              for vals in itertools.product(range(BOX + 1), repeat=len(names)))
                  if evaluate(f, a)]
        res = solve(f)
        if isinstance(res, Sat):
            full = {**{v: 0 for v in names}, **res.witness}
            if not evaluate(f, full):
                return False
        elif models:
            return False
    return True


def test_criterion_4_formula_layer(report):
    pytest.importorskip("z3")
    protocols = [gen_majority().protocol, gen_flock_linear(3).protocol]
    step_ok = all(_step_exact(p, 6) for p in protocols)
    reach_ok = all(_reach_exact(p, b, 6) for p in protocols for b in (1, 2, 3))
    solver_ok = _solver_exact(500)
    notes = f"step {'ok' if step_ok else 'WRONG'}, reach {'ok' if reach_ok else 'WRONG'}, " \
            f"solver {'ok' if solver_ok else 'WRONG'}"
    report(4, step_ok and reach_ok and solver_ok, 120, notes)


# -- 5. simulation -------------------------------------------------------------------------

def test_criterion_5_simulation(report):
    runs, bad = 0, []
    for g in (gen_majority(), gen_diff_power2_second(1)):
        p = g.protocol
        for total in range(6):
            for v in configs_of_size(len(p.input_vars), total):
                n = sum(initial_config(p, v))
                stats = estimate(p, v, 200, seed=7, jobs=JOBS)
                for r in stats.results:
                    runs += 1
                    if r.outcome != StabilizedTo(stats.expected):
                        bad.append(f"{g.name} {v}: {r.outcome}")
                    if Fraction(r.interactions) != r.parallel_time * n:
                        bad.append(f"{g.name} {v}: time bookkeeping")
    report(5, not bad, 180, f"{runs} runs" + (f", first problem {bad[0]}" if bad else ""))


# -- 6. state counts ---------------------------------------------------------------------------

def test_criterion_6_state_counts(report):
    ok = True
    for k in range(1, 11):
        g = gen_threshold_power2(k)
        ok &= g.protocol.n_states == k + 3
        ok &= evaluate(g.predicate, {"x": 2 ** k}) and not evaluate(g.predicate, {"x": 2 ** k - 1})
    for k in range(1, 7):
        second, first = gen_diff_power2_second(k), gen_diff_power2_first(k)
        ok &= second.protocol.n_states == 2 * (k + 2) * 2
        ok &= first.protocol.n_states == 2 * (2 ** k + 1) * 2
        for g in (first, second):
            ok &= evaluate(g.predicate, {"x": 2 ** k, "y": 0})
            ok &= not evaluate(g.predicate, {"x": 2 ** k, "y": 1})
    report(6, ok, 10, "k+3 and 2(k+2)2 vs 2(2^k+1)2")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
