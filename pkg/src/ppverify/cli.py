"""Command-line front end.

Exit codes: 0 success, 1 property violated, 2 input error, 3 resource budget
exceeded.  Every command prints a human-readable report, or a JSON object
carrying ``"schema": 1`` when ``--json`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .core import Protocol, ProtocolError, initial_config
from .io import (FileFormatError, dump_stage_graphs, load_protocol, load_stage_graphs,
                 save_protocol)
from .oracle import DEFAULT_NODE_CAP, CounterExample, ResourceError, decide_up_to
from .presburger import (Budget, BudgetExhausted, ParseError, conj, export_smtlib,
                         free_vars, parse_formula)
from .protolib import GENERATORS, GeneratedProtocol, gen_product
from .sim import SimulationError, estimate, format_trace, run_seed, simulate_run
from .stagegraph import BoundTooLarge, StageGraphError, check_stage_graph, reach_formula, step_formula

SCHEMA = 1

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _emit(args, payload: Dict[str, Any], lines: Sequence[str]):
    if args.json:
        payload = {"schema": SCHEMA, "command": args.command, **payload}
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _budget(args) -> Optional[Budget]:
    return Budget(args.budget) if args.budget else None


def _predicate(p: Protocol, text: str):
    try:
        phi = parse_formula(text)
    except ParseError as e:
        raise InputError(f"--predicate: {e}") from None
    unknown = free_vars(phi) - set(p.input_vars)
    if unknown:
        raise InputError(f"--predicate: unknown input variable(s) {', '.join(sorted(unknown))}")
    return phi


def _config_json(p: Protocol, c) -> Dict[str, int]:
    return {q: n for q, n in zip(p.states, c) if n}


# -- commands -------------------------------------------------------------

def cmd_check(args) -> int:
    p = load_protocol(args.protocol)
    phi = _predicate(p, args.predicate)
    graphs = load_stage_graphs(p, args.stage_graphs)
    targets = sorted(g.target for g in graphs)
    if targets != [0, 1]:
        raise InputError(f"{args.stage_graphs}: expected one graph per target 0 and 1, got {targets}")
    budget = _budget(args)
    out, lines, ok = [], [], True
    for g in sorted(graphs, key=lambda g: -g.target):
        report = check_stage_graph(p, g, phi, budget)
        ok &= report.passed
        lines.append(f"graph for consensus {g.target}: {'PASS' if report.passed else 'FAIL'}")
        obs = []
        for o in report.obligations:
            cex = [_config_json(p, c) for c in o.counterexample] if o.counterexample else None
            obs.append({"id": o.id, "kind": o.kind, "stages": list(o.stages), "passed": o.passed,
                        "counterexample": cex, "detail": o.detail, "bound": o.bound})
            mark = "ok  " if o.passed else "FAIL"
            line = f"  {mark} {o.id}"
            if o.bound is not None and o.passed:
                line += f" (B={o.bound})"
            if not o.passed:
                shown = ", ".join(p.format_config(c) for c in o.counterexample or ())
                line += f": {o.detail} [{shown}]"
            lines.append(line)
        out.append({"target": g.target, "passed": report.passed, "obligations": obs})
    lines.append("PASS" if ok else "FAIL")
    _emit(args, {"passed": ok, "graphs": out}, lines)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_verify(args) -> int:
    from .io import stage_graph_to_dict
    from .verifier import synthesize

    p = load_protocol(args.protocol)
    phi = _predicate(p, args.predicate)
    res = synthesize(p, phi, _budget(args), max_stages=args.max_stages)
    lines = list(res.trace) if args.trace or not res.success else []
    if res.success:
        for g in res.graphs:
            lines.append(f"graph for consensus {g.target}: {len(g.stages)} stages, validated")
        if args.out:
            dump_stage_graphs(list(res.graphs), args.out)
            lines.append(f"stage graphs written to {args.out}")
        lines.append("VERIFIED")
    else:
        lines.append(f"FAILED: {res.reason}")
    payload = {"success": res.success, "reason": res.reason, "trace": res.trace,
               "graphs": [stage_graph_to_dict(g) for g in res.graphs] if res.success else None}
    _emit(args, payload, lines)
    if res.success:
        return EXIT_OK
    if res.reason.startswith(("BudgetExhausted", "BoundTooLarge")) or "out of budget" in res.reason:
        return EXIT_BUDGET
    return EXIT_VIOLATION


def cmd_oracle(args) -> int:
    p = load_protocol(args.protocol)
    phi = _predicate(p, args.predicate)
    res = decide_up_to(p, phi, args.max_agents, include_empty=args.include_empty,
                       node_cap=args.node_cap, jobs=args.jobs)
    payload: Dict[str, Any] = {"passed": res.passed, "inputs": res.inputs}
    if isinstance(res, CounterExample):
        payload.update({"input": dict(zip(p.input_vars, res.input)), "expected": res.expected,
                        "got": str(res.got)})
        witness = getattr(res.got, "witness", None)
        if witness:
            payload["witness"] = [_config_json(p, c) for c in witness]
    _emit(args, payload, [str(res)])
    return EXIT_OK if res.passed else EXIT_VIOLATION


def _parse_input(p: Protocol, text: str) -> List[int]:
    values = {x: 0 for x in p.input_vars}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, eq, val = part.partition("=")
        if not eq or name.strip() not in values:
            raise InputError(f"--input: expected name=count over {', '.join(p.input_vars)}, got {part!r}")
        try:
            n = int(val)
        except ValueError:
            raise InputError(f"--input: {name.strip()}: not an integer: {val!r}") from None
        if n < 0:
            raise InputError(f"--input: {name.strip()}: must be nonnegative")
        values[name.strip()] = n
    return [values[x] for x in p.input_vars]


def cmd_simulate(args) -> int:
    p = load_protocol(args.protocol)
    v = _parse_input(p, args.input)
    phi = _predicate(p, args.predicate) if args.predicate else None
    exact = not args.heuristic
    stats = estimate(p, v, args.runs, args.seed, args.cutoff, phi, exact, args.window,
                     args.node_cap, args.jobs)
    lines = [f"input {dict(zip(p.input_vars, v))}, {stats.runs} runs, seed {stats.seed}",
             f"expected output: {stats.expected if stats.expected is not None else 'undefined'}",
             f"fraction correct: {stats.fraction_correct:.4f}"]
    if stats.mean_parallel_time is not None:
        lines.append(f"mean parallel time: {stats.mean_parallel_time:.3f}")
    cutoffs = sum(1 for r in stats.results if not r.stabilized)
    if cutoffs:
        lines.append(f"runs stopped at the cutoff: {cutoffs}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "seed", "interactions", "parallel_time", "outcome", "value"] + list(p.states))
            for i, r in enumerate(stats.results):
                w.writerow([i, r.seed, r.interactions, float(r.parallel_time), str(r.outcome),
                            "" if r.value is None else r.value] + list(r.final))
        lines.append(f"per-run table written to {args.csv}")
    first = None
    if args.trace or args.plot:
        first = simulate_run(p, initial_config(p, v), run_seed(args.seed, 0), args.cutoff, exact,
                             args.window, True, args.node_cap)
    if args.trace:
        Path(args.trace).write_text(format_trace(p, first), encoding="utf-8")
        lines.append(f"trace of run 0 written to {args.trace}")
    plots = []
    if args.plot:
        from .plotting import plot_times, plot_trajectory
        base = args.plot[:-4] if args.plot.endswith(".png") else args.plot
        plots.append(plot_trajectory(p, first.trace, base + "-trajectory.png",
                                     f"run 0, input {dict(zip(p.input_vars, v))}"))
        times = [float(r.parallel_time) for r in stats.results if r.stabilized]
        plots.append(plot_times(times, base + "-times.png", f"{stats.runs} runs"))
        lines.append("figures written to " + ", ".join(plots))
    payload = {"input": dict(zip(p.input_vars, v)), "runs": stats.runs, "seed": stats.seed,
               "expected": stats.expected, "fraction_correct": stats.fraction_correct,
               "mean_parallel_time": stats.mean_parallel_time, "cutoff_runs": cutoffs,
               "plots": plots}
    _emit(args, payload, lines)
    if stats.expected is None:
        return EXIT_VIOLATION
    wrong = sum(1 for r in stats.results if r.stabilized and r.value != stats.expected)
    if wrong:
        return EXIT_VIOLATION
    return EXIT_BUDGET if cutoffs else EXIT_OK


def _int_list(text: str) -> List[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _generate(spec: Sequence[str]) -> GeneratedProtocol:
    """``spec`` is a generator name followed by its parameters."""
    if not spec:
        raise InputError("gen: missing generator name")
    name, params = spec[0], list(spec[1:])
    try:
        if name == "product":
            if len(params) != 3:
                raise InputError("gen product OP LEFT RIGHT, operands written as name:p1:p2")
            op, left, right = params
            return gen_product(_generate(left.split(":")), _generate(right.split(":")), op)
        if name not in GENERATORS:
            raise InputError(f"gen: unknown generator {name!r}; choose from "
                             f"{', '.join(sorted(GENERATORS) + ['product'])}")
        if name == "majority":
            args: List[Any] = []
        elif name in ("remainder", "threshold"):
            args = [_int_list(params[0])] + [int(s) for s in params[1:]]
        else:
            args = [int(s) for s in params]
        return GENERATORS[name](*args)
    except (ValueError, TypeError, IndexError) as e:
        raise InputError(f"gen {name}: bad parameters {params}: {e}") from None


def cmd_gen(args) -> int:
    g = _generate(args.spec)
    out = args.out or f"{g.name.replace(' ', '')}.json"
    save_protocol(g.protocol, out)
    sidecar = out + ".predicate"
    Path(sidecar).write_text(g.predicate_text + "\n", encoding="utf-8")
    lines = [f"{g.name}: {g.protocol.n_states} states ({g.states_formula}), "
             f"{len(g.protocol.transitions)} transitions",
             f"predicate: {g.predicate_text}",
             f"written {out} and {sidecar}"]
    _emit(args, {"name": g.name, "states": g.protocol.n_states, "predicate": g.predicate_text,
                 "protocol_file": out, "predicate_file": sidecar}, lines)
    return EXIT_OK


def cmd_export_smt(args) -> int:
    parts = []
    if args.protocol:
        p = load_protocol(args.protocol)
        if args.reach is not None:
            if args.reach < 1:
                raise InputError("--reach: bound must be at least 1")
            parts.append(reach_formula(p, args.reach))
        elif args.step:
            parts.append(step_formula(p))
    elif args.step or args.reach is not None:
        raise InputError("--step/--reach need --protocol")
    if args.formula:
        try:
            parts.append(parse_formula(args.formula))
        except ParseError as e:
            raise InputError(f"--formula: {e}") from None
    if not parts:
        raise InputError("export-smt: give --formula and/or --protocol with --step or --reach")
    text = export_smtlib(conj(*parts))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _emit(args, {"file": args.out}, [f"written {args.out}"])
    elif args.json:
        _emit(args, {"smtlib": text}, [])
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ppverify", description="Verification, ground truth and simulation "
                                              "for population protocols.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable report")
        return sp

    cores = os.cpu_count() or 1

    sp = common(sub.add_parser("check", help="check stage graphs against a protocol"))
    sp.add_argument("--protocol", required=True)
    sp.add_argument("--stage-graphs", required=True)
    sp.add_argument("--predicate", required=True)
    sp.add_argument("--budget", type=int, help="solver node budget")
    sp.set_defaults(func=cmd_check)

    sp = common(sub.add_parser("verify", help="synthesize and validate stage graphs"))
    sp.add_argument("--protocol", required=True)
    sp.add_argument("--predicate", required=True)
    sp.add_argument("--budget", type=int, help="solver node budget")
    sp.add_argument("--max-stages", type=int, default=200)
    sp.add_argument("--out", help="write the synthesized graphs here")
    sp.add_argument("--trace", action="store_true", help="print the worklist trace on success too")
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("oracle", help="exhaustive check on small populations"))
    sp.add_argument("--protocol", required=True)
    sp.add_argument("--predicate", required=True)
    sp.add_argument("--max-agents", type=int, required=True)
    sp.add_argument("--include-empty", action="store_true")
    sp.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    sp.add_argument("--jobs", type=int, default=cores)
    sp.set_defaults(func=cmd_oracle)

    sp = common(sub.add_parser("simulate", help="seeded stochastic runs"))
    sp.add_argument("--protocol", required=True)
    sp.add_argument("--input", required=True, help="e.g. x=3,y=2")
    sp.add_argument("--predicate", help="judge runs against this instead of the oracle")
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cutoff", type=int, default=10 ** 7, help="interactions per run")
    sp.add_argument("--heuristic", action="store_true",
                    help="stop on a long-lived consensus instead of exact stability")
    sp.add_argument("--window", type=int, help="heuristic window (default 50 n^2)")
    sp.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    sp.add_argument("--jobs", type=int, default=cores)
    sp.add_argument("--trace", help="write the trace of run 0 to this file")
    sp.add_argument("--csv", help="write one row per run to this file")
    sp.add_argument("--plot", help="figure file prefix (PNG)")
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("gen", help="generate a protocol family member"))
    sp.add_argument("spec", nargs="+", metavar="GENERATOR [PARAM ...]",
                    help="e.g. 'flock 3', 'remainder 1,1 5 3', 'product and flock:2 remainder:1:3:0'")
    sp.add_argument("--out", help="protocol file (predicate goes to <out>.predicate)")
    sp.set_defaults(func=cmd_gen)

    sp = common(sub.add_parser("export-smt", help="write a formula as an SMT-LIB2 script"))
    sp.add_argument("--formula")
    sp.add_argument("--protocol")
    sp.add_argument("--step", action="store_true", help="include the one-step relation")
    sp.add_argument("--reach", type=int, help="include bounded reachability with this bound")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export_smt)
    return ap


def run(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, FileFormatError, ProtocolError, StageGraphError, ParseError) as e:
        if isinstance(e, BoundTooLarge):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_BUDGET
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExhausted, ResourceError, SimulationError) as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main(argv: Optional[Sequence[str]] = None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
