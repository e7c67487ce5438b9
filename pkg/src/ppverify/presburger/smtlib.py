"""SMT-LIB2 export, for cross-checking verdicts with an external solver."""

from __future__ import annotations

from typing import Iterable, List

from .formula import (And, Const, Formula, Or, Remainder, Threshold, free_vars, normalize)

_SYMBOL_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_~!@$%^&*+-=<>.?/")


def _sym(name: str) -> str:
    if name and all(ch in _SYMBOL_OK for ch in name) and not name[0].isdigit():
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _lin(coeffs) -> str:
    terms = []
    for v, a in coeffs:
        terms.append(_sym(v) if a == 1 else f"(* {_int(a)} {_sym(v)})")
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


def export_smtlib(f: Formula, extra_int_vars: Iterable[str] = ()) -> str:
    """Render ``f`` as an SMT-LIB2 script over the integers.

    Natural-valued variables get a ``(>= x 0)`` assertion.  Each remainder
    atom is replaced by ``s = m*k + r`` with a fresh integer ``k`` that is
    declared at top level; this is sound because the export works on the
    negation normal form, where remainder atoms only occur positively.
    """
    extra = set(extra_int_vars)
    g = normalize(f)
    variables = sorted(free_vars(f))
    fresh: List[str] = []
    taken = set(variables)

    def new_k() -> str:
        i = len(fresh)
        name = f"k_{i}"
        while name in taken:
            i += 1
            name = f"k_{i}"
        taken.add(name)
        fresh.append(name)
        return name

    def go(h: Formula) -> str:
        if isinstance(h, Const):
            return "true" if h.value else "false"
        if isinstance(h, Threshold):
            op = {"<=": "<=", ">=": ">=", "=": "=", "<": "<", ">": ">"}[h.op]
            return f"({op} {_lin(h.coeffs)} {_int(h.bound)})"
        if isinstance(h, Remainder):
            k = new_k()
            return f"(= {_lin(h.coeffs)} (+ (* {h.modulus} {k}) {h.residue}))"
        if isinstance(h, And):
            return "(and " + " ".join(go(a) for a in h.args) + ")"
        if isinstance(h, Or):
            return "(or " + " ".join(go(a) for a in h.args) + ")"
        raise TypeError(f"unexpected node in normal form: {h!r}")

    body = go(g)
    lines = ["(set-logic QF_LIA)"]
    for v in variables + fresh:
        lines.append(f"(declare-fun {_sym(v)} () Int)")
    for v in variables:
        if v not in extra:
            lines.append(f"(assert (>= {_sym(v)} 0))")
    lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
