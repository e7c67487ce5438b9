"""Quantifier-free Presburger formulas: AST, evaluation, printing, normal form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Tuple, Union

Coeffs = Tuple[Tuple[str, int], ...]

OPS = ("<", "<=", "=", ">=", ">")


class FormulaError(ValueError):
    pass


def _coeffs(mapping: Union[Mapping[str, int], Iterable[Tuple[str, int]]]) -> Coeffs:
    acc: Dict[str, int] = {}
    items = mapping.items() if isinstance(mapping, Mapping) else mapping
    for v, a in items:
        if not v:
            raise FormulaError("variable names must be nonempty")
        acc[v] = acc.get(v, 0) + int(a)
    return tuple(sorted((v, a) for v, a in acc.items() if a != 0))


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Threshold:
    """sum(a * x) op bound."""
    coeffs: Coeffs
    op: str
    bound: int

    def __post_init__(self):
        if self.op not in OPS:
            raise FormulaError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Remainder:
    """sum(a * x) == residue (mod modulus)."""
    coeffs: Coeffs
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 2:
            raise FormulaError(f"modulus must be at least 2, got {self.modulus}")
        if not 0 <= self.residue < self.modulus:
            raise FormulaError("residue must be reduced modulo the modulus")


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Const, Threshold, Remainder, Not, And, Or, Implies]
Atom = Union[Threshold, Remainder]


# -- smart constructors ---------------------------------------------------

def _compare(value: int, op: str, bound: int) -> bool:
    if op == "<":
        return value < bound
    if op == "<=":
        return value <= bound
    if op == "=":
        return value == bound
    if op == ">=":
        return value >= bound
    return value > bound


def threshold(coeffs, op: str, bound: int) -> Formula:
    """Threshold atom; constant atoms fold to TRUE/FALSE."""
    cs = _coeffs(coeffs)
    if not cs:
        return Const(_compare(0, op, bound))
    return Threshold(cs, op, int(bound))


def remainder(coeffs, modulus: int, residue: int) -> Formula:
    if modulus < 2:
        raise FormulaError(f"modulus must be at least 2, got {modulus}")
    cs = tuple((v, a) for v, a in _coeffs(coeffs) if a % modulus)
    r = residue % modulus
    if not cs:
        return Const(r == 0)
    return Remainder(cs, modulus, r)


def conj(*fs: Formula) -> Formula:
    args = []
    for f in fs:
        if isinstance(f, And):
            args.extend(f.args)
        elif f == TRUE:
            continue
        elif f == FALSE:
            return FALSE
        else:
            args.append(f)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def disj(*fs: Formula) -> Formula:
    args = []
    for f in fs:
        if isinstance(f, Or):
            args.extend(f.args)
        elif f == FALSE:
            continue
        elif f == TRUE:
            return TRUE
        else:
            args.append(f)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(tuple(args))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def var_ge(v: str, n: int) -> Formula:
    return threshold({v: 1}, ">=", n)


def var_eq(v: str, n: int) -> Formula:
    return threshold({v: 1}, "=", n)


# -- queries --------------------------------------------------------------

def free_vars(f: Formula) -> set:
    out: set = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Threshold, Remainder)):
            out.update(v for v, _ in g.coeffs)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, Implies):
            stack.extend((g.left, g.right))
    return out


def atoms(f: Formula) -> set:
    out: set = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Threshold, Remainder)):
            out.add(g)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, Implies):
            stack.extend((g.left, g.right))
    return out


def linear_value(coeffs: Coeffs, a: Mapping[str, int]) -> int:
    try:
        return sum(c * a[v] for v, c in coeffs)
    except KeyError as e:
        raise FormulaError(f"assignment does not cover variable {e.args[0]!r}") from None


def evaluate(f: Formula, a: Mapping[str, int]) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Threshold):
        return _compare(linear_value(f.coeffs, a), f.op, f.bound)
    if isinstance(f, Remainder):
        return (linear_value(f.coeffs, a) - f.residue) % f.modulus == 0
    if isinstance(f, Not):
        return not evaluate(f.arg, a)
    if isinstance(f, And):
        return all(evaluate(g, a) for g in f.args)
    if isinstance(f, Or):
        return any(evaluate(g, a) for g in f.args)
    if isinstance(f, Implies):
        return (not evaluate(f.left, a)) or evaluate(f.right, a)
    raise TypeError(f"not a formula: {f!r}")


# -- transformations ------------------------------------------------------

def substitute(f: Formula, mapping: Mapping[str, Tuple[Mapping[str, int], int]]) -> Formula:
    """Replace variables by linear terms ``(coeffs, constant)``."""

    def lin(coeffs: Coeffs):
        acc: Dict[str, int] = {}
        const = 0
        for v, a in coeffs:
            if v in mapping:
                sub, c0 = mapping[v]
                const += a * c0
                for w, b in sub.items():
                    acc[w] = acc.get(w, 0) + a * b
            else:
                acc[v] = acc.get(v, 0) + a
        return acc, const

    def go(g: Formula) -> Formula:
        if isinstance(g, Threshold):
            acc, const = lin(g.coeffs)
            return threshold(acc, g.op, g.bound - const)
        if isinstance(g, Remainder):
            acc, const = lin(g.coeffs)
            return remainder(acc, g.modulus, g.residue - const)
        if isinstance(g, Not):
            return neg(go(g.arg))
        if isinstance(g, And):
            return conj(*(go(h) for h in g.args))
        if isinstance(g, Or):
            return disj(*(go(h) for h in g.args))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        return g

    return go(f)


def rename(f: Formula, names: Mapping[str, str]) -> Formula:
    return substitute(f, {v: ({w: 1}, 0) for v, w in names.items()})


def shift(f: Formula, offsets: Mapping[str, int]) -> Formula:
    """Substitute ``v -> v + offsets[v]``."""
    return substitute(f, {v: ({v: 1}, c) for v, c in offsets.items() if c})


def normalize(f: Formula) -> Formula:
    """Negation normal form with every atom positive."""
    return _nnf(f, False)


def _nnf(f: Formula, negated: bool) -> Formula:
    if isinstance(f, Const):
        return Const(f.value != negated)
    if isinstance(f, Threshold):
        return _threshold_nnf(f, negated)
    if isinstance(f, Remainder):
        if not negated:
            return f
        return disj(*(Remainder(f.coeffs, f.modulus, r)
                      for r in range(f.modulus) if r != f.residue))
    if isinstance(f, Not):
        return _nnf(f.arg, not negated)
    if isinstance(f, And):
        parts = [_nnf(g, negated) for g in f.args]
        return disj(*parts) if negated else conj(*parts)
    if isinstance(f, Or):
        parts = [_nnf(g, negated) for g in f.args]
        return conj(*parts) if negated else disj(*parts)
    if isinstance(f, Implies):
        if negated:
            return conj(_nnf(f.left, False), _nnf(f.right, True))
        return disj(_nnf(f.left, True), _nnf(f.right, False))
    raise TypeError(f"not a formula: {f!r}")


def _threshold_nnf(f: Threshold, negated: bool) -> Formula:
    cs, op, b = f.coeffs, f.op, f.bound
    # canonical positive forms use <=, >= and =
    if op == "<":
        op, b = "<=", b - 1
    elif op == ">":
        op, b = ">=", b + 1
    if not negated:
        return Threshold(cs, op, b)
    if op == "<=":
        return Threshold(cs, ">=", b + 1)
    if op == ">=":
        return Threshold(cs, "<=", b - 1)
    return disj(Threshold(cs, "<=", b - 1), Threshold(cs, ">=", b + 1))


# -- printing -------------------------------------------------------------

def _lin_str(coeffs: Coeffs) -> str:
    parts = []
    for i, (v, a) in enumerate(coeffs):
        mag = abs(a)
        term = v if mag == 1 else f"{mag}*{v}"
        if i == 0:
            parts.append(term if a > 0 else f"-{term}")
        else:
            parts.append(("+ " if a > 0 else "- ") + term)
    return " ".join(parts)


def to_str(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Threshold):
        return f"{_lin_str(f.coeffs)} {f.op} {f.bound}"
    if isinstance(f, Remainder):
        return f"({_lin_str(f.coeffs)}) % {f.modulus} = {f.residue}"
    if isinstance(f, Not):
        return f"!({to_str(f.arg)})"
    if isinstance(f, And):
        return " & ".join(_wrap(g, (Or, Implies)) for g in f.args)
    if isinstance(f, Or):
        return " | ".join(_wrap(g, (Implies,)) for g in f.args)
    if isinstance(f, Implies):
        return f"!({to_str(f.left)}) | ({to_str(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(g: Formula, kinds) -> str:
    s = to_str(g)
    return f"({s})" if isinstance(g, kinds) else s
