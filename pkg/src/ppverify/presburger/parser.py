"""Recursive-descent parser for the formula grammar.

    formula := disj
    disj    := conj {"|" conj}
    conj    := lit {"&" lit}
    lit     := "!" lit | "(" formula ")" | atom
    atom    := linexp cmp linexp | linexp "%" nat "=" nat | "true" | "false"
    linexp  := ["-"] term {("+"|"-") term}
    term    := [integer "*"] (var | "(" linexp ")") | integer

Comparisons between two linear expressions are moved to one side, so
``x >= y + 2`` is accepted as ``x - y >= 2``.
"""

from __future__ import annotations

import re
from typing import Dict, List, Tuple

from .formula import (FALSE, TRUE, Formula, FormulaError, conj, disj, neg, remainder,
                      threshold)

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_']*)|(<=|>=|==|!=|&&|\|\||[()+\-*%!&|<>=:]))")
_QUANTIFIERS = {"forall", "exists"}


class ParseError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("id", m.group(2), start))
        else:
            op = {"==": "=", "&&": "&", "||": "|"}.get(m.group(3), m.group(3))
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] == "eof":
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    # -- boolean layer

    def formula(self) -> Formula:
        parts = [self.conj()]
        while self.at("|"):
            self.take()
            parts.append(self.conj())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def conj(self) -> Formula:
        parts = [self.lit()]
        while self.at("&"):
            self.take()
            parts.append(self.lit())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def lit(self) -> Formula:
        tok = self.peek()
        if tok[0] == "id" and tok[1] in _QUANTIFIERS and self.peek(1)[0] == "id":
            raise ParseError("quantifiers unsupported", tok[2])
        if self.at("!"):
            self.take()
            return neg(self.lit())
        if tok[0] == "id" and tok[1] in ("true", "false"):
            self.take()
            return TRUE if tok[1] == "true" else FALSE
        if self.at("("):
            save = self.i
            try:
                return self.atom()
            except ParseError as first:
                self.i = save
                self.take()
                try:
                    inner = self.formula()
                    self.expect(")")
                except ParseError as second:
                    raise (second if second.position >= first.position else first)
                return inner
        return self.atom()

    # -- arithmetic layer

    def atom(self) -> Formula:
        lhs, c1 = self.linexp()
        tok = self.take()
        if tok[0] == "op" and tok[1] == "%":
            mod_tok = self.take()
            if mod_tok[0] != "int":
                raise ParseError("expected modulus", mod_tok[2])
            modulus = int(mod_tok[1])
            if modulus < 2:
                raise FormulaError(f"modulus must be at least 2, got {modulus}")
            self.expect("=")
            res_tok = self.take()
            if res_tok[0] != "int":
                raise ParseError("expected residue", res_tok[2])
            return remainder(lhs, modulus, int(res_tok[1]) - c1)
        if tok[0] != "op" or tok[1] not in ("<", "<=", "=", ">=", ">", "!="):
            raise ParseError(f"expected comparison, found {tok[1] or 'end of input'!r}", tok[2])
        rhs, c2 = self.linexp()
        coeffs = dict(lhs)
        for v, a in rhs.items():
            coeffs[v] = coeffs.get(v, 0) - a
        if tok[1] == "!=":
            return neg(threshold(coeffs, "=", c2 - c1))
        return threshold(coeffs, tok[1], c2 - c1)

    def linexp(self) -> Tuple[Dict[str, int], int]:
        coeffs: Dict[str, int] = {}
        const = 0
        sign = 1
        if self.at("-"):
            self.take()
            sign = -1
        elif self.at("+"):
            self.take()
        while True:
            tc, k = self.term()
            for v, a in tc.items():
                coeffs[v] = coeffs.get(v, 0) + sign * a
            const += sign * k
            if self.at("+"):
                sign = 1
            elif self.at("-"):
                sign = -1
            else:
                return coeffs, const
            self.take()

    def term(self) -> Tuple[Dict[str, int], int]:
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            n = int(tok[1])
            if self.at("*"):
                self.take()
                inner, k = self.factor()
                return {v: n * a for v, a in inner.items()}, n * k
            return {}, n
        return self.factor()

    def factor(self) -> Tuple[Dict[str, int], int]:
        tok = self.take()
        if tok[0] == "id":
            if tok[1] in ("true", "false") or tok[1] in ("forall", "exists"):
                raise ParseError(f"unexpected keyword {tok[1]!r}", tok[2])
            return {tok[1]: 1}, 0
        if tok[0] == "int":
            return {}, int(tok[1])
        if tok[0] == "op" and tok[1] == "(":
            inner = self.linexp()
            self.expect(")")
            return inner
        raise ParseError(f"expected term, found {tok[1] or 'end of input'!r}", tok[2])


def parse_formula(text: str) -> Formula:
    """Parse a quantifier-free Presburger formula."""
    p = _Parser(text)
    tok = p.peek()
    if tok[0] == "eof":
        raise ParseError("empty formula", 0)
    f = p.formula()
    tok = p.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    return f


def parse_linear(text: str) -> Tuple[Dict[str, int], int]:
    """Parse a linear expression such as ``AY + 2*PN - 1`` into (coeffs, constant)."""
    p = _Parser(text)
    if p.peek()[0] == "eof":
        raise ParseError("empty expression", 0)
    coeffs, const = p.linexp()
    tok = p.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    return {v: a for v, a in coeffs.items() if a}, const
