"""Quantifier-free Presburger arithmetic: formulas, parsing, solving, export."""

from .formula import (FALSE, TRUE, And, Const, Formula, FormulaError, Implies, Not, Or,
                      Remainder, Threshold, atoms, conj, disj, evaluate, free_vars, neg,
                      normalize, remainder, rename, shift, substitute, threshold, to_str,
                      var_eq, var_ge)
from .parser import ParseError, parse_formula, parse_linear
from .simplex import Budget, BudgetExhausted
from .smtlib import export_smtlib
from .solver import (DEFAULT_BUDGET, Implication, Sat, SolveResult, Unsat, check_implication,
                     default_budget, is_sat, solve)

eval_formula = evaluate

__all__ = [
    "FALSE", "TRUE", "And", "Const", "Formula", "FormulaError", "Implies", "Not", "Or",
    "Remainder", "Threshold", "atoms", "conj", "disj", "evaluate", "eval_formula",
    "free_vars", "neg", "normalize", "remainder", "rename", "shift", "substitute",
    "threshold", "to_str", "var_eq", "var_ge", "ParseError", "parse_formula", "parse_linear", "Budget",
    "BudgetExhausted", "export_smtlib", "DEFAULT_BUDGET", "Implication", "Sat",
    "SolveResult", "Unsat", "check_implication", "default_budget", "is_sat", "solve",
]
