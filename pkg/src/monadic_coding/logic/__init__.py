"""First-order formulas: syntax, parser and evaluator."""
from .evaluator import EvaluationError, evaluate, miniscope, restrict, solution_array, solution_set
from .parser import FormulaSyntaxError, parse_formula
from .syntax import (
    FALSE,
    TRUE,
    And,
    Atom,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    PartitionedFormula,
    all_vars,
    children,
    conj,
    depth,
    disj,
    exists,
    forall,
    free_vars,
    fresh_var,
    relations_used,
    rename_bound,
    substitute,
    to_text,
)

__all__ = [
    "And", "Atom", "Const", "Eq", "EvaluationError", "Exists", "FALSE", "Forall", "Formula",
    "FormulaSyntaxError", "Iff", "Implies", "Not", "Or", "PartitionedFormula", "TRUE", "all_vars",
    "children", "conj", "depth", "disj", "evaluate", "exists", "forall", "free_vars", "fresh_var",
    "miniscope", "parse_formula", "relations_used", "rename_bound", "restrict", "solution_array",
    "solution_set", "substitute", "to_text",
]
