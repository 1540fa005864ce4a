"""Problem instances: variables, classified constraints, the problem language."""

from .dsl import ProblemParseError, parse_problem, parse_problem_file, render_problem
from .expr import (
    DomainError,
    ExprSyntaxError,
    UnknownFunction,
    UnknownVariable,
    eval_expr,
    parse_expr,
    parse_relation,
    render_expr,
)
from .hints import Hint, reformulation_hints
from .measures import (
    EQUALITY_TOL,
    NotQuantifiable,
    ViolationInfo,
    is_satisfied,
    violation_measure,
    within_tolerance,
)
from .model import (
    Constraint,
    ConstraintKind,
    Diagnostic,
    ProblemInstance,
    SimBinding,
    SimulationSpec,
    Variable,
    VarKind,
)
from .validation import validate

__all__ = [
    "Constraint",
    "ConstraintKind",
    "Diagnostic",
    "DomainError",
    "EQUALITY_TOL",
    "ExprSyntaxError",
    "Hint",
    "NotQuantifiable",
    "ProblemInstance",
    "ProblemParseError",
    "SimBinding",
    "SimulationSpec",
    "UnknownFunction",
    "UnknownVariable",
    "Variable",
    "VarKind",
    "ViolationInfo",
    "eval_expr",
    "is_satisfied",
    "parse_expr",
    "parse_problem",
    "parse_problem_file",
    "parse_relation",
    "reformulation_hints",
    "render_expr",
    "render_problem",
    "validate",
    "violation_measure",
    "within_tolerance",
]
