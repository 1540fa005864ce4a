"""Constraint-taxonomy-aware derivative-free optimization."""

from .evaluator import (
    EvaluationPolicy,
    Evaluator,
    PointEvaluation,
    Stage,
    evaluate_point,
    is_acceptable_solution,
    sim_savings,
)
from .harness import (
    HIDDEN,
    EvalResult,
    Harness,
    SimOutcome,
    SpawnFailure,
    Status,
    interpret_outcome,
    register_blackbox,
    run_simulation,
)
from .problem import (
    ProblemInstance,
    ProblemParseError,
    parse_problem,
    parse_problem_file,
    reformulation_hints,
    render_problem,
    validate,
    violation_measure,
)
from .solver import (
    InfeasibleStart,
    SolveOptions,
    SolveReport,
    Treatment,
    default_policy,
    solve,
)
from .taxonomy import (
    ClassPattern,
    ConstraintClass,
    enumerate_classes,
    format_class,
    leaf_index,
    make_class,
    matches,
    parse_class_code,
)

__version__ = "0.1.0"
