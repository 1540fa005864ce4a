"""Staged evaluation of a point against a full instance.

Order: unrelaxable a priori constraints, then relaxable a priori ones,
then the simulations. A point that fails the first stage never reaches a
simulation.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from .harness import (
    HIDDEN,
    EvalResult,
    Harness,
    HarnessFault,
    Status,
    interpret_outcome,
    outcome_objective,
)
from .problem.expr import DomainError, eval_expr
from .problem.measures import constraint_value, is_satisfied, violation_measure, within_tolerance
from .problem.model import ConstraintKind, ProblemInstance, SimBinding

__all__ = [
    "Stage",
    "EvaluationPolicy",
    "EvaluationFault",
    "PointEvaluation",
    "SimSavings",
    "Evaluator",
    "evaluate_point",
    "is_acceptable_solution",
    "sim_savings",
    "LOG_COLUMNS",
    "evaluation_rows",
    "write_evaluation_log",
]


class EvaluationFault(RuntimeError):
    """A harness fault surfaced while evaluating a point."""


class Stage(enum.Enum):
    REJECTED_APRIORI = "RejectedAPriori"
    SIMULATED = "Simulated"
    SIMULATION_SKIPPED = "SimulationSkipped"


@dataclass(frozen=True)
class EvaluationPolicy:
    # Relaxable a priori violations also skip the simulations when set.
    skip_sim_on_relaxable_apriori: bool = False


@dataclass(frozen=True)
class PointEvaluation:
    x: tuple
    stage: Stage
    results: tuple
    f: float
    h: float
    n_viol_nonquant: int
    hidden_event: bool
    sim_calls_used: int
    unrelaxable_violated: bool
    raw_values: dict = field(default_factory=dict, compare=False, repr=False)
    outcomes: tuple = field(default=(), compare=False, repr=False)

    @property
    def feasible(self) -> bool:
        return (
            self.h == 0.0
            and self.n_viol_nonquant == 0
            and not self.unrelaxable_violated
            and not self.hidden_event
            and self.stage is Stage.SIMULATED
        )

    def result(self, name) -> Optional[EvalResult]:
        for r in self.results:
            if r.name == name:
                return r
        return None


def _apriori_result(c, point):
    try:
        value = constraint_value(c, point)
    except DomainError as exc:
        return EvalResult(c.name, None, reason=f"domain error: {exc}"), None
    if c.cls.quantifiable and not c.labels:
        info = violation_measure(c, value)
        return EvalResult(c.name, info.feasible, info), value
    return EvalResult(c.name, is_satisfied(c, value)), value


def _h_term(c, r, value):
    """Squared contribution of a quantifiable relaxable constraint to h."""
    if r.feasible:
        return 0.0
    if c.kind is ConstraintKind.EQUALITY:
        return value * value
    if c.kind is ConstraintKind.INEQUALITY:
        return max(0.0, value) ** 2
    viol = r.info.violation if r.info is not None else None
    return (viol or 0.0) ** 2


class _Tally:
    def __init__(self):
        self.h = 0.0
        self.n_viol = 0
        self.unrelaxable = False
        self.hidden = False

    def add(self, c, r, value):
        if r.hidden:
            self.hidden = True
            return
        if c is None:
            return
        if r.unknown:
            # missing information is treated as an unrelaxable violation
            self.unrelaxable = True
            return
        if r.feasible:
            return
        if not c.cls.relaxable:
            self.unrelaxable = True
        elif c.cls.quantifiable and r.info is not None and r.info.violation is not None and value is not None:
            self.h += _h_term(c, r, value)
        else:
            self.n_viol += 1


def _sim_value(c, outcome, spec):
    b = c.body
    if b.source == "elapsed":
        return outcome.elapsed - spec.timeout
    if b.source == "output":
        return outcome.output(b.output)
    return None


def evaluate_point(
    instance: ProblemInstance,
    x,
    policy: EvaluationPolicy = EvaluationPolicy(),
    harness: Optional[Harness] = None,
) -> PointEvaluation:
    """Evaluate ``x`` (solver vector or ``{name: value}``) stage by stage.

    ``h`` sums squared violations of quantifiable relaxable constraints.
    ``f`` is ``+inf`` whenever an unrelaxable constraint is violated, a
    hidden event occurs, a result is unknown, or a simulation did not
    complete.
    """
    harness = harness if harness is not None else Harness()
    x = instance.vector(x) if isinstance(x, dict) else tuple(float(v) for v in x)
    point = instance.point(x)
    by_name = {c.name: c for c in instance.constraints}
    results, raw = [], {}
    tally = _Tally()

    apriori = [c for c in instance.constraints if not c.simulated]
    # stage 1: unrelaxable a priori
    for c in apriori:
        if c.cls.relaxable:
            continue
        r, v = _apriori_result(c, point)
        results.append(r)
        raw[c.name] = v
        tally.add(c, r, v)
    if tally.unrelaxable:
        return PointEvaluation(
            x, Stage.REJECTED_APRIORI, tuple(results), math.inf, tally.h, tally.n_viol,
            False, 0, True, raw,
        )

    # stage 2: relaxable a priori
    relaxed_violation = False
    for c in apriori:
        if not c.cls.relaxable:
            continue
        r, v = _apriori_result(c, point)
        results.append(r)
        raw[c.name] = v
        tally.add(c, r, v)
        relaxed_violation |= r.feasible is not True
    if policy.skip_sim_on_relaxable_apriori and relaxed_violation and instance.used_simulations():
        return PointEvaluation(
            x, Stage.SIMULATION_SKIPPED, tuple(results), math.inf, tally.h, tally.n_viol,
            False, 0, tally.unrelaxable, raw,
        )

    # stage 3: simulations
    outcomes = {}
    calls = 0
    for sim_id in instance.used_simulations():
        spec = instance.simulation(sim_id)
        try:
            outcome = harness.cached_evaluate(spec, point)
        except HarnessFault as exc:
            raise EvaluationFault(f"simulation {sim_id!r} at {x}: {exc}") from exc
        calls += 1
        outcomes[sim_id] = outcome
        for r in interpret_outcome(outcome, instance):
            c = by_name.get(r.name)
            v = _sim_value(c, outcome, spec) if c is not None else None
            if c is not None:
                raw[c.name] = v
            results.append(r)
            tally.add(c, r, v)

    obj = instance.objective
    if isinstance(obj, SimBinding):
        f = outcome_objective(outcomes[obj.simulation], obj)
    else:
        try:
            f = eval_expr(obj, point)
        except DomainError as exc:
            results.append(EvalResult("<objective>", None, reason=f"domain error: {exc}"))
            f = math.inf
    incomplete = any(o.status is not Status.COMPLETED for o in outcomes.values())
    if tally.unrelaxable or tally.hidden or incomplete:
        f = math.inf
    return PointEvaluation(
        x, Stage.SIMULATED, tuple(results), f, tally.h, tally.n_viol,
        tally.hidden, calls, tally.unrelaxable, raw, tuple(outcomes.values()),
    )


def is_acceptable_solution(pe: PointEvaluation, instance: ProblemInstance) -> bool:
    """Could ``pe`` be reported as the final solution?

    Every constraint must hold, relaxable quantifiable ones within their
    declared solution tolerance, and no hidden event may have occurred.
    """
    if pe.stage is not Stage.SIMULATED or pe.hidden_event or pe.unrelaxable_violated:
        return False
    if not math.isfinite(pe.f):
        return False
    seen = set()
    for r in pe.results:
        if r.name == HIDDEN or r.unknown:
            return False
        seen.add(r.name)
        try:
            c = instance.constraint(r.name)
        except KeyError:
            continue
        if r.feasible:
            continue
        value = pe.raw_values.get(c.name)
        if value is None or not within_tolerance(c, value):
            return False
    return all(c.name in seen for c in instance.constraints)


@dataclass(frozen=True)
class SimSavings:
    points_evaluated: int
    rejected_apriori: int
    simulations_executed: int


def sim_savings(evaluations, harness: Optional[Harness] = None) -> SimSavings:
    """Summarize how many simulations staging avoided."""
    evaluations = list(evaluations)
    rejected = sum(e.stage is Stage.REJECTED_APRIORI for e in evaluations)
    if harness is not None:
        executed = harness.counters.executions
    else:
        executed = sum(e.sim_calls_used for e in evaluations)
    return SimSavings(len(evaluations), rejected, executed)


class Evaluator:
    """Evaluates points of one instance through a shared harness."""

    def __init__(self, instance: ProblemInstance, policy: EvaluationPolicy = EvaluationPolicy(), harness=None):
        self.instance = instance
        self.policy = policy
        self.harness = harness if harness is not None else Harness()
        self.log = []

    def __call__(self, x) -> PointEvaluation:
        pe = evaluate_point(self.instance, x, self.policy, self.harness)
        self.log.append(pe)
        return pe

    def savings(self) -> SimSavings:
        return sim_savings(self.log, self.harness)


LOG_COLUMNS = ["ordinal", "stage", "f", "h", "n_viol_nonquant", "hidden_event", "sim_calls_used"]


def _num(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def evaluation_rows(evaluations):
    for i, e in enumerate(evaluations, start=1):
        yield [i, e.stage.value, _num(e.f), _num(e.h), e.n_viol_nonquant, int(e.hidden_event), e.sim_calls_used]


def write_evaluation_log(evaluations, fh=None) -> str:
    """CSV log, one row per evaluated point. Returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    w.writerows(evaluation_rows(evaluations))
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
