"""Coordinate-poll direct search with class-dispatched constraint handling.

Unrelaxable and hidden constraints get the extreme barrier, quantifiable
relaxable ones a single-threshold progressive barrier, a priori bounds
are enforced by projection, and nonquantifiable relaxable violations are
counted and used to break ties.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .evaluator import (
    EvaluationPolicy,
    PointEvaluation,
    Stage,
    evaluate_point,
    is_acceptable_solution,
)
from .harness import HIDDEN, Harness
from .problem.expr import DomainError, affine_form, eval_expr
from .problem.measures import is_satisfied, violation_measure
from .problem.model import ConstraintKind, ProblemInstance, VarKind
from .taxonomy import ConstraintClass, parse_class_code

__all__ = [
    "Treatment",
    "InfeasibleStart",
    "default_policy",
    "bound_of",
    "handling_policy",
    "SolveOptions",
    "SolverState",
    "project",
    "next_candidates",
    "update_state",
    "PolicyTrace",
    "HistoryEntry",
    "SolveReport",
    "solve",
]

NUSH = parse_class_code("NUSH")


class InfeasibleStart(ValueError):
    """The initial point violates an unrelaxable constraint."""


class Treatment(enum.Enum):
    EXTREME_BARRIER = "ExtremeBarrier"
    PROGRESSIVE_BARRIER = "ProgressiveBarrier"
    PROJECTION = "Projection"
    PENALTY_COUNT = "PenaltyCount"
    STAGE_APRIORI = "StageAPriori"


def default_policy(cls: ConstraintClass, bound: bool = False, skip_sim_on_relaxable_apriori: bool = False) -> Treatment:
    """Treatment for a constraint of class ``cls``.

    ``bound`` marks a quantifiable a priori constraint on a single
    variable, which is projected rather than barred. With
    ``skip_sim_on_relaxable_apriori`` the relaxable a priori classes are
    reported as staged filters.
    """
    if cls.hidden:
        return Treatment.EXTREME_BARRIER
    if bound and cls.quantifiable and cls.apriori:
        return Treatment.PROJECTION
    if not cls.relaxable:
        return Treatment.EXTREME_BARRIER
    if cls.apriori and skip_sim_on_relaxable_apriori:
        return Treatment.STAGE_APRIORI
    if cls.quantifiable:
        return Treatment.PROGRESSIVE_BARRIER
    return Treatment.PENALTY_COUNT


def bound_of(constraint) -> Optional[tuple]:
    """``(variable, lo, hi)`` if the constraint is a bound on one variable.

    Covers ``a*x + b <= 0``, ``a*x + b == 0`` and ``a*x + b in [lo, hi]``
    with ``a != 0``.
    """
    c = constraint
    if c.simulated or c.labels or c.members is not None:
        return None
    try:
        form = affine_form(c.body)
    except DomainError:
        return None
    if form is None:
        return None
    coeffs = {k: v for k, v in form[0].items() if v != 0}
    if len(coeffs) != 1:
        return None
    (name, a), b = next(iter(coeffs.items())), form[1]
    if c.kind is ConstraintKind.EQUALITY:
        v = -b / a
        return name, v, v
    if c.kind is ConstraintKind.INEQUALITY:
        v = -b / a
        return (name, -math.inf, v) if a > 0 else (name, v, math.inf)
    lo, hi = c.interval
    lo, hi = (lo - b) / a, (hi - b) / a
    return name, min(lo, hi), max(lo, hi)


def handling_policy(instance: ProblemInstance, skip_sim_on_relaxable_apriori=False, projection=True) -> dict:
    """Constraint name -> :class:`Treatment` for every declared constraint."""
    out = {}
    for c in instance.constraints:
        bound = projection and bound_of(c) is not None
        out[c.name] = default_policy(c.cls, bound, skip_sim_on_relaxable_apriori)
    return out


@dataclass(frozen=True)
class SolveOptions:
    x0: Optional[tuple] = None
    delta0: float = 1.0
    delta_min: float = 1e-6
    delta_max: Optional[float] = None
    max_evals: Optional[int] = None
    max_sims: Optional[int] = None
    seed: int = 0
    shuffle_poll: bool = False
    h_max0: float = math.inf
    restoration: bool = False
    projection: bool = True
    skip_sim_on_relaxable_apriori: bool = False
    n_jobs: int = 1
    run_dir: Optional[str] = None


@dataclass(frozen=True)
class SolverState:
    feasible: Optional[PointEvaluation]
    infeasible: Optional[PointEvaluation]
    delta: float
    h_max: float
    iteration: int = 0
    evaluations: int = 0
    last_success: bool = False

    @property
    def incumbents(self) -> list:
        return [e for e in (self.feasible, self.infeasible) if e is not None]


def _key(e):
    return (e.f, e.n_viol_nonquant, e.x)


def _box(instance, policy, projection):
    lo = [v.domain[0] for v in instance.variables]
    hi = [v.domain[1] for v in instance.variables]
    if projection:
        index = {v.name: i for i, v in enumerate(instance.variables)}
        for c in instance.constraints:
            if policy.get(c.name) is not Treatment.PROJECTION:
                continue
            name, blo, bhi = bound_of(c)
            i = index[name]
            lo[i] = max(lo[i], blo)
            hi[i] = min(hi[i], bhi)
    for i, v in enumerate(instance.variables):
        if v.discrete:
            lo[i] = math.ceil(lo[i]) if math.isfinite(lo[i]) else lo[i]
            hi[i] = math.floor(hi[i]) if math.isfinite(hi[i]) else hi[i]
    return lo, hi


def project(x, instance, policy, projection=True) -> tuple:
    """Clip ``x`` onto the variable domains and every projected bound."""
    lo, hi = _box(instance, policy, projection)
    out = []
    for xi, a, b, v in zip(x, lo, hi, instance.variables):
        if v.discrete:
            xi = float(round(xi))
        if a <= b:
            xi = min(max(xi, a), b)
        out.append(float(xi) + 0.0)
    return tuple(out)


def _poll(center, instance, delta):
    points = []
    for i, v in enumerate(instance.variables):
        if v.kind is VarKind.CATEGORICAL:
            current = int(round(center[i]))
            moves = [float(j) for j in range(len(v.labels)) if j != current]
        elif v.kind is VarKind.BINARY:
            moves = [1.0 - center[i]]
        else:
            step = max(1.0, float(round(delta))) if v.kind is VarKind.INTEGER else delta
            moves = [center[i] + step, center[i] - step]
        for m in moves:
            p = list(center)
            p[i] = m
            points.append(tuple(p))
    return points


def next_candidates(state: SolverState, instance: ProblemInstance, policy=None, projection=True, rng=None) -> list:
    """Axis poll around each incumbent at mesh size ``state.delta``.

    Reals move by ``delta`` (plus then minus, axis order), integers by
    ``max(1, round(delta))``, binaries flip, categoricals try every other
    label. Points are projected and deduplicated.
    """
    policy = policy if policy is not None else handling_policy(instance, projection=projection)
    seen = {e.x for e in state.incumbents}
    out = []
    for inc in state.incumbents:
        for p in _poll(inc.x, instance, state.delta):
            p = project(p, instance, policy, projection)
            if p not in seen:
                seen.add(p)
                out.append(p)
    if rng is not None:
        order = rng.permutation(len(out))
        out = [out[i] for i in order]
    return out


def update_state(state: SolverState, evaluations, delta_max=math.inf) -> SolverState:
    """Fold one poll step into the state.

    The feasible incumbent moves on a strict ``f`` decrease. The
    threshold ``h_max`` drops to the largest positive ``h`` seen below it,
    and the infeasible incumbent becomes the best ``f`` among points with
    ``h <= h_max``. Any incumbent change doubles the mesh, otherwise it is
    halved.
    """
    evaluations = list(evaluations)
    feasible = state.feasible
    cands = [e for e in evaluations if e.feasible and math.isfinite(e.f)]
    if cands:
        best = min(cands, key=_key)
        if feasible is None or best.f < feasible.f:
            feasible = best
    infeas = [e for e in evaluations if not e.feasible and math.isfinite(e.f)]
    below = [e.h for e in infeas if 0.0 < e.h < state.h_max]
    h_max = max(below) if below else state.h_max
    pool = [e for e in infeas if e.h <= h_max]
    if state.infeasible is not None and state.infeasible.h <= h_max:
        pool.append(state.infeasible)
    infeasible = min(pool, key=_key) if pool else None
    success = feasible is not state.feasible or (
        infeasible is not None and infeasible is not state.infeasible
    )
    delta = min(2.0 * state.delta, delta_max) if success else state.delta / 2.0
    return replace(
        state,
        feasible=feasible,
        infeasible=infeasible,
        delta=delta,
        h_max=h_max,
        iteration=state.iteration + 1,
        evaluations=state.evaluations + len(evaluations),
        last_success=success,
    )


# --- reporting structures -------------------------------------------------------


@dataclass
class PolicyTrace:
    """Which treatment handled each constraint, with point and violation counts."""

    classes: dict = field(default_factory=dict)
    treatments: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def record(self, ordinal, evaluation, instance, policy):
        for r in evaluation.results:
            if r.name == HIDDEN:
                name, cls, treat = HIDDEN, NUSH, Treatment.EXTREME_BARRIER
            else:
                try:
                    c = instance.constraint(r.name)
                except KeyError:
                    continue
                name, cls, treat = c.name, c.cls, policy[c.name]
            self.classes[name] = cls
            self.treatments[name] = treat
            self.points[name] = self.points.get(name, 0) + 1
            violated = r.feasible is not True
            self.violations[name] = self.violations.get(name, 0) + int(violated)
            self.rows.append((ordinal, name, cls.code, treat.value, violated))

    def names_with(self, treatment) -> list:
        return [n for n, t in self.treatments.items() if t is treatment]


@dataclass(frozen=True)
class HistoryEntry:
    ordinal: int
    iteration: int
    evaluation: PointEvaluation
    incumbent: str = ""  # "F" feasible, "I" infeasible, "" neither


@dataclass
class SolveReport:
    instance: ProblemInstance
    options: SolveOptions
    solution: Optional[PointEvaluation]
    history: list
    trace: PolicyTrace
    policy: dict
    iterations: int
    delta: float
    h_max: float
    stop_reason: str
    simulations_executed: int
    simulation_requests: int
    cache_hits: int
    restoration_evals: int = 0

    @property
    def success(self) -> bool:
        return self.solution is not None

    @property
    def status(self) -> str:
        return "Solved" if self.success else "ValidSolutionNotFound"

    @property
    def x(self) -> Optional[dict]:
        return None if self.solution is None else self.instance.point(self.solution.x)

    @property
    def f(self) -> float:
        return math.nan if self.solution is None else self.solution.f

    @property
    def evaluations(self) -> list:
        return [h.evaluation for h in self.history]

    @property
    def rejected_apriori(self) -> int:
        return sum(e.stage is Stage.REJECTED_APRIORI for e in self.evaluations)

    def incumbents(self, kind=None) -> list:
        return [h for h in self.history if h.incumbent and (kind is None or h.incumbent == kind)]


# --- driver -----------------------------------------------------------------------


def _default_x0(instance):
    x = []
    for v in instance.variables:
        lo, hi = v.domain
        if math.isfinite(lo) and math.isfinite(hi):
            x.append((lo + hi) / 2.0)
        else:
            x.append(min(max(0.0, lo), hi))
    return tuple(x)


def _unrelaxable_apriori_violation(instance, x):
    point = instance.point(x)
    total = 0.0
    for c in instance.constraints:
        if c.simulated or c.cls.relaxable:
            continue
        try:
            if c.cls.quantifiable and not c.labels:
                info = violation_measure(c, eval_expr(c.body, point))
                viol = info.violation if info.violation is not None else (0.0 if info.feasible else math.inf)
                total += viol * viol
            elif not c.labels:
                if not is_satisfied(c, eval_expr(c.body, point)):
                    return math.inf
            elif point[c.body.name] not in c.members:
                return math.inf
        except DomainError:
            return math.inf
    return total


def _restore(instance, x, options, policy):
    """Coordinate search on the unrelaxable a priori violation alone."""
    delta = options.delta0
    best = _unrelaxable_apriori_violation(instance, x)
    evals = 1
    while best > 0 and delta >= options.delta_min:
        if options.max_evals is not None and evals >= options.max_evals:
            break
        improved = False
        for p in _poll(x, instance, delta):
            p = project(p, instance, policy, options.projection)
            v = _unrelaxable_apriori_violation(instance, p)
            evals += 1
            if v < best:
                best, x, improved = v, p, True
        delta = delta * 2.0 if improved else delta / 2.0
    return x, evals


def solve(instance: ProblemInstance, options: SolveOptions = SolveOptions(), harness: Optional[Harness] = None) -> SolveReport:
    """Minimize the instance objective from ``options.x0``.

    Stops when the mesh falls below ``delta_min`` or a budget runs out.
    The reported solution is the best point of the whole history that
    passes :func:`is_acceptable_solution`; ``report.solution`` is ``None``
    when there is none.
    """
    harness = harness if harness is not None else Harness(options.run_dir)
    policy = handling_policy(instance, options.skip_sim_on_relaxable_apriori, options.projection)
    eval_policy = EvaluationPolicy(options.skip_sim_on_relaxable_apriori)
    delta_max = options.delta_max if options.delta_max is not None else 1024.0 * options.delta0
    rng = np.random.default_rng(options.seed) if options.shuffle_poll else None
    trace = PolicyTrace()
    history = []
    memo = {}

    def budget_left():
        if options.max_evals is not None and len(history) >= options.max_evals:
            return 0
        if options.max_sims is not None and harness.counters.executions >= options.max_sims:
            return 0
        if options.max_evals is None:
            return math.inf
        return options.max_evals - len(history)

    def run(points, iteration):
        points = [p for p in points if p not in memo]
        left = budget_left()
        if left is not math.inf:
            points = points[: int(left)]
        if options.max_sims is not None or options.n_jobs <= 1:
            out = []
            for p in points:
                if budget_left() == 0:
                    break
                out.append(evaluate_point(instance, p, eval_policy, harness))
        else:
            with ThreadPoolExecutor(options.n_jobs) as pool:
                out = list(pool.map(lambda p: evaluate_point(instance, p, eval_policy, harness), points))
        entries = []
        for e in out:
            memo[e.x] = e
            entry = HistoryEntry(len(history) + 1, iteration, e)
            history.append(entry)
            trace.record(entry.ordinal, e, instance, policy)
            entries.append(entry)
        return out

    def mark(state):
        for inc, tag in ((state.feasible, "F"), (state.infeasible, "I")):
            if inc is None:
                continue
            for i in range(len(history) - 1, -1, -1):
                if history[i].evaluation is inc:
                    if not history[i].incumbent:
                        history[i] = replace(history[i], incumbent=tag)
                    break

    x0 = tuple(float(v) for v in (options.x0 if options.x0 is not None else _default_x0(instance)))
    if len(x0) != instance.n:
        raise ValueError(f"x0 has {len(x0)} coordinates, problem has {instance.n}")
    x0 = project(x0, instance, policy, options.projection)
    restoration_evals = 0

    def report(state, reason):
        acceptable = [h.evaluation for h in history if is_acceptable_solution(h.evaluation, instance)]
        best = min(acceptable, key=_key) if acceptable else None
        c = harness.counters
        return SolveReport(
            instance, options, best, history, trace, policy,
            state.iteration if state else 0,
            state.delta if state else options.delta0,
            state.h_max if state else options.h_max0,
            reason, c.executions, c.requests, c.hits, restoration_evals,
        )

    if budget_left() == 0:
        return report(None, "budget exhausted")

    first = run([x0], 0)
    if not first:
        return report(None, "budget exhausted")
    e0 = first[0]
    if not math.isfinite(e0.f):
        if not options.restoration:
            raise InfeasibleStart(
                f"initial point {instance.point(x0)} violates an unrelaxable or hidden constraint"
            )
        x1, restoration_evals = _restore(instance, x0, options, policy)
        if x1 == x0 or budget_left() == 0:
            raise InfeasibleStart("restoration could not reach the unrelaxable feasible region")
        e0 = run([x1], 0)[0]
        if not math.isfinite(e0.f):
            raise InfeasibleStart("restored point still violates an unrelaxable or hidden constraint")

    if e0.feasible:
        state = SolverState(e0, None, options.delta0, options.h_max0)
    else:
        h_max = min(options.h_max0, max(e0.h, 0.0)) if e0.h > 0 else options.h_max0
        state = SolverState(None, e0, options.delta0, h_max)
    mark(state)

    reason = "mesh below delta_min"
    while state.delta >= options.delta_min:
        if budget_left() == 0:
            reason = "budget exhausted"
            break
        cands = next_candidates(state, instance, policy, options.projection, rng)
        evals = run(cands, state.iteration + 1)
        state = update_state(state, evals, delta_max)
        mark(state)
    return report(state, reason)
