"""Static checks on a problem instance."""

from __future__ import annotations

import math
from collections import Counter

from ..taxonomy import Availability, Knowledge
from .expr import DomainError, UnknownVariable, Var, referenced_variables
from .model import ConstraintKind, Diagnostic, ProblemInstance, SimBinding, VarKind

__all__ = ["validate"]


def _dupes(items, what, out):
    counts = Counter(name for name, _ in items)
    seen = set()
    for name, line in items:
        if counts[name] > 1 and name not in seen:
            seen.add(name)
            out.append(Diagnostic("error", "DuplicateName", f"{what} {name!r} declared {counts[name]} times", line))


def _check_expr(node, instance, where, line, out):
    names = {v.name: v for v in instance.variables}
    try:
        refs = referenced_variables(node)
    except (UnknownVariable, DomainError) as exc:
        out.append(Diagnostic("error", "UnknownVariable", f"{where}: {exc}", line))
        return []
    for name in refs:
        if name not in names:
            out.append(Diagnostic("error", "UnknownVariable", f"{where}: unknown variable {name!r}", line))
    return [names[n] for n in refs if n in names]


def _check_binding(b, instance, where, line, out):
    try:
        sim = instance.simulation(b.simulation)
    except KeyError:
        out.append(Diagnostic("error", "UnresolvedBinding", f"{where}: unknown simulation {b.simulation!r}", line))
        return
    if b.source in ("output", "flag"):
        if b.output is None or not 0 <= b.output < sim.outputs:
            out.append(
                Diagnostic(
                    "error",
                    "UnresolvedBinding",
                    f"{where}: output {b.output} out of range for {sim.id!r} with {sim.outputs} output(s)",
                    line,
                )
            )
    if b.source == "exitcode" and b.code == 0:
        out.append(Diagnostic("error", "UnresolvedBinding", f"{where}: exit code 0 means success", line))
    if b.model is not None:
        _check_expr(b.model, instance, where, line, out)


def validate(instance: ProblemInstance) -> list:
    """Return every error and warning found in ``instance``.

    An empty list means the instance is well formed.
    """
    out = []
    if not instance.variables:
        out.append(Diagnostic("error", "NoVariables", "problem declares no variables"))
    if instance.objective is None:
        out.append(Diagnostic("error", "MissingObjective", "problem has no objective"))

    _dupes([(v.name, v.line) for v in instance.variables], "variable", out)
    _dupes([(c.name, c.line) for c in instance.constraints], "constraint", out)
    _dupes([(s.id, s.line) for s in instance.simulations], "simulation", out)

    for v in instance.variables:
        if v.kind is VarKind.CATEGORICAL and not v.labels:
            out.append(Diagnostic("error", "EmptyCategories", f"variable {v.name!r} has no labels", v.line))
        if v.lower > v.upper:
            out.append(Diagnostic("error", "BadBounds", f"variable {v.name!r}: lower bound exceeds upper", v.line))

    for s in instance.simulations:
        if not s.timeout > 0:
            out.append(Diagnostic("error", "BadSimulation", f"simulation {s.id!r}: timeout must be positive", s.line))
        if s.outputs < 0:
            out.append(Diagnostic("error", "BadSimulation", f"simulation {s.id!r}: negative output count", s.line))

    obj = instance.objective
    if isinstance(obj, SimBinding):
        _check_binding(obj, instance, "objective", None, out)
    elif obj is not None:
        for v in _check_expr(obj, instance, "objective", None, out):
            if v.kind is VarKind.CATEGORICAL:
                out.append(Diagnostic("error", "CategoricalArithmetic", f"objective uses categorical {v.name!r}"))

    for c in instance.constraints:
        cls, line, where = c.cls, c.line, f"constraint {c.name!r}"
        if cls.k is Knowledge.HIDDEN:
            out.append(
                Diagnostic(
                    "error",
                    "DeclaredHidden",
                    f"{where}: hidden (NUSH) constraints cannot be declared; they surface only as simulation failures",
                    line,
                )
            )
            continue
        sim_body = isinstance(c.body, SimBinding)
        if (cls.a is Availability.APRIORI) == sim_body:
            got = "a simulation output" if sim_body else "an algebraic expression"
            out.append(
                Diagnostic("error", "AvailabilityMismatch", f"{where}: class {cls.code} but body is {got}", line)
            )
        if sim_body:
            _check_binding(c.body, instance, where, line, out)
            if c.body.source in ("flag", "exitcode") and cls.quantifiable:
                out.append(
                    Diagnostic(
                        "error",
                        "NotQuantifiable",
                        f"{where}: {c.body.source} bindings carry no measure but class is {cls.code}",
                        line,
                    )
                )
        else:
            used = _check_expr(c.body, instance, where, line, out)
            cats = [v for v in used if v.kind is VarKind.CATEGORICAL]
            if c.labels:
                if cls.quantifiable:
                    out.append(
                        Diagnostic("error", "NotQuantifiable", f"{where}: label sets cannot be quantified", line)
                    )
                if not (len(cats) == 1 and isinstance(c.body, Var)):
                    out.append(
                        Diagnostic("error", "CategoricalArithmetic", f"{where}: label set needs a single categorical variable", line)
                    )
                else:
                    unknown = [m for m in c.members if m not in cats[0].labels]
                    if unknown:
                        out.append(
                            Diagnostic("error", "UnknownLabel", f"{where}: labels {unknown} not in {cats[0].name!r}", line)
                        )
            elif cats:
                out.append(Diagnostic("error", "CategoricalArithmetic", f"{where}: arithmetic on categorical {cats[0].name!r}", line))

        if c.interval is not None and c.interval[0] > c.interval[1]:
            out.append(Diagnostic("error", "BadBounds", f"{where}: empty interval", line))

        if cls.relaxable:
            if c.tolerance is None:
                out.append(
                    Diagnostic("error", "MissingTolerance", f"{where}: relaxable constraints need an explicit 'tol'", line)
                )
            elif not cls.quantifiable and c.tolerance > 0:
                out.append(
                    Diagnostic(
                        "warning",
                        "NonquantifiableTolerance",
                        f"{where}: tolerance {c.tolerance} is meaningless without a measure",
                        line,
                    )
                )
        elif c.tolerance is not None and c.tolerance > 0:
            out.append(Diagnostic("warning", "ToleranceIgnored", f"{where}: unrelaxable constraints ignore 'tol'", line))

        if c.kind is ConstraintKind.EQUALITY and not cls.quantifiable and cls.a is Availability.SIMULATION:
            out.append(
                Diagnostic(
                    "warning",
                    "EqualityNonquantifiable",
                    f"{where}: an equality with class {cls.code} can only be hit by chance and is very hard to treat",
                    line,
                )
            )
        if c.tolerance is not None and math.isnan(c.tolerance):
            out.append(Diagnostic("error", "Syntax", f"{where}: NaN tolerance", line))
    return out
