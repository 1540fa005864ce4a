"""Violation and feasibility measures for quantifiable constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from ..taxonomy import QuantifiableDetail
from .expr import eval_expr
from .model import Constraint, ConstraintKind

__all__ = [
    "EQUALITY_TOL",
    "NotQuantifiable",
    "ViolationInfo",
    "constraint_value",
    "violation_measure",
    "is_satisfied",
    "within_tolerance",
]

# |c(x)| at or below this counts as an equality being met exactly.
EQUALITY_TOL = 1e-9


class NotQuantifiable(ValueError):
    pass


@dataclass(frozen=True)
class ViolationInfo:
    """Feasibility verdict plus the measures the constraint exposes.

    ``violation`` and ``margin`` are ``None`` when the constraint's detail
    mode leaves that side unquantified.
    """

    feasible: bool
    violation: Optional[float]
    margin: Optional[float]


def constraint_value(constraint: Constraint, raw: Union[float, str, Mapping]):
    """Raw value of the constraint body: evaluate a priori bodies at a point."""
    if isinstance(raw, Mapping):
        if constraint.simulated:
            raise TypeError("simulation constraints need the simulation output")
        if constraint.labels:
            return raw[constraint.body.name]
        return eval_expr(constraint.body, raw)
    return raw


def _measures(constraint, v):
    kind = constraint.kind
    if kind is ConstraintKind.INEQUALITY:
        return max(0.0, v), max(0.0, -v)
    if kind is ConstraintKind.EQUALITY:
        viol = abs(v)
        return (0.0 if viol <= EQUALITY_TOL else viol), 0.0
    if constraint.interval is not None:
        lo, hi = constraint.interval
        if v < lo:
            return lo - v, 0.0
        if v > hi:
            return v - hi, 0.0
        return 0.0, min(v - lo, hi - v)
    return min(abs(v - a) for a in constraint.members), 0.0


def violation_measure(constraint: Constraint, raw) -> ViolationInfo:
    """Measure how far ``raw`` is from satisfying ``constraint``.

    ``raw`` is either the constraint's own value (expression result or
    simulation output) or, for a priori constraints, a point mapping.

    Inequalities are in ``c(x) <= 0`` form: violation ``max(0, c)``,
    margin ``max(0, -c)``. Equalities use ``|c|``; finite sets the distance
    to the nearest member; intervals the distance to the interval.
    """
    if not constraint.cls.quantifiable:
        raise NotQuantifiable(f"constraint {constraint.name!r} is {constraint.cls.code}")
    if constraint.labels:
        raise NotQuantifiable(f"constraint {constraint.name!r} compares labels")
    v = float(constraint_value(constraint, raw))
    if math.isnan(v):
        raise ValueError(f"NaN value for constraint {constraint.name!r}")
    violation, margin = _measures(constraint, v)
    feasible = violation == 0.0
    detail = constraint.cls.detail
    if detail is QuantifiableDetail.FEASIBILITY_ONLY and not feasible:
        violation = None
    elif detail is QuantifiableDetail.VIOLATION_ONLY and feasible:
        margin = None
    return ViolationInfo(feasible, violation, margin)


def is_satisfied(constraint: Constraint, raw) -> bool:
    """Boolean verdict for any constraint, including label sets."""
    v = constraint_value(constraint, raw)
    if constraint.labels:
        return v in constraint.members
    if isinstance(v, str):
        raise TypeError(f"label value for numeric constraint {constraint.name!r}")
    v = float(v)
    if math.isnan(v):
        return False
    return _measures(constraint, v)[0] == 0.0


def within_tolerance(constraint: Constraint, raw) -> bool:
    """Satisfaction as judged at a proposed solution.

    Relaxable quantifiable constraints may miss by their declared solution
    tolerance; everything else must be satisfied outright.
    """
    if constraint.cls.relaxable and constraint.cls.quantifiable and not constraint.labels:
        v = float(constraint_value(constraint, raw))
        if math.isnan(v):
            return False
        tol = constraint.tolerance or 0.0
        kind = constraint.kind
        if kind is ConstraintKind.INEQUALITY:
            return v <= tol
        if kind is ConstraintKind.EQUALITY:
            return abs(v) <= max(tol, EQUALITY_TOL)
        return _measures(constraint, v)[0] <= tol
    return is_satisfied(constraint, raw)
