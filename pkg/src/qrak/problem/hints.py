"""Reformulation advice: move constraints toward easier taxonomy leaves."""

from __future__ import annotations

from dataclasses import dataclass

from ..taxonomy import Availability, ConstraintClass, Quantifiability
from .expr import referenced_variables
from .model import ConstraintKind, ProblemInstance, SimBinding

__all__ = ["Hint", "reformulation_hints"]


@dataclass(frozen=True)
class Hint:
    constraint: str
    current: ConstraintClass
    suggested: ConstraintClass
    label: str
    reason: str

    @property
    def from_leaf(self) -> int:
        return self.current.leaf

    @property
    def to_leaf(self) -> int:
        return self.suggested.leaf

    def __str__(self):
        return (
            f"{self.constraint}: {self.label} candidate, "
            f"leaf {self.from_leaf}→{self.to_leaf} ({self.reason})"
        )


def _numeric_output(c) -> bool:
    if isinstance(c.body, SimBinding):
        return c.body.source in ("output", "elapsed")
    return c.kind is not ConstraintKind.MEMBERSHIP or not c.labels


def reformulation_hints(instance: ProblemInstance) -> list:
    """Suggest reclassifications that lower a constraint's leaf index.

    Two rules fire: a nonquantifiable constraint backed by a numeric value
    could be quantifiable, and a simulation output whose declared model
    only involves the inputs could be checked a priori. Relaxing an
    unrelaxable constraint is never suggested.
    """
    hints = []
    for c in instance.constraints:
        cls = c.cls
        if cls.hidden:
            continue
        if cls.q is Quantifiability.NONQUANTIFIABLE and _numeric_output(c):
            better = ConstraintClass(Quantifiability.QUANTIFIABLE, cls.r, cls.a, cls.k)
            hints.append(
                Hint(c.name, cls, better, better.code, "a numeric value is available; expose it as a measure")
            )
        b = c.body
        if isinstance(b, SimBinding) and b.model is not None:
            inputs = set(instance.names)
            if set(referenced_variables(b.model)) <= inputs:
                better = ConstraintClass(cls.q, cls.r, Availability.APRIORI, cls.k)
                label = f"{better.q.value}*{better.a.value}{better.k.value}"
                hints.append(
                    Hint(c.name, cls, better, label, "the output is an algebraic function of the inputs")
                )
    return hints
