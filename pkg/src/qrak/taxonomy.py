"""QRAK constraint classes.

A class is a 4-tuple over binary axes (quantifiability, relaxability,
availability, knowledge). Only nine of the sixteen combinations are
legal: every hidden constraint is necessarily ``NUSH``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

__all__ = [
    "Quantifiability",
    "Relaxability",
    "Availability",
    "Knowledge",
    "QuantifiableDetail",
    "ConstraintClass",
    "ClassPattern",
    "InvalidHiddenCombination",
    "ClassCodeSyntaxError",
    "make_class",
    "parse_class_code",
    "format_class",
    "matches",
    "leaf_index",
    "enumerate_classes",
]


class InvalidHiddenCombination(ValueError):
    """A hidden class was requested with something other than N, U, S."""


class ClassCodeSyntaxError(ValueError):
    """A class code contains a bad letter or a letter in the wrong slot."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class Quantifiability(enum.Enum):
    QUANTIFIABLE = "Q"
    NONQUANTIFIABLE = "N"


class Relaxability(enum.Enum):
    RELAXABLE = "R"
    UNRELAXABLE = "U"


class Availability(enum.Enum):
    APRIORI = "A"
    SIMULATION = "S"


class Knowledge(enum.Enum):
    KNOWN = "K"
    HIDDEN = "H"


class QuantifiableDetail(enum.Enum):
    """Which side of a quantifiable constraint carries a measure."""

    FEASIBILITY_ONLY = "feas"
    VIOLATION_ONLY = "viol"
    FULLY = "full"


_AXES = (Quantifiability, Relaxability, Availability, Knowledge)
_LETTERS = tuple({m.value: m for m in axis} for axis in _AXES)

Q, N = Quantifiability.QUANTIFIABLE, Quantifiability.NONQUANTIFIABLE
R, U = Relaxability.RELAXABLE, Relaxability.UNRELAXABLE
A, S = Availability.APRIORI, Availability.SIMULATION
K, H = Knowledge.KNOWN, Knowledge.HIDDEN


def _check_axes(q, r, a, k):
    for value, axis in zip((q, r, a, k), _AXES):
        if not isinstance(value, axis):
            raise TypeError(f"expected {axis.__name__}, got {value!r}")
    if k is H and (q, r, a) != (N, U, S):
        raise InvalidHiddenCombination(
            f"hidden constraints are always NUSH; got "
            f"{q.value}{r.value}{a.value}H"
        )


@dataclass(frozen=True)
class ConstraintClass:
    """One leaf of the taxonomy.

    ``detail`` refines quantifiable classes only and defaults to
    :attr:`QuantifiableDetail.FULLY`.
    """

    q: Quantifiability
    r: Relaxability
    a: Availability
    k: Knowledge
    detail: Optional[QuantifiableDetail] = field(default=None)

    def __post_init__(self):
        _check_axes(self.q, self.r, self.a, self.k)
        if self.q is Q:
            if self.detail is None:
                object.__setattr__(self, "detail", QuantifiableDetail.FULLY)
        elif self.detail is not None:
            raise ValueError("detail is only meaningful for quantifiable classes")

    @property
    def code(self) -> str:
        return "".join(v.value for v in (self.q, self.r, self.a, self.k))

    @property
    def quantifiable(self) -> bool:
        return self.q is Q

    @property
    def relaxable(self) -> bool:
        return self.r is R

    @property
    def apriori(self) -> bool:
        return self.a is A

    @property
    def hidden(self) -> bool:
        return self.k is H

    @property
    def leaf(self) -> int:
        return leaf_index(self)

    def with_detail(self, detail: Optional[QuantifiableDetail]) -> "ConstraintClass":
        return ConstraintClass(self.q, self.r, self.a, self.k, detail)

    def __str__(self):
        return self.code

    def __repr__(self):
        if self.detail not in (None, QuantifiableDetail.FULLY):
            return f"ConstraintClass({self.code}, {self.detail.value})"
        return f"ConstraintClass({self.code})"


@dataclass(frozen=True)
class ClassPattern:
    """Four slots, each an axis value or ``None`` for the wildcard."""

    q: Optional[Quantifiability] = None
    r: Optional[Relaxability] = None
    a: Optional[Availability] = None
    k: Optional[Knowledge] = None

    def __post_init__(self):
        if self.k is H:
            for slot, forced in zip((self.q, self.r, self.a), (N, U, S)):
                if slot is not None and slot is not forced:
                    raise InvalidHiddenCombination(
                        f"pattern {self.code} forces H but fixes {slot.value}"
                    )
            # H forces the other three slots
            object.__setattr__(self, "q", N)
            object.__setattr__(self, "r", U)
            object.__setattr__(self, "a", S)

    @property
    def slots(self):
        return (self.q, self.r, self.a, self.k)

    @property
    def code(self) -> str:
        return "".join("*" if s is None else s.value for s in self.slots)

    @property
    def exact(self) -> bool:
        return None not in self.slots

    def notes(self) -> list:
        """Warnings about ambiguous wildcard use."""
        if self.k is None:
            return [
                f"pattern {self.code}: wildcard in the knowledge slot matches "
                "known classes and the single hidden leaf NUSH"
            ]
        return []

    def classes(self) -> list:
        return [c for c in enumerate_classes() if matches(self, c)]

    def __contains__(self, cls):
        return matches(self, cls)

    def __iter__(self) -> Iterator[ConstraintClass]:
        return iter(self.classes())

    def __str__(self):
        return self.code


def make_class(q, r, a, k, detail=None) -> ConstraintClass:
    """Build a class from four axis values (enum members or letters)."""
    values = []
    for v, letters in zip((q, r, a, k), _LETTERS):
        if isinstance(v, str):
            try:
                v = letters[v.upper()]
            except KeyError:
                raise ClassCodeSyntaxError(f"bad axis letter {v!r}") from None
        values.append(v)
    return ConstraintClass(*values, detail=detail)


def parse_class_code(text: str) -> Union[ConstraintClass, ClassPattern]:
    """Parse ``"QRAK"``, ``"Q*AK"``, or the shorthands ``"S"`` and ``"H"``.

    Exact codes give a :class:`ConstraintClass`, anything with a wildcard
    gives a :class:`ClassPattern`. Input is case-insensitive.
    """
    if not isinstance(text, str):
        raise TypeError("class code must be a string")
    code = text.strip().upper()
    if code == "S":
        return ClassPattern(a=S)
    if code == "H":
        return ConstraintClass(N, U, S, H)
    if len(code) != 4:
        raise ClassCodeSyntaxError(
            f"class code must have 4 letters, got {text!r}", position=None
        )
    slots = []
    for i, (ch, letters) in enumerate(zip(code, _LETTERS)):
        if ch == "*":
            slots.append(None)
        elif ch in letters:
            slots.append(letters[ch])
        else:
            allowed = "/".join(letters)
            raise ClassCodeSyntaxError(
                f"bad letter {ch!r} at position {i + 1} of {text!r}; "
                f"expected {allowed} or *",
                position=i + 1,
            )
    if None in slots:
        return ClassPattern(*slots)
    return ConstraintClass(*slots)


def format_class(cls: ConstraintClass) -> str:
    return cls.code


def matches(pattern, cls: ConstraintClass) -> bool:
    """True iff every fixed slot of ``pattern`` equals the class's axis."""
    if isinstance(pattern, str):
        pattern = parse_class_code(pattern)
    if isinstance(pattern, ConstraintClass):
        return pattern.code == cls.code
    return all(
        p is None or p is v
        for p, v in zip(pattern.slots, (cls.q, cls.r, cls.a, cls.k))
    )


# Leaf order of the taxonomy tree, easiest first.
_LEAF_CODES = ("QRAK", "NRAK", "QUAK", "NUAK", "QRSK", "NRSK", "QUSK", "NUSK", "NUSH")
_LEAF_OF = {code: i + 1 for i, code in enumerate(_LEAF_CODES)}


def leaf_index(cls: ConstraintClass) -> int:
    return _LEAF_OF[cls.code]


def enumerate_classes() -> list:
    return [parse_class_code(code) for code in _LEAF_CODES]
