"""Problem-instance data model.

An instance is a finite list of equality, inequality and set-membership
constraints over ``n`` decision variables, each constraint tagged with its
QRAK class, plus an objective that may come from a simulation output.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ..taxonomy import ConstraintClass
from .expr import Expr

__all__ = [
    "VarKind",
    "Variable",
    "ConstraintKind",
    "SimBinding",
    "SimulationSpec",
    "Constraint",
    "ProblemInstance",
    "Diagnostic",
]


class VarKind(enum.Enum):
    REAL = "real"
    INTEGER = "int"
    BINARY = "bin"
    CATEGORICAL = "cat"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind = VarKind.REAL
    lower: float = -math.inf
    upper: float = math.inf
    labels: tuple = ()
    line: Optional[int] = field(default=None, compare=False, repr=False)

    @property
    def discrete(self) -> bool:
        return self.kind is not VarKind.REAL

    @property
    def domain(self) -> tuple:
        """Numeric box used by the solver (categoricals are ordinal)."""
        if self.kind is VarKind.BINARY:
            return 0.0, 1.0
        if self.kind is VarKind.CATEGORICAL:
            return 0.0, float(max(len(self.labels) - 1, 0))
        return self.lower, self.upper

    def decode(self, value):
        """Solver-side float to the value seen by constraints/simulations."""
        if self.kind is VarKind.CATEGORICAL:
            return self.labels[int(round(value))]
        if self.kind is not VarKind.REAL:
            return float(round(value))
        return float(value)

    def encode(self, value) -> float:
        if self.kind is VarKind.CATEGORICAL:
            if isinstance(value, str):
                return float(self.labels.index(value))
        return float(value)


class ConstraintKind(enum.Enum):
    EQUALITY = "=="
    INEQUALITY = "<="
    MEMBERSHIP = "in"


@dataclass(frozen=True)
class SimBinding:
    """Ties a constraint or the objective to a simulation.

    ``source`` is ``"output"`` (numeric output ``output``), ``"flag"``
    (output compared with ``feasible_when``), ``"exitcode"`` (violated when
    the process exits with ``code``) or ``"elapsed"`` (wall-clock time
    against the simulation timeout). ``model`` is an optional algebraic
    description of the output supplied by the modeler.
    """

    simulation: str
    source: str = "output"
    output: Optional[int] = None
    feasible_when: Optional[float] = None
    code: Optional[int] = None
    model: Optional[Expr] = None


@dataclass(frozen=True)
class SimulationSpec:
    """How to run one black box.

    Exactly one of ``command`` (argv template) and ``function``
    (``"module:attr"`` or a registered name) is set. ``error_codes`` maps a
    documented exit code to the constraint it reports on.
    """

    id: str
    command: Optional[tuple] = None
    function: Optional[str] = None
    timeout: float = 60.0
    outputs: int = 1
    error_codes: tuple = ()
    line: Optional[int] = field(default=None, compare=False, repr=False)
    cwd: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def code_table(self) -> dict:
        return dict(self.error_codes)


@dataclass(frozen=True)
class Constraint:
    name: str
    cls: ConstraintClass
    kind: ConstraintKind
    body: Union[Expr, SimBinding]
    members: Optional[tuple] = None
    interval: Optional[tuple] = None
    tolerance: Optional[float] = None
    line: Optional[int] = field(default=None, compare=False, repr=False)

    @property
    def simulated(self) -> bool:
        return isinstance(self.body, SimBinding)

    @property
    def labels(self) -> bool:
        return bool(self.members) and isinstance(self.members[0], str)


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    variables: tuple
    objective: Union[Expr, SimBinding, None]
    constraints: tuple = ()
    simulations: tuple = ()
    base_dir: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list:
        return [v.name for v in self.variables]

    def variable(self, name) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def constraint(self, name) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def simulation(self, sim_id) -> SimulationSpec:
        for s in self.simulations:
            if s.id == sim_id:
                return s
        raise KeyError(sim_id)

    def index_sets(self) -> dict:
        """Constraint names grouped as equalities, inequalities, memberships."""
        out = {k: [] for k in ConstraintKind}
        for c in self.constraints:
            out[c.kind].append(c.name)
        return out

    def point(self, x) -> dict:
        """Map a solver vector to ``{name: value}`` with decoded categoricals."""
        if isinstance(x, dict):
            return dict(x)
        if len(x) != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {len(x)}")
        return {v.name: v.decode(xi) for v, xi in zip(self.variables, x)}

    def vector(self, point) -> tuple:
        if isinstance(point, dict):
            return tuple(v.encode(point[v.name]) for v in self.variables)
        return tuple(v.encode(p) for v, p in zip(self.variables, point))

    def used_simulations(self) -> list:
        """Simulation ids referenced by the objective or any constraint."""
        used = []
        if isinstance(self.objective, SimBinding):
            used.append(self.objective.simulation)
        for c in self.constraints:
            if isinstance(c.body, SimBinding):
                used.append(c.body.simulation)
        return [s.id for s in self.simulations if s.id in used]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    code: str
    message: str
    line: Optional[int] = None
    col: Optional[int] = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self):
        where = ""
        if self.line is not None:
            where = f"line {self.line}"
            if self.col is not None:
                where += f", col {self.col}"
            where += ": "
        return f"{where}{self.severity}: {self.code}: {self.message}"
