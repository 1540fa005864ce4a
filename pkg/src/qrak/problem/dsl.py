"""Line-oriented problem description language.

::

    problem "<name>"
    var <name> real|int [in [<lo>, <hi>]]
    var <name> bin
    var <name> cat {a, b, ...}
    minimize expr "<expression>"
    minimize sim <simname> out <k>
    constraint <name> class <CODE> [detail full|feas|viol] [tol <t>] expr "<relation>"
    constraint <name> class <CODE> [detail ...] [tol <t>] sim <simname> out <k> "<= 0"|"== 0" [model "<expr>"]
    constraint <name> class <CODE> [tol <t>] sim <simname> out <k> flag feasible-when <0|1>
    constraint <name> class <CODE> sim <simname> exitcode <code>
    constraint <name> class <CODE> [detail ...] [tol <t>] sim <simname> elapsed
    simulation <simname> cmd "<argv...>" timeout <seconds> outputs <count>
    simulation <simname> func <module:attr> timeout <seconds> outputs <count>

``#`` starts a comment. ``>=`` relations are stored negated in ``<= 0``
form.
"""

from __future__ import annotations

import math
import os
import re
import shlex
from dataclasses import dataclass, replace
from pathlib import Path

from ..taxonomy import (
    ClassCodeSyntaxError,
    ClassPattern,
    InvalidHiddenCombination,
    QuantifiableDetail,
    parse_class_code,
)
from .expr import (
    BinOp,
    Const,
    ExprSyntaxError,
    Neg,
    UnknownFunction,
    Var,
    parse_expr,
    parse_relation,
    render_expr,
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

__all__ = ["ProblemParseError", "parse_problem", "parse_problem_file", "render_problem"]


class ProblemParseError(ValueError):
    """Raised with every diagnostic collected while reading a problem."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        errors = [d for d in self.diagnostics if d.is_error]
        head = str(errors[0]) if errors else "invalid problem"
        more = f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""
        super().__init__(head + more)


_LEX = re.compile(r'"(?:[^"\\]|\\.)*"|[\[\]{},]|#.*|[^\s\[\]{},"#]+')


@dataclass
class _Tok:
    text: str
    col: int

    @property
    def quoted(self):
        return self.text.startswith('"')

    @property
    def value(self):
        if self.quoted:
            return self.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        return self.text


class _LineError(Exception):
    def __init__(self, code, message, col=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.col = col


def _lex(line):
    toks = []
    pos = 0
    while True:
        while pos < len(line) and line[pos].isspace():
            pos += 1
        if pos >= len(line):
            break
        m = _LEX.match(line, pos)
        if m is None:
            raise _LineError("Syntax", "unterminated string", pos + 1)
        if m.group().startswith("#"):
            break
        toks.append(_Tok(m.group(), pos + 1))
        pos = m.end()
    return toks


class _Cursor:
    def __init__(self, toks, line_len):
        self.toks = toks
        self.i = 0
        self.end_col = line_len + 1

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def col(self):
        t = self.peek()
        return t.col if t else self.end_col

    def next(self, what):
        t = self.peek()
        if t is None:
            raise _LineError("Syntax", f"expected {what}, found end of line", self.end_col)
        self.i += 1
        return t

    def word(self, what, choices=None):
        t = self.next(what)
        if t.quoted or (choices and t.text not in choices):
            raise _LineError("Syntax", f"expected {what}, found {t.text!r}", t.col)
        return t

    def string(self, what):
        t = self.next(what)
        if not t.quoted:
            raise _LineError("Syntax", f"expected quoted {what}, found {t.text!r}", t.col)
        return t

    def number(self, what):
        t = self.next(what)
        try:
            return float(t.value), t
        except ValueError:
            raise _LineError("Syntax", f"expected {what}, found {t.text!r}", t.col) from None

    def integer(self, what):
        t = self.next(what)
        if not re.fullmatch(r"-?\d+", t.text):
            raise _LineError("Syntax", f"expected integer {what}, found {t.text!r}", t.col)
        return int(t.text), t

    def accept(self, text):
        t = self.peek()
        if t is not None and not t.quoted and t.text == text:
            self.i += 1
            return t
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            found = self.peek().text if self.peek() else "end of line"
            raise _LineError("Syntax", f"expected {text!r}, found {found!r}", self.col())
        return t

    def done(self):
        t = self.peek()
        if t is not None:
            raise _LineError("Syntax", f"unexpected {t.text!r}", t.col)


def _expr_error(exc, tok):
    # columns inside the quoted string map back onto the line
    col = tok.col + exc.col if exc.col is not None else tok.col
    code = "UnknownFunction" if isinstance(exc, UnknownFunction) else "Syntax"
    return _LineError(code, exc.msg, col)


def _parse_interval(cur):
    cur.expect("[")
    lo, _ = cur.number("lower bound")
    cur.expect(",")
    hi, _ = cur.number("upper bound")
    cur.expect("]")
    return lo, hi


def _parse_var(cur, lineno):
    name = cur.word("variable name").text
    kind_tok = cur.word("variable kind", ("real", "int", "bin", "cat"))
    kind = VarKind(kind_tok.text)
    if kind is VarKind.CATEGORICAL:
        cur.expect("{")
        labels = [cur.word("label").text]
        while cur.accept(","):
            labels.append(cur.word("label").text)
        cur.expect("}")
        cur.done()
        return Variable(name, kind, labels=tuple(labels), line=lineno)
    if kind is VarKind.BINARY:
        cur.done()
        return Variable(name, kind, 0.0, 1.0, line=lineno)
    lo, hi = -math.inf, math.inf
    if cur.accept("in"):
        lo, hi = _parse_interval(cur)
    cur.done()
    return Variable(name, kind, lo, hi, line=lineno)


def _parse_sim_ref(cur, objective=False):
    sim = cur.word("simulation name").text
    if objective:
        cur.expect("out")
        k, _ = cur.integer("output index")
        return SimBinding(sim, "output", output=k), None, None
    t = cur.word("'out', 'exitcode' or 'elapsed'", ("out", "exitcode", "elapsed"))
    if t.text == "exitcode":
        code, _ = cur.integer("exit code")
        return SimBinding(sim, "exitcode", code=code), ConstraintKind.INEQUALITY, None
    if t.text == "elapsed":
        return SimBinding(sim, "elapsed"), ConstraintKind.INEQUALITY, None
    k, _ = cur.integer("output index")
    if cur.accept("flag"):
        cur.expect("feasible-when")
        val, vt = cur.number("flag value")
        if val not in (0.0, 1.0):
            raise _LineError("Syntax", "flag value must be 0 or 1", vt.col)
        return SimBinding(sim, "flag", output=k, feasible_when=val), ConstraintKind.MEMBERSHIP, (val,)
    sense = cur.string('"<= 0" or "== 0"')
    compact = sense.value.replace(" ", "")
    if compact not in ("<=0", "==0"):
        raise _LineError("Syntax", f'expected "<= 0" or "== 0", found {sense.text}', sense.col)
    kind = ConstraintKind.INEQUALITY if compact == "<=0" else ConstraintKind.EQUALITY
    model = None
    if cur.accept("model"):
        mt = cur.string("model expression")
        try:
            model = parse_expr(mt.value)
        except ExprSyntaxError as exc:
            raise _expr_error(exc, mt) from None
    return SimBinding(sim, "output", output=k, model=model), kind, None


def _is_zero(node):
    return isinstance(node, Const) and node.value == 0


def _normalize(rel, categorical):
    """Bring a parsed relation into ``c(x) <= 0`` / ``== 0`` / ``in`` form."""
    lhs, rhs = rel.lhs, rel.rhs
    if rel.op in ("in-set", "in-interval"):
        if rel.op == "in-set":
            return ConstraintKind.MEMBERSHIP, lhs, tuple(rhs), None
        return ConstraintKind.MEMBERSHIP, lhs, None, tuple(rhs)
    if (
        rel.op == "=="
        and isinstance(lhs, Var)
        and lhs.name in categorical
        and isinstance(rhs, Var)
    ):
        return ConstraintKind.MEMBERSHIP, lhs, (rhs.name,), None
    if rel.op == ">=":
        lhs, rhs = rhs, lhs
    kind = ConstraintKind.EQUALITY if rel.op == "==" else ConstraintKind.INEQUALITY
    if _is_zero(rhs):
        body = lhs
    elif _is_zero(lhs):
        body = Const(-rhs.value) if isinstance(rhs, Const) else Neg(rhs)
    else:
        body = BinOp("-", lhs, rhs)
    return kind, body, None, None


def _parse_constraint(cur, lineno, categorical):
    name = cur.word("constraint name").text
    cur.expect("class")
    ct = cur.word("class code")
    try:
        cls = parse_class_code(ct.text)
    except (ClassCodeSyntaxError, InvalidHiddenCombination) as exc:
        raise _LineError("InvalidClass", str(exc), ct.col) from None
    if isinstance(cls, ClassPattern):
        if not cls.exact:
            raise _LineError("InvalidClass", f"constraint class must be exact, got {ct.text}", ct.col)
        cls = cls.classes()[0]
    detail = None
    tol = None
    while True:
        if cur.accept("detail"):
            dt = cur.word("detail mode", ("full", "feas", "viol"))
            detail = QuantifiableDetail(dt.text)
            if not cls.quantifiable:
                raise _LineError(
                    "DetailOnNonquantifiable",
                    f"detail given for nonquantifiable class {cls.code}",
                    dt.col,
                )
        elif cur.accept("tol"):
            tol, tt = cur.number("tolerance")
            if tol < 0 or math.isnan(tol):
                raise _LineError("Syntax", "tolerance must be nonnegative", tt.col)
        else:
            break
    if detail is not None:
        cls = cls.with_detail(detail)
    body_tok = cur.word("'expr' or 'sim'", ("expr", "sim"))
    members = interval = None
    if body_tok.text == "expr":
        st = cur.string("relation")
        try:
            rel = parse_relation(st.value)
        except ExprSyntaxError as exc:
            raise _expr_error(exc, st) from None
        kind, body, members, interval = _normalize(rel, categorical)
    else:
        body, kind, members = _parse_sim_ref(cur)
    cur.done()
    return Constraint(name, cls, kind, body, members, interval, tol, line=lineno)


def _parse_simulation(cur, lineno):
    name = cur.word("simulation name").text
    how = cur.word("'cmd' or 'func'", ("cmd", "func"))
    command = function = None
    if how.text == "cmd":
        st = cur.string("command")
        try:
            command = tuple(shlex.split(st.value))
        except ValueError as exc:
            raise _LineError("Syntax", f"bad command: {exc}", st.col) from None
        if not command:
            raise _LineError("Syntax", "empty command", st.col)
    else:
        function = cur.next("function reference").value
    timeout, arity = 60.0, 1
    while cur.peek() is not None:
        key = cur.word("'timeout' or 'outputs'", ("timeout", "outputs"))
        if key.text == "timeout":
            timeout, _ = cur.number("timeout")
        else:
            arity, _ = cur.integer("output count")
    return SimulationSpec(name, command, function, timeout, arity, line=lineno)


def parse_problem(text: str, base_dir=None, validate: bool = True) -> ProblemInstance:
    """Parse a problem description.

    Raises :class:`ProblemParseError` listing every syntax and validation
    error (warnings alone do not raise; see :func:`qrak.problem.validate`).
    """
    from .validation import validate as _validate

    diags = []
    statements = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            toks = _lex(line)
        except _LineError as exc:
            diags.append(Diagnostic("error", exc.code, exc.message, lineno, exc.col))
            continue
        if toks:
            statements.append((lineno, line, toks))

    name = None
    variables, raw_constraints, simulations = [], [], []
    objective = None
    categorical = set()
    # variables first so constraints can see categorical names
    ordered = sorted(statements, key=lambda s: s[2][0].text != "var")
    for lineno, line, toks in ordered:
        cur = _Cursor(toks, len(line))
        head = toks[0]
        cur.i = 1
        try:
            if head.text == "problem":
                name = cur.string("problem name").value
                cur.done()
            elif head.text == "var":
                var = _parse_var(cur, lineno)
                variables.append(var)
                if var.kind is VarKind.CATEGORICAL:
                    categorical.add(var.name)
            elif head.text == "minimize":
                if objective is not None:
                    raise _LineError("Syntax", "objective declared twice", head.col)
                how = cur.word("'expr' or 'sim'", ("expr", "sim"))
                if how.text == "expr":
                    st = cur.string("expression")
                    try:
                        objective = parse_expr(st.value)
                    except ExprSyntaxError as exc:
                        raise _expr_error(exc, st) from None
                else:
                    objective = _parse_sim_ref(cur, objective=True)[0]
                cur.done()
            elif head.text == "constraint":
                raw_constraints.append(_parse_constraint(cur, lineno, categorical))
            elif head.text == "simulation":
                simulations.append(_parse_simulation(cur, lineno))
            else:
                raise _LineError("Syntax", f"unknown statement {head.text!r}", head.col)
        except _LineError as exc:
            diags.append(Diagnostic("error", exc.code, exc.message, lineno, exc.col))

    # the documented exit-code table lives on the simulation
    codes = {}
    for c in raw_constraints:
        if isinstance(c.body, SimBinding) and c.body.source == "exitcode":
            codes.setdefault(c.body.simulation, []).append((c.body.code, c.name))
    simulations = [replace(s, error_codes=tuple(codes.get(s.id, ()))) for s in simulations]
    if base_dir is not None:
        base_dir = os.fspath(base_dir)
        simulations = [replace(s, cwd=base_dir) for s in simulations]

    instance = ProblemInstance(
        name=name or "",
        variables=tuple(variables),
        objective=objective,
        constraints=tuple(raw_constraints),
        simulations=tuple(simulations),
        base_dir=base_dir,
    )
    if validate:
        diags.extend(_validate(instance))
    if any(d.is_error for d in diags):
        raise ProblemParseError(sorted(diags, key=lambda d: (d.line or 0, d.col or 0)))
    return instance


def parse_problem_file(path, validate: bool = True) -> ProblemInstance:
    path = Path(path)
    return parse_problem(path.read_text(), base_dir=path.resolve().parent, validate=validate)


# --- rendering ---------------------------------------------------------------


def _fmt(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _quote(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_relation(c):
    body = render_expr(c.body)
    if c.kind is ConstraintKind.MEMBERSHIP:
        if c.interval is not None:
            return f"{body} in [{_fmt(c.interval[0])}, {_fmt(c.interval[1])}]"
        items = ", ".join(m if isinstance(m, str) else _fmt(m) for m in c.members)
        return f"{body} in {{{items}}}"
    return f"{body} {c.kind.value} 0"


def _render_binding(b, objective=False):
    if b.source == "exitcode":
        return f"sim {b.simulation} exitcode {b.code}"
    if b.source == "elapsed":
        return f"sim {b.simulation} elapsed"
    head = f"sim {b.simulation} out {b.output}"
    if objective:
        return head
    if b.source == "flag":
        return f"{head} flag feasible-when {_fmt(b.feasible_when)}"
    return head


def render_problem(instance: ProblemInstance) -> str:
    """Pretty-print an instance back into the problem language."""
    lines = [f"problem {_quote(instance.name)}"]
    for v in instance.variables:
        if v.kind is VarKind.CATEGORICAL:
            lines.append(f"var {v.name} cat {{{', '.join(v.labels)}}}")
        elif v.kind is VarKind.BINARY:
            lines.append(f"var {v.name} bin")
        elif math.isinf(v.lower) and math.isinf(v.upper) and v.lower < 0 < v.upper:
            lines.append(f"var {v.name} {v.kind.value}")
        else:
            lines.append(f"var {v.name} {v.kind.value} in [{_fmt(v.lower)}, {_fmt(v.upper)}]")
    obj = instance.objective
    if isinstance(obj, SimBinding):
        lines.append(f"minimize {_render_binding(obj, objective=True)}")
    elif obj is not None:
        lines.append(f"minimize expr {_quote(render_expr(obj))}")
    for c in instance.constraints:
        parts = [f"constraint {c.name} class {c.cls.code}"]
        if c.cls.detail not in (None, QuantifiableDetail.FULLY):
            parts.append(f"detail {c.cls.detail.value}")
        if c.tolerance is not None:
            parts.append(f"tol {_fmt(c.tolerance)}")
        if isinstance(c.body, SimBinding):
            parts.append(_render_binding(c.body))
            if c.body.source == "output":
                parts.append(_quote(f"{c.kind.value} 0"))
                if c.body.model is not None:
                    parts.append(f"model {_quote(render_expr(c.body.model))}")
        else:
            parts.append(f"expr {_quote(_render_relation(c))}")
        lines.append(" ".join(parts))
    for s in instance.simulations:
        if s.command is not None:
            how = f"cmd {_quote(shlex.join(s.command))}"
        else:
            how = f"func {s.function}"
        lines.append(f"simulation {s.id} {how} timeout {_fmt(s.timeout)} outputs {s.outputs}")
    return "\n".join(lines) + "\n"
