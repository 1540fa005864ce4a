"""Small algebraic expression language for a priori constraints.

Grammar (lowest to highest precedence)::

    relation := expr ("<=" | ">=" | "==" | "=") expr
              | expr "in" "{" item ("," item)* "}"
              | expr "in" "[" bound "," bound "]"
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := ("-" | "+") unary | power
    power    := atom (("^" | "**") unary)?
    atom     := NUMBER | NAME | NAME "[" expr "]" | NAME "(" args ")"
              | "sum" "(" NAME "=" INT ".." INT "," expr ")" | "(" expr ")"

``x[i]`` names the variable ``x<i>`` (so ``x[2]`` is ``x2``); inside a
``sum`` the index name may appear in subscripts and as a value. Ranges
are inclusive.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Indexed",
    "Neg",
    "BinOp",
    "Call",
    "Sum",
    "Relation",
    "ExprSyntaxError",
    "UnknownFunction",
    "UnknownVariable",
    "DomainError",
    "FUNCTIONS",
    "parse_expr",
    "parse_relation",
    "eval_expr",
    "render_expr",
    "referenced_variables",
    "resolve",
    "affine_form",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message, col=None, text=None):
        self.msg = message
        self.col = col
        self.text = text
        where = f" at col {col}" if col is not None else ""
        super().__init__(f"{message}{where}")


class UnknownFunction(ExprSyntaxError):
    pass


class UnknownVariable(ValueError):
    def __init__(self, name):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation (log of 0, 1/0, ...)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


# --- AST -----------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Indexed:
    prefix: str
    index: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Sum:
    index: str
    lo: int
    hi: int
    body: "Expr"


Expr = Union[Const, Var, Indexed, Neg, BinOp, Call, Sum]


@dataclass(frozen=True)
class Relation:
    """``lhs <op> rhs`` before normalization.

    ``op`` is one of ``<=``, ``>=``, ``==``, ``in-set``, ``in-interval``.
    For set membership ``rhs`` is a tuple of floats or label strings; for
    intervals a ``(lo, hi)`` pair.
    """

    op: str
    lhs: Expr
    rhs: object


FUNCTIONS = {"abs": (1, 1), "min": (1, None), "max": (1, None), "exp": (1, 1), "log": (1, 1)}


# --- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.(?!\.)\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|<=|>=|==|\.\.|[-+*/^()\[\],{}=])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos + 1, text)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.bound = []  # enclosing sum indices

    @property
    def tok(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ExprSyntaxError(f"{msg}, found {found}", tok.col, self.text)

    def accept(self, text):
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            return self.next()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            raise self.error(f"expected {text!r}")
        return t

    def at_end(self):
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input")

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            self.next()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.next()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.next()
            if tok.text == "sum" and self.tok.text == "(":
                return self.sum_()
            if self.accept("("):
                return self.call(tok)
            if self.accept("["):
                index = self.expr()
                self.expect("]")
                return Indexed(tok.text, index)
            return Var(tok.text)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, name or '('")

    def call(self, name_tok):
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownFunction(f"unknown function {name!r}", name_tok.col, self.text)
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ExprSyntaxError(
                f"{name}() takes {lo if hi == lo else f'at least {lo}'} argument(s)",
                name_tok.col,
                self.text,
            )
        return Call(name, tuple(args))

    def _int(self):
        neg = self.accept("-") is not None
        tok = self.tok
        if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
            raise self.error("expected an integer")
        self.next()
        return -int(tok.text) if neg else int(tok.text)

    def sum_(self):
        self.expect("(")
        tok = self.tok
        if tok.kind != "name":
            raise self.error("expected index name")
        self.next()
        self.expect("=")
        lo = self._int()
        self.expect("..")
        hi = self._int()
        self.expect(",")
        self.bound.append(tok.text)
        body = self.expr()
        self.bound.pop()
        self.expect(")")
        return Sum(tok.text, lo, hi, body)

    def bound_value(self):
        sign = -1.0 if self.accept("-") else 1.0
        tok = self.tok
        if tok.kind == "name" and tok.text.lower() in ("inf", "infinity"):
            self.next()
            return sign * math.inf
        if tok.kind == "num":
            self.next()
            return sign * float(tok.text)
        raise self.error("expected a number or inf")

    def set_item(self):
        tok = self.tok
        if tok.kind == "name":
            self.next()
            return tok.text
        return self.bound_value()

    def relation(self):
        lhs = self.expr()
        tok = self.tok
        if tok.kind == "op" and tok.text in ("<=", ">=", "==", "="):
            self.next()
            rhs = self.expr()
            return Relation("==" if tok.text == "=" else tok.text, lhs, rhs)
        if self.accept("in"):
            if self.accept("{"):
                items = [self.set_item()]
                while self.accept(","):
                    items.append(self.set_item())
                self.expect("}")
                kinds = {isinstance(v, str) for v in items}
                if len(kinds) > 1:
                    raise self.error("set mixes labels and numbers")
                return Relation("in-set", lhs, tuple(items))
            if self.accept("["):
                lo = self.bound_value()
                self.expect(",")
                hi = self.bound_value()
                self.expect("]")
                return Relation("in-interval", lhs, (lo, hi))
            raise self.error("expected '{' or '['")
        raise self.error("expected '<=', '>=', '==' or 'in'")


def parse_expr(text: str) -> Expr:
    """Parse an arithmetic expression.

    >>> parse_expr("x1 + 2")
    BinOp(op='+', left=Var(name='x1'), right=Const(value=2.0))
    """
    p = _Parser(text)
    node = p.expr()
    p.at_end()
    return node


def parse_relation(text: str) -> Relation:
    p = _Parser(text)
    rel = p.relation()
    p.at_end()
    return rel


# --- evaluation --------------------------------------------------------------


def _index_value(node, idx):
    v = eval_expr(node, {}, idx)
    if not float(v).is_integer():
        raise DomainError(f"non-integer subscript {v}", node)
    return int(v)


def _lookup(name, point, idx):
    if name in idx:
        return idx[name]
    try:
        v = point[name]
    except KeyError:
        raise UnknownVariable(name) from None
    if isinstance(v, str):
        raise DomainError(f"categorical variable {name!r} used in arithmetic")
    return float(v)


def eval_expr(node: Expr, point: Mapping[str, float], idx=None) -> float:
    """Evaluate ``node`` at ``point`` (a name -> value mapping).

    Raises :class:`DomainError` instead of returning NaN or inf.
    """
    idx = idx or {}
    t = type(node)
    if t is Const:
        return node.value
    if t is Var:
        return _lookup(node.name, point, idx)
    if t is Indexed:
        return _lookup(f"{node.prefix}{_index_value(node.index, idx)}", point, idx)
    if t is Neg:
        return -eval_expr(node.operand, point, idx)
    if t is BinOp:
        a = eval_expr(node.left, point, idx)
        b = eval_expr(node.right, point, idx)
        op = node.op
        if op == "+":
            out = a + b
        elif op == "-":
            out = a - b
        elif op == "*":
            out = a * b
        elif op == "/":
            if b == 0:
                raise DomainError("division by zero", node)
            out = a / b
        else:
            if a == 0 and b < 0:
                raise DomainError("zero raised to a negative power", node)
            if a < 0 and not float(b).is_integer():
                raise DomainError("negative base with fractional exponent", node)
            try:
                out = a**b
            except OverflowError:
                raise DomainError("overflow in power", node) from None
        if not math.isfinite(out):
            raise DomainError(f"non-finite result of {op!r}", node)
        return out
    if t is Call:
        args = [eval_expr(a, point, idx) for a in node.args]
        f = node.func
        if f == "abs":
            return abs(args[0])
        if f == "min":
            return min(args)
        if f == "max":
            return max(args)
        if f == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                raise DomainError("overflow in exp", node) from None
        if f == "log":
            if args[0] <= 0:
                raise DomainError(f"log of nonpositive value {args[0]}", node)
            return math.log(args[0])
        raise DomainError(f"unknown function {f!r}", node)
    if t is Sum:
        total = 0.0
        for i in range(node.lo, node.hi + 1):
            total += eval_expr(node.body, point, {**idx, node.index: float(i)})
        return total
    raise TypeError(f"not an expression node: {node!r}")


# --- rendering ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg) or (isinstance(node, Const) and math.copysign(1, node.value) < 0):
        return 3
    return 5


def _num(v):
    if float(v).is_integer() and abs(v) < 1e16 and math.copysign(1, v) > 0:
        return str(int(v))
    if v == 0:
        return "-0"
    return repr(float(v))


def render_expr(node: Expr) -> str:
    """Inverse of :func:`parse_expr` up to whitespace."""
    t = type(node)
    if t is Const:
        v = node.value
        return "-" + _num(-v) if math.copysign(1, v) < 0 and v != 0 else _num(v)
    if t is Var:
        return node.name
    if t is Indexed:
        return f"{node.prefix}[{render_expr(node.index)}]"
    if t is Neg:
        inner = render_expr(node.operand)
        if _prec(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if t is BinOp:
        p = _PREC[node.op]
        left, right = render_expr(node.left), render_expr(node.right)
        if node.op == "^":
            if _prec(node.left) <= p:
                left = f"({left})"
            if _prec(node.right) < 3:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    if t is Call:
        return f"{node.func}({', '.join(render_expr(a) for a in node.args)})"
    if t is Sum:
        return f"sum({node.index} = {node.lo}..{node.hi}, {render_expr(node.body)})"
    raise TypeError(f"not an expression node: {node!r}")


# --- static analysis ---------------------------------------------------------


def _walk_vars(node, idx, out):
    t = type(node)
    if t is Var:
        if node.name not in idx:
            out.append(node.name)
    elif t is Indexed:
        out.append(f"{node.prefix}{_index_value(node.index, idx)}")
    elif t is Neg:
        _walk_vars(node.operand, idx, out)
    elif t is BinOp:
        _walk_vars(node.left, idx, out)
        _walk_vars(node.right, idx, out)
    elif t is Call:
        for a in node.args:
            _walk_vars(a, idx, out)
    elif t is Sum:
        for i in range(node.lo, node.hi + 1):
            _walk_vars(node.body, {**idx, node.index: float(i)}, out)


def referenced_variables(node: Expr) -> list:
    """Variable names referenced by ``node``, in first-use order."""
    out = []
    _walk_vars(node, {}, out)
    return list(dict.fromkeys(out))


def resolve(node: Expr, names) -> None:
    """Raise :class:`UnknownVariable` for the first undeclared reference."""
    try:
        refs = referenced_variables(node)
    except UnknownVariable as exc:
        # a subscript mentioned a name that is not a sum index
        raise UnknownVariable(exc.name) from None
    for name in refs:
        if name not in names:
            raise UnknownVariable(name)


def affine_form(node: Expr, idx=None) -> Optional[tuple]:
    """Return ``(coeffs, const)`` if ``node`` is affine in its variables.

    ``coeffs`` maps variable name to coefficient. Returns ``None`` for
    anything nonlinear.
    """
    idx = idx or {}
    t = type(node)
    if t is Const:
        return {}, node.value
    if t is Var:
        if node.name in idx:
            return {}, idx[node.name]
        return {node.name: 1.0}, 0.0
    if t is Indexed:
        return {f"{node.prefix}{_index_value(node.index, idx)}": 1.0}, 0.0
    if t is Neg:
        inner = affine_form(node.operand, idx)
        if inner is None:
            return None
        return {k: -v for k, v in inner[0].items()}, -inner[1]
    if t is Sum:
        coeffs, const = {}, 0.0
        for i in range(node.lo, node.hi + 1):
            part = affine_form(node.body, {**idx, node.index: float(i)})
            if part is None:
                return None
            for k, v in part[0].items():
                coeffs[k] = coeffs.get(k, 0.0) + v
            const += part[1]
        return coeffs, const
    if t is BinOp:
        a = affine_form(node.left, idx)
        b = affine_form(node.right, idx)
        if a is None or b is None:
            return None
        if node.op in "+-":
            s = 1.0 if node.op == "+" else -1.0
            coeffs = dict(a[0])
            for k, v in b[0].items():
                coeffs[k] = coeffs.get(k, 0.0) + s * v
            return coeffs, a[1] + s * b[1]
        if node.op == "*":
            if not a[0]:
                a, b = b, a
            if b[0]:
                return None
            return {k: v * b[1] for k, v in a[0].items()}, a[1] * b[1]
        if node.op == "/":
            if b[0] or b[1] == 0:
                return None
            return {k: v / b[1] for k, v in a[0].items()}, a[1] / b[1]
        return None
    return None
