"""Parse and evaluate closed-form expressions of a single time variable.

The accepted language covers what coefficient, delay, forcing and history
functions need: numeric literals, the variable ``t``, the constant ``pi``,
the functions sin, cos, exp, ln, abs, floor, and the arithmetic operators
``+ - * / ^`` with the usual precedence (``^`` tightest, then unary minus,
then ``* /``, then ``+ -``).  ``^`` is right associative; everything else
associates left.  Note that ``-2^2`` therefore means ``-(2^2)``.

Three evaluation paths share the same AST:

* :func:`evaluate` walks the tree for one scalar ``t`` and raises
  :class:`ExprDomainError` pointing at the offending subtree,
* :func:`sample` evaluates over a numpy array of times at once,
* :func:`compile_program` flattens the tree to a postfix instruction
  array that the integration kernels can run without touching Python.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "TimeVar",
    "PiConst",
    "Unary",
    "Binary",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "ExprDomainError",
    "parse",
    "to_source",
    "evaluate",
    "sample",
    "uses_trig",
    "Program",
    "compile_program",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class TimeVar:
    pass


@dataclass(frozen=True)
class PiConst:
    pass


UNARY_FUNCS = ("neg", "sin", "cos", "exp", "ln", "abs", "floor")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Num | TimeVar | PiConst | Unary | Binary


class ExprError(ValueError):
    """Base class for everything this module raises on bad input."""


class ExprSyntaxError(ExprError):
    """Unparseable text.  Carries the byte offset and the token kinds that
    would have been accepted at that position."""

    def __init__(self, text: str, offset: int, expected: tuple[str, ...], found: str):
        self.text = text
        self.offset = offset
        self.expected = tuple(expected)
        self.found = found
        super().__init__(
            f"at offset {offset}: found {found}, expected {' | '.join(self.expected)}"
        )


class UnknownIdentifier(ExprSyntaxError):
    """A name that is neither ``t``, ``pi`` nor a known function."""

    def __init__(self, text: str, offset: int, name: str):
        self.name = name
        super().__init__(text, offset, ("t", "pi") + UNARY_FUNCS[1:], f"identifier {name!r}")


class ExprDomainError(ExprError):
    """Evaluation hit a singularity (division by zero, log of a
    non-positive number, fractional power of a negative base)."""

    def __init__(self, node: Expr, t: float, reason: str):
        self.node = node
        self.t = t
        self.reason = reason
        super().__init__(f"{reason} in {to_source(node)!r} at t = {t}")


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCS = ("sin", "cos", "exp", "ln", "abs", "floor")

_ATOM_EXPECTED = ("number", "t", "pi", "function", "(")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        n = len(text)
        while pos < n:
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                # skip whitespace-only tail before complaining
                rest = text[pos:].lstrip()
                if not rest:
                    break
                at = n - len(rest)
                raise ExprSyntaxError(text, at, _ATOM_EXPECTED, f"character {rest[0]!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", n))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: tuple[str, ...]):
        kind, val, off = self.peek()
        found = "end of input" if kind == "end" else f"{val!r}"
        raise ExprSyntaxError(self.text, off, expected, found)

    def expect_op(self, op: str, expected_desc: tuple[str, ...] | None = None):
        kind, val, _ = self.peek()
        if kind == "op" and val == op:
            self.advance()
            return
        self.fail(expected_desc or (f"'{op}'",))

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Binary(val, node, self.parse_term())
            else:
                return node

    # term := unary (('*'|'/') unary)*
    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Binary(val, node, self.parse_unary())
            else:
                return node

    # unary := '-' unary | power
    def parse_unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Unary("neg", self.parse_unary())
        return self.parse_power()

    # power := atom ('^' unary)?   (right associative, exponent may be signed)
    def parse_power(self) -> Expr:
        base = self.parse_atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return Binary("^", base, self.parse_unary())
        return base

    def parse_atom(self) -> Expr:
        kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            self.advance()
            if val == "t":
                return TimeVar()
            if val == "pi":
                return PiConst()
            if val in _FUNCS:
                self.expect_op("(", ("'(' after function name",))
                arg = self.parse_expr()
                self.expect_op(")", ("')'", "operator"))
                return Unary(val, arg)
            raise UnknownIdentifier(self.text, off, val)
        if kind == "op" and val == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect_op(")", ("')'", "operator"))
            return inner
        self.fail(_ATOM_EXPECTED)


def parse(text: str) -> Expr:
    """Parse ``text`` into an AST, or raise :class:`ExprSyntaxError`."""
    p = _Parser(text)
    node = p.parse_expr()
    if p.peek()[0] != "end":
        p.fail(("operator", "end of input"))
    return node


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    return 5


def to_source(e: Expr) -> str:
    """Render ``e`` as text that parses back to a structurally equal tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, TimeVar):
        return "t"
    if isinstance(e, PiConst):
        return "pi"
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_source(e.arg)
            if _prec(e.arg) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({to_source(e.arg)})"
    if isinstance(e, Binary):
        lhs, rhs = to_source(e.lhs), to_source(e.rhs)
        p = _PREC[e.op]
        if e.op == "^":
            # right associative: parenthesize an equal-precedence left child
            if _prec(e.lhs) <= p:
                lhs = f"({lhs})"
            # the exponent slot accepts unary and tighter
            if _prec(e.rhs) < _PREC["neg"]:
                rhs = f"({rhs})"
            return f"{lhs}^{rhs}"
        if _prec(e.lhs) < p:
            lhs = f"({lhs})"
        if _prec(e.rhs) <= p:
            rhs = f"({rhs})"
        return f"{lhs} {e.op} {rhs}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(e: Expr, t: float) -> float:
    """Evaluate at a single time.  Domain violations raise
    :class:`ExprDomainError` naming the innermost offending subtree, so a
    singular sub-expression is flagged even if the full expression would
    have come out finite."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, TimeVar):
        return float(t)
    if isinstance(e, PiConst):
        return math.pi
    if isinstance(e, Unary):
        v = evaluate(e.arg, t)
        if e.op == "neg":
            return -v
        if e.op == "sin":
            return math.sin(v)
        if e.op == "cos":
            return math.cos(v)
        if e.op == "exp":
            try:
                return math.exp(v)
            except OverflowError:
                return math.inf
        if e.op == "ln":
            if v <= 0.0:
                raise ExprDomainError(e, t, f"ln of non-positive value {v}")
            return math.log(v)
        if e.op == "abs":
            return abs(v)
        if e.op == "floor":
            return float(math.floor(v))
        raise TypeError(f"unknown unary op {e.op!r}")
    if isinstance(e, Binary):
        a = evaluate(e.lhs, t)
        b = evaluate(e.rhs, t)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise ExprDomainError(e, t, "division by zero")
            return a / b
        if e.op == "^":
            if a < 0.0 and b != math.floor(b):
                raise ExprDomainError(e, t, f"fractional power {b} of negative base {a}")
            if a == 0.0 and b < 0.0:
                raise ExprDomainError(e, t, "zero raised to a negative power")
            try:
                return a ** b
            except OverflowError:
                return math.inf
        raise TypeError(f"unknown binary op {e.op!r}")
    raise TypeError(f"not an expression node: {e!r}")


def _sample_raw(e: Expr, ts: np.ndarray) -> np.ndarray:
    if isinstance(e, Num):
        return np.full_like(ts, e.value)
    if isinstance(e, TimeVar):
        return ts.astype(float, copy=True)
    if isinstance(e, PiConst):
        return np.full_like(ts, math.pi)
    if isinstance(e, Unary):
        v = _sample_raw(e.arg, ts)
        if e.op == "neg":
            return -v
        if e.op == "ln":
            return np.log(v)
        if e.op == "abs":
            return np.abs(v)
        return getattr(np, e.op)(v)
    if isinstance(e, Binary):
        a = _sample_raw(e.lhs, ts)
        b = _sample_raw(e.rhs, ts)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        return np.power(a, b)
    raise TypeError(f"not an expression node: {e!r}")


def sample(e: Expr, ts: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over an array of times.

    A NaN in the result is traced back through :func:`evaluate` at the first
    bad time so the error names the offending subtree.  Infinities from pure
    overflow (for example exp of a huge argument) are returned as-is.
    """
    ts = np.asarray(ts, dtype=float)
    with np.errstate(all="ignore"):
        out = _sample_raw(e, ts)
    if not np.all(np.isfinite(out)):
        bad = np.flatnonzero(~np.isfinite(out))[0]
        evaluate(e, float(ts.flat[bad]))  # raises ExprDomainError unless mere overflow
    return out


def uses_trig(e: Expr) -> bool:
    """True if the tree contains a sin or cos node."""
    if isinstance(e, Unary):
        return e.op in ("sin", "cos") or uses_trig(e.arg)
    if isinstance(e, Binary):
        return uses_trig(e.lhs) or uses_trig(e.rhs)
    return False


# ---------------------------------------------------------------------------
# Postfix compilation for the integration kernels
# ---------------------------------------------------------------------------

# opcode table; arg is only meaningful for OP_CONST
OP_CONST = 0
OP_T = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_LN = 11
OP_ABS = 12
OP_FLOOR = 13

_UNARY_OPCODE = {
    "neg": OP_NEG,
    "sin": OP_SIN,
    "cos": OP_COS,
    "exp": OP_EXP,
    "ln": OP_LN,
    "abs": OP_ABS,
    "floor": OP_FLOOR,
}
_BINARY_OPCODE = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}


@dataclass(frozen=True)
class Program:
    """Postfix instruction stream for one expression.

    ``code[i]`` is an opcode, ``args[i]`` the literal pushed by OP_CONST
    (zero elsewhere).  ``stack_need`` is the exact operand-stack depth the
    stream requires.
    """

    code: np.ndarray
    args: np.ndarray
    stack_need: int


def compile_program(e: Expr) -> Program:
    code: list[int] = []
    args: list[float] = []

    def emit(node: Expr):
        if isinstance(node, Num):
            code.append(OP_CONST)
            args.append(node.value)
        elif isinstance(node, PiConst):
            code.append(OP_CONST)
            args.append(math.pi)
        elif isinstance(node, TimeVar):
            code.append(OP_T)
            args.append(0.0)
        elif isinstance(node, Unary):
            emit(node.arg)
            code.append(_UNARY_OPCODE[node.op])
            args.append(0.0)
        elif isinstance(node, Binary):
            emit(node.lhs)
            emit(node.rhs)
            code.append(_BINARY_OPCODE[node.op])
            args.append(0.0)
        else:
            raise TypeError(f"not an expression node: {node!r}")

    emit(e)

    depth = 0
    peak = 0
    for op in code:
        if op in (OP_CONST, OP_T):
            depth += 1
        elif op in (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW):
            depth -= 1
        peak = max(peak, depth)
    assert depth == 1, "postfix stream must leave exactly one value"

    return Program(
        code=np.asarray(code, dtype=np.int64),
        args=np.asarray(args, dtype=np.float64),
        stack_need=peak,
    )
