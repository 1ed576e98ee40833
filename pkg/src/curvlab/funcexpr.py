"""Arithmetic expressions in the single variable r, evaluated as 2nd-order jets.

The grammar is fixed and closed:

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?            # right associative
    atom   := NUMBER | 'r' | 'pi' | 'e'
            | FN '(' expr (',' expr)* ')'
            | '(' expr ')'

'^' binds tightest, unary minus sits above '*' and '/', and '+'/'-'
are lowest.  Every expression evaluates to a Jet2 carrying the value
and the first two derivatives with respect to r, propagated by exact
product/quotient/chain rules (no numerical differentiation).

Domain violations (log of a nonpositive number, coth at its pole,
fractional powers of nonpositive bases) raise DomainError; any
non-finite intermediate raises NonFiniteError.  Evaluation never
returns inf or nan silently.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

__all__ = [
    "ExpressionError",
    "ParseError",
    "DomainError",
    "NonFiniteError",
    "Jet2",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "to_source",
    "eval_jet2",
    "FUNCTIONS",
    "CONSTANTS",
]


class ExpressionError(Exception):
    """Base class for all expression-language failures."""


class ParseError(ExpressionError):
    """Syntax error with the byte offset and the tokens that would fix it."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"{message} at offset {offset}"
        if expected:
            detail += ", expected " + " or ".join(sorted(self.expected))
        super().__init__(detail)


class DomainError(ExpressionError):
    """Evaluation left the real domain of some sub-expression."""

    def __init__(self, message: str, node=None):
        self.node = node
        if node is not None:
            message = f"{message} in '{to_source(node)}'"
        super().__init__(message)


class NonFiniteError(ExpressionError):
    """A sub-expression produced inf or nan (overflow, pole blow-up)."""

    def __init__(self, message: str, node=None):
        self.node = node
        if node is not None:
            message = f"{message} in '{to_source(node)}'"
        super().__init__(message)


# name -> arity
FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "sinh": 1,
    "cosh": 1,
    "tanh": 1,
    "coth": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "atan": 1,
    "pow": 2,
}

CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Expr = Num | Var | Const | Neg | BinOp | Call


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPERATORS = "+-*/^"
_ATOM_EXPECTED = ("number", "identifier", "'('", "'-'")


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            tokens.append(("number", m.group(), i))
            i = m.end()
            continue
        m = _IDENT.match(source, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        if ch in _OPERATORS:
            tokens.append(("op", ch, i))
        elif ch == "(":
            tokens.append(("lparen", ch, i))
        elif ch == ")":
            tokens.append(("rparen", ch, i))
        elif ch == ",":
            tokens.append(("comma", ch, i))
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
        i += 1
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        node = self.expression()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(
                f"unexpected token {text!r}", offset,
                ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"),
            )
        return node

    def expression(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "number":
            return Num(float(text))
        if kind == "ident":
            if text == "r":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                return self.call(text, offset)
            raise ParseError(f"unknown identifier {text!r}", offset)
        if kind == "lparen":
            node = self.expression()
            kind, _, offset = self.peek()
            if kind != "rparen":
                raise ParseError("unbalanced parenthesis", offset, ("')'",))
            self.advance()
            return node
        if kind == "op" and text == "-":
            return Neg(self.unary())
        raise ParseError(
            f"unexpected token {text!r}" if text else "unexpected end of input",
            offset, _ATOM_EXPECTED,
        )

    def call(self, fn: str, fn_offset: int) -> Expr:
        kind, _, offset = self.peek()
        if kind != "lparen":
            raise ParseError(f"function {fn!r} must be called", offset, ("'('",))
        self.advance()
        args = [self.expression()]
        while True:
            kind, _, offset = self.peek()
            if kind == "comma":
                self.advance()
                args.append(self.expression())
            elif kind == "rparen":
                self.advance()
                break
            else:
                raise ParseError("unbalanced parenthesis", offset, ("')'", "','"))
        arity = FUNCTIONS[fn]
        if len(args) != arity:
            raise ParseError(
                f"{fn} takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)}",
                fn_offset,
            )
        return Call(fn, tuple(args))


def parse(source: str) -> Expr:
    """Parse an expression in r. Raises ParseError on malformed input."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Pretty printer (round-trips: parse(to_source(t)) == t for parsed trees)
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def _fmt(node: Expr, min_prec: int) -> str:
    text = _fmt_bare(node)
    if _prec(node) < min_prec:
        return f"({text})"
    return text


def _fmt_bare(node: Expr) -> str:
    if isinstance(node, Num):
        v = node.value
        if v.is_integer() and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(node, Var):
        return "r"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return "-" + _fmt(node.arg, _PREC_NEG)
    if isinstance(node, BinOp):
        if node.op in "+-":
            return f"{_fmt(node.left, _PREC_ADD)} {node.op} {_fmt(node.right, _PREC_MUL)}"
        if node.op in "*/":
            return f"{_fmt(node.left, _PREC_MUL)}{node.op}{_fmt(node.right, _PREC_NEG)}"
        return f"{_fmt(node.left, _PREC_ATOM)}^{_fmt(node.right, _PREC_POW)}"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(_fmt(a, _PREC_ADD) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def to_source(node: Expr) -> str:
    return _fmt_bare(node)


# ---------------------------------------------------------------------------
# Second-order jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Jet2:
    """Value and first two derivatives of a scalar function at a point.

    Arithmetic follows the exact product, quotient and chain rules, so
    a jet computation is exact up to floating-point rounding.
    """

    value: float
    d1: float
    d2: float

    @staticmethod
    def constant(c: float) -> "Jet2":
        return Jet2(float(c), 0.0, 0.0)

    @staticmethod
    def variable(r: float) -> "Jet2":
        return Jet2(float(r), 1.0, 0.0)

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)

    def __sub__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.value - other.value, self.d1 - other.d1, self.d2 - other.d2)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.d1, -self.d2)

    def __mul__(self, other: "Jet2") -> "Jet2":
        return Jet2(
            self.value * other.value,
            self.d1 * other.value + self.value * other.d1,
            self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2,
        )

    def __truediv__(self, other: "Jet2") -> "Jet2":
        if other.value == 0.0:
            raise DomainError("division by zero")
        w = self.value / other.value
        w1 = (self.d1 - w * other.d1) / other.value
        w2 = (self.d2 - 2.0 * w1 * other.d1 - w * other.d2) / other.value
        return Jet2(w, w1, w2)


def _compose(u: Jet2, f: float, fp: float, fpp: float) -> Jet2:
    # chain rule: (f o u)'' = f''(u) u'^2 + f'(u) u''
    return Jet2(f, fp * u.d1, fpp * u.d1 * u.d1 + fp * u.d2)


def _apply_function(fn: str, u: Jet2, node) -> Jet2:
    x = u.value
    try:
        if fn == "sin":
            return _compose(u, math.sin(x), math.cos(x), -math.sin(x))
        if fn == "cos":
            return _compose(u, math.cos(x), -math.sin(x), -math.cos(x))
        if fn == "tan":
            t = math.tan(x)
            s = 1.0 + t * t
            return _compose(u, t, s, 2.0 * t * s)
        if fn == "sinh":
            return _compose(u, math.sinh(x), math.cosh(x), math.sinh(x))
        if fn == "cosh":
            return _compose(u, math.cosh(x), math.sinh(x), math.cosh(x))
        if fn == "tanh":
            t = math.tanh(x)
            s = 1.0 - t * t
            return _compose(u, t, s, -2.0 * t * s)
        if fn == "coth":
            if x == 0.0:
                raise DomainError("coth evaluated at its pole r=0", node)
            t = math.cosh(x) / math.sinh(x)
            s = 1.0 - t * t
            return _compose(u, t, s, -2.0 * t * s)
        if fn == "exp":
            ex = math.exp(x)
            return _compose(u, ex, ex, ex)
        if fn == "log":
            if x <= 0.0:
                raise DomainError(f"log of non-positive value {x!r}", node)
            return _compose(u, math.log(x), 1.0 / x, -1.0 / (x * x))
        if fn == "sqrt":
            if x <= 0.0:
                raise DomainError(f"sqrt of non-positive value {x!r}", node)
            s = math.sqrt(x)
            return _compose(u, s, 0.5 / s, -0.25 / (x * s))
        if fn == "abs":
            if x == 0.0:
                raise DomainError("abs is not differentiable at 0", node)
            sign = 1.0 if x > 0.0 else -1.0
            return _compose(u, abs(x), sign, 0.0)
        if fn == "atan":
            d = 1.0 + x * x
            return _compose(u, math.atan(x), 1.0 / d, -2.0 * x / (d * d))
    except OverflowError:
        raise NonFiniteError(f"{fn} overflowed at {x!r}", node) from None
    raise ValueError(f"unknown function {fn!r}")


def _pow_jet(u: Jet2, v: Jet2, node) -> Jet2:
    try:
        if v.d1 == 0.0 and v.d2 == 0.0:
            p = v.value
            if p == 0.0:
                return Jet2.constant(1.0)
            if float(p).is_integer() and abs(p) < 1e9:
                n = int(p)
                if n == 1:
                    return u
                if u.value == 0.0 and n < 0:
                    raise DomainError("zero base with negative exponent", node)
                x = u.value
                f = x ** n
                fp = n * x ** (n - 1)
                fpp = n * (n - 1) * x ** (n - 2) if n != 1 else 0.0
                return _compose(u, f, fp, fpp)
            if u.value <= 0.0:
                raise DomainError(
                    f"non-integer power of non-positive base {u.value!r}", node
                )
            x = u.value
            f = x ** p
            fp = p * x ** (p - 1.0)
            fpp = p * (p - 1.0) * x ** (p - 2.0)
            return _compose(u, f, fp, fpp)
        # variable exponent: u^v = exp(v log u), requires u > 0
        if u.value <= 0.0:
            raise DomainError(
                f"variable exponent with non-positive base {u.value!r}", node
            )
        lnu = _apply_function("log", u, node)
        return _apply_function("exp", v * lnu, node)
    except OverflowError:
        raise NonFiniteError("power overflowed", node) from None


def _check_finite(jet: Jet2, node) -> Jet2:
    if math.isfinite(jet.value) and math.isfinite(jet.d1) and math.isfinite(jet.d2):
        return jet
    raise NonFiniteError("non-finite intermediate value", node)


def _eval(node: Expr, r: float) -> Jet2:
    if isinstance(node, Num):
        return Jet2.constant(node.value)
    if isinstance(node, Var):
        return Jet2.variable(r)
    if isinstance(node, Const):
        return Jet2.constant(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_eval(node.arg, r)
    if isinstance(node, BinOp):
        left = _eval(node.left, r)
        right = _eval(node.right, r)
        try:
            if node.op == "+":
                out = left + right
            elif node.op == "-":
                out = left - right
            elif node.op == "*":
                out = left * right
            elif node.op == "/":
                out = left / right
            else:
                out = _pow_jet(left, right, node)
        except DomainError as exc:
            if exc.node is None:
                raise DomainError(str(exc), node) from None
            raise
        except OverflowError:
            raise NonFiniteError("arithmetic overflow", node) from None
        return _check_finite(out, node)
    if isinstance(node, Call):
        args = [_eval(a, r) for a in node.args]
        if node.fn == "pow":
            out = _pow_jet(args[0], args[1], node)
        else:
            out = _apply_function(node.fn, args[0], node)
        return _check_finite(out, node)
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet2(expr: Expr, r: float) -> Jet2:
    """Evaluate expr and its first two derivatives at the point r."""
    return _eval(expr, float(r))
