"""Tiny univariate expression language used for user-supplied ``f`` and ``h``.

Grammar (EBNF)::

    expr    = term , { ( "+" | "-" ) , term } ;
    term    = unary , { ( "*" | "/" ) , unary } ;
    unary   = ( "-" | "+" ) , unary | power ;
    power   = primary , [ "^" , unary ] ;          (* right-associative *)
    primary = number | "t" | constant | call | "(" , expr , ")" ;
    call    = function , "(" , expr , { "," , expr } , ")" ;
    constant = "pi" | "e" ;
    function = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs"
             | "min" | "max" | "pow" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent = ( "e" | "E" ) , [ "+" | "-" ] , digits ;

``^`` binds tighter than unary minus, so ``-2^2`` is ``-4`` and ``2^3^2`` is
``512``.  The only free variable is ``t``.

Evaluation is vectorised over numpy arrays.  A point where any subexpression
leaves its real domain (division by zero, ``log`` of a non-positive number,
negative base with a non-integer exponent, overflow, ...) is a *domain
failure*; the scalar entry point :func:`evaluate` raises
:class:`EvalDomainError`, the array entry point :func:`evaluate_array` returns
a mask instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Num",
    "Var",
    "Const",
    "Unary",
    "Binary",
    "Call",
    "Expr",
    "EvalDomain",
    "DomainViolation",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvalDomainError",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_text",
    "check_domain",
]


class ExprSyntaxError(ValueError):
    """Malformed expression text.

    ``offset`` is the 0-based character offset of the offending token and
    ``expected`` the set of tokens the parser would have accepted there.
    """

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset)


class EvalDomainError(ArithmeticError):
    """Evaluation left the real domain of a subexpression."""

    def __init__(self, subexpr: str, t: float, reason: str):
        self.subexpr = subexpr
        self.t = t
        self.reason = reason
        super().__init__(f"{reason} in {subexpr!r} at t={t!r}")


# --------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Const, Unary, Binary, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "min": 2,
    "max": 2,
    "pow": 2,
}


# --------------------------------------------------------------------------
# Lexer

_NUMBER = "number"
_IDENT = "identifier"
_END = "end of input"
_PUNCT = set("+-*/^(),")


@dataclass(frozen=True)
class _Token:
    kind: str  # _NUMBER, _IDENT, _END or the punctuation character itself
    text: str
    offset: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(_Token(_NUMBER, text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token(_IDENT, text[i:j], i))
            i = j
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token(_END, "", n))
    return tokens


# --------------------------------------------------------------------------
# Recursive-descent parser

_START_OF_OPERAND = frozenset({_NUMBER, _IDENT, "(", "-", "+"})


class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        if self.tok.kind != kind:
            self.fail(frozenset({kind}))
        return self.advance()

    def fail(self, expected: frozenset[str]):
        tok = self.tok
        what = "unexpected end of input" if tok.kind == _END else f"unexpected {tok.text!r}"
        raise ExprSyntaxError(what, tok.offset, expected)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != _END:
            self.fail(frozenset({"+", "-", "*", "/", "^", _END}))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind in ("-", "+"):
            op = self.advance().kind
            return Unary(op, self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == _NUMBER:
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == _IDENT:
            self.advance()
            name = tok.text
            if name == "t":
                return Var("t")
            if name in FUNCTIONS:
                return self.call(name, tok.offset)
            if name in CONSTANTS:
                return Const(name)
            raise UnknownIdentifierError(name, tok.offset)
        self.fail(_START_OF_OPERAND)

    def call(self, name: str, offset: int) -> Expr:
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == ",":
            self.advance()
            args.append(self.expr())
        close = self.expect(")")
        arity = FUNCTIONS[name]
        if len(args) != arity:
            raise ExprSyntaxError(
                f"{name}() takes {arity} argument(s), got {len(args)}", close.offset
            )
        return Call(name, tuple(args))


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    >>> evaluate(parse("t^2 + 3*t"), 2.0)
    10.0
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, _START_OF_OPERAND)
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "u": 3, "^": 4}


def to_text(e: Expr) -> str:
    """Render ``e`` back to parseable text (parenthesising conservatively)."""
    return _show(e, 0)


def _show(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        s = repr(e.value)
        if s in ("inf", "nan"):
            raise ValueError(f"cannot print non-finite literal {s}")
        if e.value.is_integer() and abs(e.value) < 1e15:
            return str(int(e.value))
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_show(a, 0) for a in e.args)})"
    if isinstance(e, Unary):
        s = e.op + _show(e.operand, _PREC["u"])
        return f"({s})" if ctx > _PREC["u"] else s
    prec = _PREC[e.op]
    if e.op == "^":
        s = f"{_show(e.left, prec + 1)}^{_show(e.right, prec)}"
    else:
        s = f"{_show(e.left, prec)} {e.op} {_show(e.right, prec + 1)}"
    return f"({s})" if ctx > prec else s


# --------------------------------------------------------------------------
# Evaluation

class _Evaluator:
    """Evaluate a tree on an array, remembering where failures were introduced."""

    def __init__(self, t: np.ndarray):
        self.t = t
        self.first_failure: tuple[Expr, np.ndarray, str] | None = None

    def note(self, node: Expr, new_bad: np.ndarray, reason: str):
        if self.first_failure is None and new_bad.any():
            self.first_failure = (node, new_bad, reason)

    def run(self, node: Expr) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(node, Num):
            return np.full(self.t.shape, node.value), np.zeros(self.t.shape, bool)
        if isinstance(node, Var):
            return self.t.astype(float, copy=True), np.zeros(self.t.shape, bool)
        if isinstance(node, Const):
            return np.full(self.t.shape, CONSTANTS[node.name]), np.zeros(self.t.shape, bool)
        if isinstance(node, Unary):
            v, bad = self.run(node.operand)
            return (-v if node.op == "-" else v), bad
        if isinstance(node, Binary):
            a, bad_a = self.run(node.left)
            b, bad_b = self.run(node.right)
            return self.binary(node, node.op, a, b, bad_a | bad_b)
        args = [self.run(a) for a in node.args]
        bad = np.zeros(self.t.shape, bool)
        for _, b in args:
            bad |= b
        return self.call(node, [v for v, _ in args], bad)

    def _finish(self, node, v, bad, invalid, reason):
        new = invalid & ~bad
        self.note(node, new, reason)
        bad = bad | invalid
        overflow = ~bad & ~np.isfinite(v)
        self.note(node, overflow, "non-finite result")
        bad = bad | overflow
        v = np.where(bad, np.nan, v)
        return v, bad

    def binary(self, node, op, a, b, bad):
        invalid = np.zeros(a.shape, bool)
        reason = ""
        if op == "+":
            v = a + b
        elif op == "-":
            v = a - b
        elif op == "*":
            v = a * b
        elif op == "/":
            invalid = b == 0
            reason = "division by zero"
            v = a / np.where(invalid, 1.0, b)
        else:
            v, invalid, reason = _power(a, b)
        return self._finish(node, v, bad, invalid, reason)

    def call(self, node, name_args, bad):
        name = node.name
        if name == "pow":
            v, invalid, reason = _power(*name_args)
            return self._finish(node, v, bad, invalid, reason)
        if name in ("min", "max"):
            v = (np.minimum if name == "min" else np.maximum)(*name_args)
            return self._finish(node, v, bad, np.zeros(v.shape, bool), "")
        (x,) = name_args
        invalid = np.zeros(x.shape, bool)
        reason = ""
        if name == "sin":
            v = np.sin(x)
        elif name == "cos":
            v = np.cos(x)
        elif name == "exp":
            v = np.exp(x)
        elif name == "abs":
            v = np.abs(x)
        elif name == "log":
            invalid = ~(x > 0)
            reason = "log of non-positive argument"
            v = np.log(np.where(invalid, 1.0, x))
        else:  # sqrt
            invalid = ~(x >= 0)
            reason = "sqrt of negative argument"
            v = np.sqrt(np.where(invalid, 0.0, x))
        return self._finish(node, v, bad, invalid, reason)


def _power(a: np.ndarray, b: np.ndarray):
    # negative base needs an integer exponent; zero base needs a non-negative one
    neg_base = (a < 0) & (b != np.floor(b))
    zero_neg = (a == 0) & (b < 0)
    invalid = neg_base | zero_neg
    safe_a = np.where(invalid, 1.0, a)
    v = np.power(safe_a, b)
    reason = "negative base with non-integer exponent" if neg_base.any() else "zero to a negative power"
    return v, invalid, reason


def evaluate_array(e: Expr, t) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``e`` elementwise at ``t``.

    Returns ``(values, ok)``: ``values`` is NaN wherever ``ok`` is False.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        v, bad = _Evaluator(t).run(e)
    return v, ~bad


def evaluate(e: Expr, t: float) -> float:
    """Evaluate ``e`` at a single point; raises :class:`EvalDomainError`."""
    arr = np.asarray([t], dtype=float)
    ev = _Evaluator(arr)
    with np.errstate(all="ignore"):
        v, bad = ev.run(e)
    if bad[0]:
        node, _, reason = ev.first_failure
        raise EvalDomainError(to_text(node), float(t), reason)
    return float(v[0])


# --------------------------------------------------------------------------
# Domains

@dataclass(frozen=True)
class EvalDomain:
    """Real interval with optionally open endpoints."""

    lo: float
    hi: float
    open_lo: bool = False
    open_hi: bool = False

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError(f"empty domain: lo={self.lo} must be < hi={self.hi}")

    @property
    def positive(self) -> bool:
        """Whether the interval sits inside (0, inf)."""
        return self.lo > 0 or (self.lo == 0 and self.open_lo)

    def grid(self, n: int) -> np.ndarray:
        """``n`` uniform points; an open endpoint is inset by one grid step."""
        if n < 2:
            raise ValueError("grid needs n >= 2")
        step = (self.hi - self.lo) / (n - 1)
        lo = self.lo + step if self.open_lo else self.lo
        hi = self.hi - step if self.open_hi else self.hi
        if not lo < hi:
            raise ValueError(f"grid of {n} points leaves nothing inside {self}")
        return np.linspace(lo, hi, n)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo_ok = x > self.lo if self.open_lo else x >= self.lo
        hi_ok = x < self.hi if self.open_hi else x <= self.hi
        return lo_ok & hi_ok

    def __str__(self) -> str:
        return f"{'(' if self.open_lo else '['}{self.lo!r}, {self.hi!r}{')' if self.open_hi else ']'}"


@dataclass(frozen=True)
class DomainViolation:
    t: float
    subexpr: str
    reason: str


def check_domain(e: Expr, d: EvalDomain, n: int) -> list[DomainViolation]:
    """Every point of an ``n``-point grid over ``d`` where ``e`` fails to evaluate."""
    if n < 2:
        raise ValueError("check_domain needs n >= 2")
    ts = d.grid(n)
    _, ok = evaluate_array(e, ts)
    out = []
    for t in ts[~ok]:
        try:
            evaluate(e, float(t))
        except EvalDomainError as err:
            out.append(DomainViolation(float(t), err.subexpr, err.reason))
    return out
