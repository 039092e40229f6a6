"""Analytic coordinate expressions: parsing, printing, jet evaluation.

Grammar (recursive descent, one token of lookahead):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

so `^` is right-associative and unary minus binds looser than `^`
(-x^2 == -(x^2), x^-2 is legal).  Known functions: sin cos tan sinh cosh
tanh exp log sqrt atan.  `pi` and `e` are constants; `i` is a constant in
complex mode only.  Declared coordinates and parameters shadow constants.

Expressions and jets are immutable; evaluation is a pure function, safe to
run concurrently from many threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier
from .jets import Jet, JetSpace, jet_space

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "atan")


# --- AST ---

@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return format_number(self.value)


@dataclass(frozen=True)
class Name:
    ident: str

    def __str__(self):
        return self.ident


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def __str__(self):
        return "-" + _paren(self.arg, 25)


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"

    def __str__(self):
        prec = _PREC[self.op]
        # left operand of ^ needs parens at equal precedence (right-assoc);
        # right operands of - and / need them too
        left = _paren(self.lhs, prec + (1 if self.op == "^" else 0))
        right = _paren(self.rhs, prec + (1 if self.op in "+-*/" else 0))
        return f"{left} {self.op} {right}" if self.op in "+-" else f"{left}{self.op}{right}"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"

    def __str__(self):
        return f"{self.fn}({self.arg})"


Expr = Union[Num, Name, Neg, Bin, Call]

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}


def _prec_of(e):
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 15  # between +- and */ : binds looser than ^ and than */
    return 100


def _paren(e, minimum):
    s = str(e)
    return f"({s})" if _prec_of(e) < minimum else s


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(e: Expr) -> str:
    """Pretty-print; parse(to_source(e)) is structurally identical to e."""
    return str(e)


# --- tokenizer ---

_OPS = set("+-*/^()")


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(source: str):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        start_col = col
        if c in _OPS:
            tokens.append(_Token(c, c, line, start_col))
            i += 1
            col += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            tokens.append(_Token("number", text, line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("ident", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", line, start_col, expected=())
    tokens.append(_Token("end", "", line, col))
    return tokens


# --- parser ---

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self):
        return self.tokens[self.pos]

    def _fail(self, expected):
        t = self.cur
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(
            f"unexpected {what}, expected {' or '.join(sorted(expected))}",
            t.line,
            t.col,
            expected=expected,
        )

    def eat(self, kind):
        if self.cur.kind != kind:
            self._fail({kind})
        t = self.cur
        self.pos += 1
        return t

    def parse(self):
        e = self.expr()
        if self.cur.kind != "end":
            self._fail({"end of input", "+", "-", "*", "/", "^"})
        return e

    def expr(self):
        e = self.term()
        while self.cur.kind in ("+", "-"):
            op = self.eat(self.cur.kind).kind
            e = Bin(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.cur.kind in ("*", "/"):
            op = self.eat(self.cur.kind).kind
            e = Bin(op, e, self.factor())
        return e

    def factor(self):
        if self.cur.kind == "-":
            self.eat("-")
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.cur.kind == "^":
            self.eat("^")
            return Bin("^", base, self.factor())
        return base

    def atom(self):
        t = self.cur
        if t.kind == "number":
            self.eat("number")
            return Num(float(t.text))
        if t.kind == "ident":
            self.eat("ident")
            if self.cur.kind == "(":
                self.eat("(")
                arg = self.expr()
                self.eat(")")
                return Call(t.text, arg)
            return Name(t.text)
        if t.kind == "(":
            self.eat("(")
            e = self.expr()
            self.eat(")")
            return e
        self._fail({"number", "identifier", "("})


def parse(source: str) -> Expr:
    """Parse expression text into an AST, or raise a positioned ExprSyntaxError."""
    return _Parser(_tokenize(source)).parse()


# --- evaluation ---

class Scope:
    """Name resolution for one evaluation: coordinate seed jets plus
    order-0 parameter jets.  Declared names shadow the builtin constants."""

    def __init__(self, space: JetSpace, coords, point, mode="real", params=None):
        if len(coords) != space.nvars:
            raise ValueError("coordinate count does not match jet space")
        dtype = complex if mode == "complex" else float
        point = np.asarray(point, dtype=dtype)
        self.mode = mode
        self.space = space
        self.bindings = {
            name: Jet.variable(space, k, point[k], dtype=dtype)
            for k, name in enumerate(coords)
        }
        for name, value in (params or {}).items():
            self.bindings[name] = Jet.constant(space, np.asarray(value, dtype=dtype))
        self.constants = {"pi": math.pi, "e": math.e}
        if mode == "complex":
            self.constants["i"] = 1j

    def lookup(self, ident):
        got = self.bindings.get(ident)
        if got is not None:
            return got
        c = self.constants.get(ident)
        if c is not None:
            dtype = complex if self.mode == "complex" else float
            return Jet.constant(self.space, np.asarray(c, dtype=dtype))
        if ident == "i":
            raise DomainError("the constant i is only available in complex mode")
        raise UnknownIdentifier(f"unknown identifier {ident!r}")


def evaluate_jet(e: Expr, scope: Scope) -> Jet:
    """Evaluate to a jet; coefficients are exact partial derivatives of the
    expression at the scope's point (divided by alpha!)."""
    out = _eval(e, scope)
    if not np.all(np.isfinite(out.data)):
        raise DomainError("expression evaluated to a non-finite value")
    return out


def _eval(e, scope):
    if isinstance(e, Num):
        return Jet.constant(
            scope.space, np.asarray(e.value, dtype=complex if scope.mode == "complex" else float)
        )
    if isinstance(e, Name):
        return scope.lookup(e.ident)
    if isinstance(e, Neg):
        return -_eval(e.arg, scope)
    if isinstance(e, Bin):
        lhs = _eval(e.lhs, scope)
        if e.op == "^":
            # plain numeric exponents take the integer/real fast path
            if isinstance(e.rhs, Num):
                return lhs ** e.rhs.value
            if isinstance(e.rhs, Neg) and isinstance(e.rhs.arg, Num):
                return lhs ** (-e.rhs.arg.value)
            return lhs ** _eval(e.rhs, scope)
        rhs = _eval(e.rhs, scope)
        if e.op == "+":
            return lhs + rhs
        if e.op == "-":
            return lhs - rhs
        if e.op == "*":
            return lhs * rhs
        return lhs / rhs
    if isinstance(e, Call):
        if e.fn not in FUNCTIONS:
            raise UnknownIdentifier(f"unknown function {e.fn!r}")
        return getattr(_eval(e.arg, scope), e.fn)()
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_value(e: Expr, coords, point, mode="real", params=None):
    """Order-0 evaluation with plain scalars (no jet machinery).

    This is the fast path used by the finite-difference oracle and the
    geodesic integrator; it shares only the AST with the jet evaluator.
    """
    env = dict(zip(coords, point))
    if params:
        env.update(params)
    cmath_mode = mode == "complex"
    return _eval_value(e, env, cmath_mode)


_REAL_FUNCS = {f: getattr(math, f) for f in FUNCTIONS}

_COMPLEX_FUNCS = {
    "sin": cmath.sin, "cos": cmath.cos, "tan": cmath.tan,
    "sinh": cmath.sinh, "cosh": cmath.cosh, "tanh": cmath.tanh,
    "exp": cmath.exp, "log": cmath.log, "sqrt": cmath.sqrt, "atan": cmath.atan,
}


def _eval_value(e, env, cmath_mode):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        v = env.get(e.ident)
        if v is not None:
            return v
        if e.ident == "pi":
            return math.pi
        if e.ident == "e":
            return math.e
        if e.ident == "i" and cmath_mode:
            return 1j
        raise UnknownIdentifier(f"unknown identifier {e.ident!r}")
    if isinstance(e, Neg):
        return -_eval_value(e.arg, env, cmath_mode)
    if isinstance(e, Bin):
        a = _eval_value(e.lhs, env, cmath_mode)
        b = _eval_value(e.rhs, env, cmath_mode)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return a / b
            if isinstance(b, float) and b == int(b):
                return a ** int(b)
            if cmath_mode:
                return cmath.exp(b * cmath.log(a))
            return math.exp(b * math.log(a))
        except ZeroDivisionError as exc:
            raise DomainError(str(exc)) from exc
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
    if isinstance(e, Call):
        table = _COMPLEX_FUNCS if cmath_mode else _REAL_FUNCS
        fn = table.get(e.fn)
        if fn is None:
            raise UnknownIdentifier(f"unknown function {e.fn!r}")
        try:
            return fn(_eval_value(e.arg, env, cmath_mode))
        except ValueError as exc:
            raise DomainError(f"{e.fn}: {exc}") from exc
    raise TypeError(f"not an expression node: {e!r}")


def free_names(e: Expr):
    """Identifiers appearing in the expression (constants included)."""
    out = set()

    def walk(node):
        if isinstance(node, Name):
            out.add(node.ident)
        elif isinstance(node, Neg):
            walk(node.arg)
        elif isinstance(node, Bin):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, Call):
            walk(node.arg)

    walk(e)
    return out


# convenience constructors used by fixture generators

def num(v) -> Expr:
    return Neg(Num(-float(v))) if v < 0 else Num(float(v))


def var(name) -> Expr:
    return Name(name)


def add(a, b) -> Expr:
    return Bin("+", a, b)


def sub(a, b) -> Expr:
    return Bin("-", a, b)


def mul(a, b) -> Expr:
    return Bin("*", a, b)


def pow_(a, k) -> Expr:
    return Bin("^", a, Num(float(k)))
