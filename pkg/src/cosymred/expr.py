"""Scalar expression language used for chart functions and form coefficients.

Expressions are immutable trees over real constants, named coordinates, the
constant ``pi``, the binary operations ``+ - * / ^`` (integer exponents only),
unary negation, and the functions ``sin cos exp log``.  The module provides

* a parser (`parse`) reporting syntax errors with byte offsets,
* a printer (`to_text`) such that parse(to_text(e)) is structurally equal to e,
* exact symbolic differentiation (`differentiate`),
* capture-free simultaneous substitution (`substitute`),
* conservative simplification (`simplify`): constant folding and 0/1 identities
  only, so the value at every point where the input is defined is preserved,
* pointwise evaluation (`evaluate`) with domain errors naming the offending
  subexpression.

Structural equality and hashing come from the frozen dataclasses, so two
expressions are equal exactly when their trees are identical.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

FUNCTIONS = ("sin", "cos", "exp", "log")
RESERVED_NAMES = frozenset(FUNCTIONS) | {"pi"}

_IDENT_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class ExprError(Exception):
    """Base class for expression-language errors."""


class ParseError(ExprError):
    """Syntax error; `offset` is the byte position in the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    """An identifier that is neither a coordinate, a function, nor pi."""

    def __init__(self, name: str, offset: int):
        ParseError.__init__(self, f"unknown identifier '{name}'", offset)
        self.name = name


class EvalDomainError(ExprError):
    """Evaluation hit a point outside the domain of some subexpression."""

    def __init__(self, message: str, subexpression: "Expr"):
        super().__init__(f"{message} in '{to_text(subexpression)}'")
        self.subexpression = subexpression


class Expr:
    """Base node.  Arithmetic operators build simplified combinations."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, n):
        return powi(self, n)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Pi(Expr):
    pass


@dataclass(frozen=True, slots=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Call(Expr):
    func: str
    arg: Expr


ZERO = Num(0.0)
ONE = Num(1.0)
PI = Pi()

ExprLike = Union[Expr, int, float]


def as_expr(x: ExprLike) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Num(float(x))
    raise TypeError(f"cannot interpret {x!r} as an expression")


def _is_num(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


# Smart constructors.  Only rules that preserve the value at every point of
# the operand's domain are applied (constant folds and 0/1 identities); in
# particular 0/e and 0*log(e) are NOT collapsed when e has variables, because
# that would enlarge the domain.  Exception, by convention: x^0 == 1.

def add(a: ExprLike, b: ExprLike) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Add(a, b)


def sub(a: ExprLike, b: ExprLike) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: ExprLike, b: ExprLike) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Mul(a, b)


def div(a: ExprLike, b: ExprLike) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_num(b) and b.value == 0.0:
        raise ZeroDivisionError("division by constant zero")
    if _is_num(a) and _is_num(b):
        return Num(a.value / b.value)
    if _is_num(b, 1.0):
        return a
    return Div(a, b)


def neg(a: ExprLike) -> Expr:
    a = as_expr(a)
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def powi(base: ExprLike, n: int) -> Expr:
    base = as_expr(base)
    if not isinstance(n, int):
        raise TypeError("exponent must be an integer")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if _is_num(base):
        if base.value == 0.0 and n < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return Num(float(base.value**n))
    return Pow(base, n)


def call(func: str, arg: ExprLike) -> Expr:
    if func not in FUNCTIONS:
        raise ValueError(f"unknown function '{func}'")
    arg = as_expr(arg)
    if isinstance(arg, Num):
        if func == "log" and arg.value <= 0.0:
            return Call(func, arg)  # keep the node; evaluation reports it
        return Num(getattr(math, func)(arg.value))
    return Call(func, arg)


def expr_sum(terms: Iterable[ExprLike]) -> Expr:
    """Balanced sum; keeps tree depth logarithmic for long accumulations."""
    items = [as_expr(t) for t in terms]
    if not items:
        return ZERO
    while len(items) > 1:
        nxt = [add(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def dot(coeffs: Sequence[ExprLike], exprs: Sequence[ExprLike]) -> Expr:
    return expr_sum(mul(c, e) for c, e in zip(coeffs, exprs, strict=True))


# ---------------------------------------------------------------------------
# traversal utilities

def free_names(e: Expr) -> frozenset[str]:
    """Names of all coordinates appearing in the expression."""
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            out.add(node.name)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Call):
            stack.append(node.arg)
    return frozenset(out)


def depth(e: Expr) -> int:
    """1 for leaves, 1 + max over children otherwise."""
    if isinstance(e, (Num, Pi, Sym)):
        return 1
    if isinstance(e, (Add, Sub, Mul, Div)):
        return 1 + max(depth(e.left), depth(e.right))
    if isinstance(e, Neg):
        return 1 + depth(e.operand)
    if isinstance(e, Pow):
        return 1 + depth(e.base)
    if isinstance(e, Call):
        return 1 + depth(e.arg)
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e: Expr, mapping: Mapping[str, ExprLike]) -> Expr:
    """Simultaneously replace coordinates by expressions, resimplifying."""
    subs = {k: as_expr(v) for k, v in mapping.items()}

    def go(node: Expr) -> Expr:
        if isinstance(node, Sym):
            return subs.get(node.name, node)
        if isinstance(node, (Num, Pi)):
            return node
        if isinstance(node, Add):
            return add(go(node.left), go(node.right))
        if isinstance(node, Sub):
            return sub(go(node.left), go(node.right))
        if isinstance(node, Mul):
            return mul(go(node.left), go(node.right))
        if isinstance(node, Div):
            return div(go(node.left), go(node.right))
        if isinstance(node, Neg):
            return neg(go(node.operand))
        if isinstance(node, Pow):
            return powi(go(node.base), node.exponent)
        if isinstance(node, Call):
            return call(node.func, go(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return go(e)


def simplify(e: Expr) -> Expr:
    """Rebuild bottom-up through the smart constructors."""
    return substitute(e, {})


def differentiate(e: Expr, name: str) -> Expr:
    """Exact partial derivative with respect to the named coordinate."""
    if isinstance(e, (Num, Pi)):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == name else ZERO
    if isinstance(e, Add):
        return add(differentiate(e.left, name), differentiate(e.right, name))
    if isinstance(e, Sub):
        return sub(differentiate(e.left, name), differentiate(e.right, name))
    if isinstance(e, Mul):
        return add(
            mul(differentiate(e.left, name), e.right),
            mul(e.left, differentiate(e.right, name)),
        )
    if isinstance(e, Div):
        num = sub(
            mul(differentiate(e.left, name), e.right),
            mul(e.left, differentiate(e.right, name)),
        )
        if _is_num(num, 0.0):
            return ZERO
        return div(num, powi(e.right, 2))
    if isinstance(e, Neg):
        return neg(differentiate(e.operand, name))
    if isinstance(e, Pow):
        du = differentiate(e.base, name)
        if _is_num(du, 0.0):
            return ZERO
        return mul(mul(Num(float(e.exponent)), powi(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        du = differentiate(e.arg, name)
        if _is_num(du, 0.0):
            return ZERO
        if e.func == "sin":
            return mul(call("cos", e.arg), du)
        if e.func == "cos":
            return neg(mul(call("sin", e.arg), du))
        if e.func == "exp":
            return mul(call("exp", e.arg), du)
        if e.func == "log":
            return div(du, e.arg)
    raise TypeError(f"not an expression node: {e!r}")


def gradient(e: Expr, names: Sequence[str]) -> list[Expr]:
    return [differentiate(e, n) for n in names]


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate at a point given as name -> value; raise EvalDomainError with
    the offending subexpression on division by zero, log of a non-positive
    number, 0^negative, or overflow to a non-finite value."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Sym):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvalDomainError(f"no value bound for '{e.name}'", e) from None
    if isinstance(e, (Add, Sub, Mul, Div)):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        if isinstance(e, Add):
            v = a + b
        elif isinstance(e, Sub):
            v = a - b
        elif isinstance(e, Mul):
            v = a * b
        else:
            if b == 0.0:
                raise EvalDomainError("division by zero", e)
            v = a / b
    elif isinstance(e, Neg):
        v = -evaluate(e.operand, env)
    elif isinstance(e, Pow):
        base = evaluate(e.base, env)
        if base == 0.0 and e.exponent < 0:
            raise EvalDomainError("zero base with negative exponent", e)
        v = float(base**e.exponent)
    elif isinstance(e, Call):
        x = evaluate(e.arg, env)
        if e.func == "log":
            if x <= 0.0:
                raise EvalDomainError(f"log of non-positive value {x!r}", e)
            v = math.log(x)
        elif e.func == "exp":
            v = math.exp(x) if x < 709.0 else math.inf
        elif e.func == "sin":
            v = math.sin(x)
        else:
            v = math.cos(x)
    else:
        raise TypeError(f"not an expression node: {e!r}")
    if not math.isfinite(v):
        raise EvalDomainError("non-finite result", e)
    return v


# ---------------------------------------------------------------------------
# printing

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def to_text(e: Expr) -> str:
    """Render with the fewest parentheses that reparse to the same tree."""

    def wrap(child: Expr, minimum: int) -> str:
        text = to_text(child)
        return f"({text})" if _prec(child) < minimum else text

    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Add):
        return f"{wrap(e.left, _PREC_ADD)} + {wrap(e.right, _PREC_ADD)}"
    if isinstance(e, Sub):
        return f"{wrap(e.left, _PREC_ADD)} - {wrap(e.right, _PREC_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{wrap(e.left, _PREC_MUL)}*{wrap(e.right, _PREC_MUL)}"
    if isinstance(e, Div):
        return f"{wrap(e.left, _PREC_MUL)}/{wrap(e.right, _PREC_MUL + 1)}"
    if isinstance(e, Neg):
        return f"-{wrap(e.operand, _PREC_NEG)}"
    if isinstance(e, Pow):
        expo = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{wrap(e.base, _PREC_ATOM)}^{expo}"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_OPS = "+-*/^()"


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind: str, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_OPS:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(_Token("number", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("ident", m.group(), i))
            i = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str] | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = None if names is None else frozenset(names)

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected '{kind}', found {tok.text or 'end of input'!r}", tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return e

    def expression(self, min_prec: int) -> Expr:
        left = self.unary()
        while True:
            tok = self.peek()
            if tok.kind in "+-":
                prec = _PREC_ADD
            elif tok.kind in "*/":
                prec = _PREC_MUL
            else:
                break
            if prec < min_prec:
                break
            self.advance()
            right = self.expression(prec + 1)
            node = {"+": Add, "-": Sub, "*": Mul, "/": Div}[tok.kind]
            left = node(left, right)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.peek().kind == "^":
            self.advance()
            e = Pow(e, self.integer_exponent())
        return e

    def integer_exponent(self) -> int:
        tok = self.peek()
        sign = 1
        parens = False
        if tok.kind == "(":
            self.advance()
            parens = True
            tok = self.peek()
        if tok.kind == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok.kind != "number" or not tok.text.isdigit():
            raise ParseError("exponent must be an integer", tok.offset)
        self.advance()
        if parens:
            self.expect(")")
        return sign * int(tok.text)

    def primary(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Num(float(tok.text))
        if tok.kind == "(":
            e = self.expression(0)
            self.expect(")")
            return e
        if tok.kind == "ident":
            if tok.text == "pi":
                return PI
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Call(tok.text, arg)
            if self.names is not None and tok.text not in self.names:
                raise UnknownIdentifierError(tok.text, tok.offset)
            return Sym(tok.text)
        raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}", tok.offset)


def parse(text: str, names: Sequence[str] | None = None) -> Expr:
    """Parse source text; when `names` is given, identifiers outside it (and
    outside the function/constant vocabulary) raise UnknownIdentifierError."""
    return _Parser(text, names).parse()
