"""Symbol specifications: parsing, printing and vectorised evaluation.

Three kinds of symbol are understood::

    moment: <expr in s>          f(mu(z)), mu the SO(2) moment map
    invariant: <expr in u, w>    g(|z|^2, |z^T z|^2)
    phase: [{"alpha": [...], "beta": [...], "coef": [re, im]}, ...]

Expression grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := unary ("^" integer)?
    unary  := "-" unary | atom
    atom   := number | ident | "(" expr ")" | func "(" expr ")"
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .actions import moment_map_so2
from .errors import EvalDomainError, KindError, ParseError, PhaseWeightError, VariableError
from .geometry import _abs2, _norm2, _zz
from .jordan import SpinElement

FUNCS = ("exp", "log", "sqrt", "abs")
VARIABLES = {"moment": frozenset("s"), "invariant": frozenset("uw")}


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Union[Const, Var, BinOp, Pow, Neg, Func]


@dataclass(frozen=True)
class MomentExpr:
    expr: Expr
    kind = "moment"


@dataclass(frozen=True)
class InvariantExpr:
    expr: Expr
    kind = "invariant"


@dataclass(frozen=True)
class PhaseTerm:
    alpha: tuple
    beta: tuple
    coef: complex


@dataclass(frozen=True)
class PhaseSum:
    terms: tuple
    kind = "phase"

    def __post_init__(self):
        for t in self.terms:
            if sum(t.alpha) != sum(t.beta):
                raise PhaseWeightError(
                    f"term alpha={list(t.alpha)} beta={list(t.beta)} has |alpha| != |beta|"
                )
            if len(t.alpha) != len(t.beta):
                raise PhaseWeightError("alpha and beta lengths differ")

    @property
    def n(self):
        return len(self.terms[0].alpha) if self.terms else None


SymbolSpec = Union[MomentExpr, InvariantExpr, PhaseSum]


# ---------------------------------------------------------------- lexer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, allowed, offset=0):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed
        self.offset = offset

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ParseError(f"expected {expected}, found {found}", position=tok[2] + self.offset)

    def expect_op(self, op):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != op:
            self.fail(repr(op))
        return self.advance()

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return e

    def expr(self):
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            left = BinOp(op, left, self.factor())
        return left

    def factor(self):
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.advance()
                sign = -1
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("integer exponent")
            self.advance()
            return Pow(base, sign * int(tok[1]))
        return base

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.advance()
            return Const(float(tok[1]))
        if tok[0] == "op" and tok[1] == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if tok[0] == "name":
            name = tok[1]
            if name in FUNCS:
                self.advance()
                self.expect_op("(")
                e = self.expr()
                self.expect_op(")")
                return Func(name, e)
            if name in ("s", "u", "w"):
                if name not in self.allowed:
                    raise VariableError(
                        f"variable {name!r} is not allowed here (allowed: {', '.join(sorted(self.allowed))})",
                        position=tok[2] + self.offset,
                    )
                self.advance()
                return Var(name)
            raise ParseError(f"unknown identifier {name!r}", position=tok[2] + self.offset)
        self.fail("number, variable, function or '('")


def parse_expr(text: str, kind: str = "moment", offset: int = 0) -> Expr:
    return _Parser(text, VARIABLES[kind], offset).parse()


def parse_symbol(text: str) -> SymbolSpec:
    head, sep, body = text.partition(":")
    kind = head.strip().lower()
    if not sep or kind not in ("moment", "invariant", "phase"):
        raise ParseError("symbol must start with 'moment:', 'invariant:' or 'phase:'", position=0)
    offset = len(head) + 1
    if kind == "moment":
        return MomentExpr(parse_expr(body, "moment", offset))
    if kind == "invariant":
        return InvariantExpr(parse_expr(body, "invariant", offset))
    return _parse_phase(body, offset)


def _parse_phase(body: str, offset: int) -> PhaseSum:
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ParseError(f"phase terms are not valid JSON: {exc.msg}", position=offset + exc.pos) from exc
    if not isinstance(data, list) or not data:
        raise ParseError("phase terms must be a non-empty JSON array", position=offset)
    terms = []
    n = None
    for k, item in enumerate(data):
        try:
            alpha = tuple(int(a) for a in item["alpha"])
            beta = tuple(int(b) for b in item["beta"])
            c = item.get("coef", [1, 0])
            coef = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"phase term {k} is malformed: {exc}", position=offset) from exc
        if min(alpha + beta, default=0) < 0:
            raise ParseError(f"phase term {k} has negative exponents", position=offset)
        if n is None:
            n = len(alpha)
        if len(alpha) != n or len(beta) != n:
            raise ParseError(f"phase term {k} has inconsistent length", position=offset)
        terms.append(PhaseTerm(alpha, beta, coef))
    return PhaseSum(tuple(terms))


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Pow):
        return 3
    if isinstance(e, Neg):
        return 4
    return 5


def _fmt_const(v: float) -> str:
    if v < 0:
        # the parser never yields negative literals; keep the value exact on re-parse
        raise ValueError("negative constants must be expressed with Neg")
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({format_expr(e.arg)})"
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        return "-" + (inner if _prec(e.operand) >= 4 else f"({inner})")
    if isinstance(e, Pow):
        inner = format_expr(e.base)
        return (inner if _prec(e.base) >= 4 else f"({inner})") + f"^{e.exponent}"
    p = _PREC[e.op]
    left = format_expr(e.left)
    right = format_expr(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left}{e.op}{right}"


def format_symbol(spec: SymbolSpec) -> str:
    if isinstance(spec, PhaseSum):
        items = [
            {"alpha": list(t.alpha), "beta": list(t.beta), "coef": [t.coef.real, t.coef.imag]}
            for t in spec.terms
        ]
        return "phase: " + json.dumps(items)
    return f"{spec.kind}: {format_expr(spec.expr)}"


# ---------------------------------------------------------------- evaluation


def eval_expr(e: Expr, env: dict):
    """Evaluate on numpy arrays; domain violations raise EvalDomainError naming the subexpression."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -eval_expr(e.operand, env)
    if isinstance(e, Pow):
        b = np.asarray(eval_expr(e.base, env), dtype=float)
        if e.exponent < 0 and np.any(b == 0):
            raise EvalDomainError(f"zero raised to a negative power in {format_expr(e)}")
        return b ** float(e.exponent)
    if isinstance(e, Func):
        a = np.asarray(eval_expr(e.arg, env), dtype=float)
        if e.name == "exp":
            with np.errstate(over="ignore"):
                return np.exp(a)
        if e.name == "abs":
            return np.abs(a)
        if e.name == "log":
            if np.any(a <= 0):
                raise EvalDomainError(f"log of a non-positive value in {format_expr(e)}")
            return np.log(a)
        if np.any(a < 0):
            raise EvalDomainError(f"sqrt of a negative value in {format_expr(e)}")
        return np.sqrt(a)
    left = eval_expr(e.left, env)
    right = eval_expr(e.right, env)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    right = np.asarray(right, dtype=float)
    if np.any(right == 0):
        raise EvalDomainError(f"division by zero in {format_expr(e)}")
    return left / right


def _broadcast(v, shape):
    return np.broadcast_to(np.asarray(v, dtype=float), shape).copy()


def invariant_coordinates(z):
    """(u, w) = (|z|^2, |z^T z|^2)."""
    z = np.asarray(z, dtype=complex)
    return _norm2(z), _abs2(_zz(z))


def eval_symbol(spec: SymbolSpec, z):
    """Symbol values at a point (n,) or a batch (..., n). Real kinds return floats."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape[:-1]
    if isinstance(spec, MomentExpr):
        return _broadcast(eval_expr(spec.expr, {"s": moment_map_so2(z)}), shape)
    if isinstance(spec, InvariantExpr):
        u, w = invariant_coordinates(z)
        return _broadcast(eval_expr(spec.expr, {"u": u, "w": w}), shape)
    if isinstance(spec, PhaseSum):
        n = z.shape[-1]
        if spec.n != n:
            raise KindError(f"phase symbol is for n = {spec.n}, point has n = {n}")
        zc = np.conj(z)
        out = np.zeros(shape, dtype=complex)
        for t in spec.terms:
            val = np.full(shape, t.coef, dtype=complex)
            for j in range(n):
                if t.alpha[j]:
                    val = val * z[..., j] ** t.alpha[j]
                if t.beta[j]:
                    val = val * zc[..., j] ** t.beta[j]
            out = out + val
        return out
    raise KindError(f"unknown symbol kind {type(spec).__name__}")


def eval_on_uw(spec: SymbolSpec, u, w):
    """Evaluate an invariant-kind symbol directly from (u, w) arrays."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    shape = np.broadcast_shapes(u.shape, w.shape)
    if isinstance(spec, MomentExpr):
        s = (w - u) / (1.0 + w - 2.0 * u)
        return _broadcast(eval_expr(spec.expr, {"s": s}), shape)
    if isinstance(spec, InvariantExpr):
        return _broadcast(eval_expr(spec.expr, {"u": u, "w": w}), shape)
    raise KindError("phase symbols are not SO(n) x SO(2)-invariant and have no cone representation")


def eval_invariant_at_cone_point(spec: SymbolSpec, x: SpinElement) -> float:
    """Symbol at E(sqrt x) without forming the square root: u = x1, w = x1^2 - x'.x'."""
    qq = float(np.dot(x.xprime, x.xprime))
    return float(eval_on_uw(spec, x.x1, x.x1 * x.x1 - qq))


_MOMENT_AS_UW = BinOp(
    "/",
    BinOp("-", Var("w"), Var("u")),
    BinOp("-", BinOp("+", Const(1.0), Var("w")), BinOp("*", Const(2.0), Var("u"))),
)


def _substitute(e: Expr, name: str, repl: Expr) -> Expr:
    if isinstance(e, Var):
        return repl if e.name == name else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(_substitute(e.operand, name, repl))
    if isinstance(e, Pow):
        return Pow(_substitute(e.base, name, repl), e.exponent)
    if isinstance(e, Func):
        return Func(e.name, _substitute(e.arg, name, repl))
    return BinOp(e.op, _substitute(e.left, name, repl), _substitute(e.right, name, repl))


def moment_to_invariant(spec: MomentExpr) -> InvariantExpr:
    if not isinstance(spec, MomentExpr):
        raise KindError("moment_to_invariant needs a moment symbol")
    return InvariantExpr(_substitute(spec.expr, "s", _MOMENT_AS_UW))


def is_invariant_kind(spec: SymbolSpec) -> bool:
    return isinstance(spec, (MomentExpr, InvariantExpr))


def is_real_kind(spec: SymbolSpec) -> bool:
    """True for moment/invariant symbols and for phase sums closed under term conjugation."""
    if is_invariant_kind(spec):
        return True
    pairs = {}
    for t in spec.terms:
        pairs[(t.alpha, t.beta)] = pairs.get((t.alpha, t.beta), 0) + t.coef
    return all(
        abs(np.conj(c) - pairs.get((b, a), 0)) <= 1e-15 * max(1.0, abs(c)) for (a, b), c in pairs.items()
    )


# Bounded moment expressions used as the test catalogue.
MOMENT_CATALOG = ("1", "s/(s-1)", "1/(1-s)", "exp(s)", "1/(1+s^2)", "s/(1+s^2)")
