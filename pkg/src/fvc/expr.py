"""Expression language for Lagrangians L(t, x, y) and terminants l(a, b).

A small recursive-descent grammar (precedence: ^ right-assoc, then unary
minus, then * /, then + -) over the variables t, x1..xn, y1..yn and the
terminant arguments a1..an, b1..bn.  First and second partial
derivatives are exact to roundoff: evaluation runs in a second-order
truncated Taylor (hyper-dual) arithmetic, so the coefficient
matrices L_yy, L_xy, L_xx come out symmetric by construction with no
finite differencing and no symbolic expression swell.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import digamma, gamma as _sp_gamma, polygamma

from .errors import DimensionError, EvalError, ParseError

__all__ = [
    "Expr",
    "parse",
    "evaluate",
    "eval_jet2",
    "terminant_jet2",
    "to_string",
]

FUNCTIONS = {"sin", "cos", "exp", "log", "sqrt", "abs", "pow", "gamma"}

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 't', 'x', 'y', 'a', 'b'
    index: int  # 0 for t, else 1-based


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Num | Var | Bin | Neg | Call


@dataclass(frozen=True)
class Expr:
    """A parsed expression bound to a state dimension."""

    root: Node
    n: int

    def variables(self) -> set[tuple[str, int]]:
        out: set[tuple[str, int]] = set()
        _collect_vars(self.root, out)
        return out

    def __str__(self) -> str:
        return to_string(self)


def _collect_vars(node: Node, out: set[tuple[str, int]]) -> None:
    if isinstance(node, Var):
        out.add((node.kind, node.index))
    elif isinstance(node, Bin):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)
    elif isinstance(node, Neg):
        _collect_vars(node.operand, out)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_vars(a, out)


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_VAR_RE = re.compile(r"^([xyab])([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                at = len(text) - len(stripped)
                raise ParseError(f"unexpected character {stripped[0]!r}", at)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str, int] | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.next()
        if tok is None or tok[0] != "op" or tok[1] != op:
            at = tok[2] if tok else len(self.text)
            raise ParseError(f"expected {op!r}", at, expected={op})

    def at_end_offset(self) -> int:
        return len(self.text)

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> Node:
        node = self.parse_term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.next()
                node = Bin(tok[1], node, self.parse_term())
            else:
                return node

    # term := factor (('*'|'/') factor)*
    def parse_term(self) -> Node:
        node = self.parse_factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "*/":
                self.next()
                node = Bin(tok[1], node, self.parse_factor())
            else:
                return node

    # factor := '-' factor | power
    def parse_factor(self) -> Node:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "-":
            self.next()
            return Neg(self.parse_factor())
        return self.parse_power()

    # power := atom ('^' factor)?   (right associative)
    def parse_power(self) -> Node:
        base = self.parse_atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.next()
            return Bin("^", base, self.parse_factor())
        return base

    def parse_atom(self) -> Node:
        tok = self.next()
        if tok is None:
            raise ParseError(
                "unexpected end of input",
                self.at_end_offset(),
                expected={"number", "identifier", "("},
            )
        kind, value, offset = tok
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt and nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", offset)
                self.next()
                args = [self.parse_expr()]
                while True:
                    sep = self.peek()
                    if sep and sep[0] == "op" and sep[1] == ",":
                        self.next()
                        args.append(self.parse_expr())
                    else:
                        break
                self.expect_op(")")
                arity = 2 if value == "pow" else 1
                if len(args) != arity:
                    raise ParseError(
                        f"{value} takes {arity} argument(s), got {len(args)}", offset
                    )
                if value == "pow":
                    return Bin("^", args[0], args[1])
                return Call(value, tuple(args))
            return self._make_var(value, offset)
        if kind == "op" and value == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"unexpected token {value!r}", offset, expected={"number", "identifier", "("}
        )

    def _make_var(self, name: str, offset: int) -> Var:
        if name == "t":
            return Var("t", 0)
        m = _VAR_RE.match(name)
        if m is None:
            raise ParseError(f"unknown identifier {name!r}", offset)
        kind, idx = m.group(1), int(m.group(2))
        if idx > self.n:
            raise DimensionError(
                f"variable {name!r} exceeds declared state dimension {self.n}"
            )
        return Var(kind, idx)


def parse(text: str, n: int) -> Expr:
    """Parse an expression over t, x1..xn, y1..yn, a1..an, b1..bn."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, n)
    root = p.parse_expr()
    tok = p.peek()
    if tok is not None:
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    return Expr(root=root, n=n)


# ---------------------------------------------------------------------------
# Printing (canonical, minimally parenthesized)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        v = node.value
        return (repr(int(v)) if v == int(v) and abs(v) < 1e16 else repr(v), _PREC["atom"])
    if isinstance(node, Var):
        return ("t" if node.kind == "t" else f"{node.kind}{node.index}", _PREC["atom"])
    if isinstance(node, Neg):
        s, p = _fmt(node.operand)
        if p < _PREC["neg"]:
            s = f"({s})"
        return (f"-{s}", _PREC["neg"])
    if isinstance(node, Call):
        return (f"{node.func}({', '.join(_fmt(a)[0] for a in node.args)})", _PREC["atom"])
    assert isinstance(node, Bin)
    lp = rp = _PREC[node.op]
    ls, lq = _fmt(node.left)
    rs, rq = _fmt(node.right)
    # left-assoc for + - * /: right operand needs parens at equal precedence
    if node.op == "^":
        if lq <= lp:  # '^' is right-assoc: parenthesize an exponent-like left side
            ls = f"({ls})"
        if rq < rp:
            rs = f"({rs})"
    else:  # left-assoc + - * /
        if lq < lp:
            ls = f"({ls})"
        if rq < rp or (rq == rp and node.op in "-/"):
            rs = f"({rs})"
    return (f"{ls} {node.op} {rs}", _PREC[node.op])


def to_string(e: Expr) -> str:
    return _fmt(e.root)[0]


# ---------------------------------------------------------------------------
# Plain evaluation


def _eval_node(node: Node, env: dict[tuple[str, int], float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[(node.kind, node.index)]
    if isinstance(node, Neg):
        return -_eval_node(node.operand, env)
    if isinstance(node, Call):
        u = _eval_node(node.args[0], env)
        return _apply_scalar(node.func, u, node)
    assert isinstance(node, Bin)
    a = _eval_node(node.left, env)
    b = _eval_node(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b == 0.0:
            raise EvalError("division by zero", _fmt(node)[0])
        return a / b
    # '^'
    if a < 0.0 and b != int(b):
        raise EvalError("negative base with non-integer exponent", _fmt(node)[0])
    if a == 0.0 and b < 0.0:
        raise EvalError("zero base with negative exponent", _fmt(node)[0])
    return a**b


def _apply_scalar(func: str, u: float, node: Node) -> float:
    if func == "sin":
        return math.sin(u)
    if func == "cos":
        return math.cos(u)
    if func == "exp":
        return math.exp(u)
    if func == "log":
        if u <= 0.0:
            raise EvalError(f"log of non-positive value {u}", _fmt(node)[0])
        return math.log(u)
    if func == "sqrt":
        if u < 0.0:
            raise EvalError(f"sqrt of negative value {u}", _fmt(node)[0])
        return math.sqrt(u)
    if func == "abs":
        return abs(u)
    if func == "gamma":
        if u <= 0.0:
            raise EvalError(f"gamma of non-positive value {u}", _fmt(node)[0])
        return math.gamma(u)
    raise EvalError(f"unknown function {func}", _fmt(node)[0])


def _build_env(
    e: Expr,
    t: float,
    x: Sequence[float],
    y: Sequence[float],
    a: Sequence[float] = (),
    b: Sequence[float] = (),
) -> dict[tuple[str, int], float]:
    env: dict[tuple[str, int], float] = {("t", 0): float(t)}
    for kind, vec in (("x", x), ("y", y), ("a", a), ("b", b)):
        for i, v in enumerate(vec, start=1):
            env[(kind, i)] = float(v)
    for kind, idx in e.variables():
        if (kind, idx) not in env:
            raise DimensionError(f"no value supplied for variable {kind}{idx or ''}")
    return env


def evaluate(
    e: Expr,
    t: float = 0.0,
    x: Sequence[float] = (),
    y: Sequence[float] = (),
    a: Sequence[float] = (),
    b: Sequence[float] = (),
) -> float:
    """IEEE-double evaluation; domain violations raise EvalError."""
    return float(_eval_node(e.root, _build_env(e, t, x, y, a, b)))


# ---------------------------------------------------------------------------
# Second-order jets


class _Jet:
    """Truncated second-order Taylor value: v + g.ds + 1/2 ds.H.ds."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: float, g: np.ndarray, h: np.ndarray):
        self.v = v
        self.g = g
        self.h = h

    @staticmethod
    def const(v: float, m: int) -> "_Jet":
        return _Jet(v, np.zeros(m), np.zeros((m, m)))

    @staticmethod
    def seed(v: float, m: int, direction: int) -> "_Jet":
        g = np.zeros(m)
        g[direction] = 1.0
        return _Jet(v, g, np.zeros((m, m)))

    def __add__(self, o: "_Jet") -> "_Jet":
        return _Jet(self.v + o.v, self.g + o.g, self.h + o.h)

    def __sub__(self, o: "_Jet") -> "_Jet":
        return _Jet(self.v - o.v, self.g - o.g, self.h - o.h)

    def __neg__(self) -> "_Jet":
        return _Jet(-self.v, -self.g, -self.h)

    def __mul__(self, o: "_Jet") -> "_Jet":
        cross = np.outer(self.g, o.g)
        return _Jet(
            self.v * o.v,
            self.v * o.g + o.v * self.g,
            self.v * o.h + o.v * self.h + cross + cross.T,
        )

    def __truediv__(self, o: "_Jet") -> "_Jet":
        w = self.v / o.v
        g = (self.g - w * o.g) / o.v
        cross = np.outer(g, o.g)
        h = (self.h - w * o.h - cross - cross.T) / o.v
        return _Jet(w, g, h)

    def chain(self, f0: float, f1: float, f2: float) -> "_Jet":
        return _Jet(f0, f1 * self.g, f1 * self.h + f2 * np.outer(self.g, self.g))


def _jet_node(node: Node, env: dict[tuple[str, int], _Jet], m: int) -> _Jet:
    if isinstance(node, Num):
        return _Jet.const(node.value, m)
    if isinstance(node, Var):
        return env[(node.kind, node.index)]
    if isinstance(node, Neg):
        return -_jet_node(node.operand, env, m)
    if isinstance(node, Call):
        u = _jet_node(node.args[0], env, m)
        return _jet_call(node.func, u, node)
    assert isinstance(node, Bin)
    a = _jet_node(node.left, env, m)
    if node.op == "^":
        return _jet_pow(a, node.right, env, m, node)
    b = _jet_node(node.right, env, m)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b.v == 0.0:
        raise EvalError("division by zero", _fmt(node)[0])
    return a / b


def _jet_pow(base: _Jet, exp_node: Node, env, m: int, node: Node) -> _Jet:
    e = _jet_node(exp_node, env, m)
    if np.any(e.g) or np.any(e.h):
        # genuinely variable exponent: u^w = exp(w log u), needs u > 0
        if base.v <= 0.0:
            raise EvalError("variable exponent requires positive base", _fmt(node)[0])
        lg = base.chain(math.log(base.v), 1.0 / base.v, -1.0 / base.v**2)
        w = e * lg
        return w.chain(math.exp(w.v), math.exp(w.v), math.exp(w.v))
    p = e.v
    u = base.v
    if u < 0.0 and p != int(p):
        raise EvalError("negative base with non-integer exponent", _fmt(node)[0])
    if u == 0.0:
        if p < 0.0:
            raise EvalError("zero base with negative exponent", _fmt(node)[0])
        f0 = 0.0 if p > 0.0 else 1.0
        f1 = 1.0 if p == 1.0 else (0.0 if p > 1.0 or p == 0.0 else math.inf)
        f2 = 2.0 if p == 2.0 else (0.0 if p > 2.0 or p in (0.0, 1.0) else math.inf)
        if math.isinf(f1) or math.isinf(f2):
            raise EvalError("non-differentiable power at zero base", _fmt(node)[0])
        return base.chain(f0, f1, f2)
    return base.chain(u**p, p * u ** (p - 1.0), p * (p - 1.0) * u ** (p - 2.0))


def _jet_call(func: str, u: _Jet, node: Node) -> _Jet:
    v = u.v
    if func == "sin":
        return u.chain(math.sin(v), math.cos(v), -math.sin(v))
    if func == "cos":
        return u.chain(math.cos(v), -math.sin(v), -math.cos(v))
    if func == "exp":
        ev = math.exp(v)
        return u.chain(ev, ev, ev)
    if func == "log":
        if v <= 0.0:
            raise EvalError(f"log of non-positive value {v}", _fmt(node)[0])
        return u.chain(math.log(v), 1.0 / v, -1.0 / v**2)
    if func == "sqrt":
        if v <= 0.0:
            raise EvalError(f"sqrt requires positive argument for derivatives, got {v}", _fmt(node)[0])
        s = math.sqrt(v)
        return u.chain(s, 0.5 / s, -0.25 / (s * v))
    if func == "abs":
        if v == 0.0:
            raise EvalError("abs is not differentiable at 0", _fmt(node)[0])
        sign = 1.0 if v > 0.0 else -1.0
        return u.chain(abs(v), sign, 0.0)
    if func == "gamma":
        if v <= 0.0:
            raise EvalError(f"gamma of non-positive value {v}", _fmt(node)[0])
        gv = float(_sp_gamma(v))
        psi0 = float(digamma(v))
        psi1 = float(polygamma(1, v))
        return u.chain(gv, gv * psi0, gv * (psi0**2 + psi1))
    raise EvalError(f"unknown function {func}", _fmt(node)[0])


def _jet_env(e: Expr, kinds: tuple[tuple[str, Sequence[float]], ...]) -> tuple[dict, int]:
    m = sum(1 if kind == "t" else len(vec) for kind, vec in kinds)
    env: dict[tuple[str, int], _Jet] = {}
    d = 0
    for kind, vec in kinds:
        if kind == "t":
            env[("t", 0)] = _Jet.seed(float(vec[0]), m, d)
            d += 1
        else:
            for i, v in enumerate(vec, start=1):
                env[(kind, i)] = _Jet.seed(float(v), m, d)
                d += 1
    for kind, idx in e.variables():
        if (kind, idx) not in env:
            raise DimensionError(f"variable {kind}{idx or ''} not available in this context")
    return env, m


def eval_jet2(e: Expr, t: float, x: Sequence[float], y: Sequence[float]):
    """Value, exact gradients and Hessian blocks of L(t, x, y).

    Returns (value, grad_x, grad_y, H_xx, H_xy, H_yy); directions are
    ordered (t, x, y) internally and the t-row is discarded.
    """
    n = len(x)
    env, m = _jet_env(e, (("t", [t]), ("x", x), ("y", y)))
    jet = _jet_node(e.root, env, m)
    ix = slice(1, 1 + n)
    iy = slice(1 + n, 1 + 2 * n)
    return (
        jet.v,
        jet.g[ix].copy(),
        jet.g[iy].copy(),
        jet.h[ix, ix].copy(),
        jet.h[ix, iy].copy(),
        jet.h[iy, iy].copy(),
    )


def terminant_jet2(e: Expr, a: Sequence[float], b: Sequence[float]):
    """Value, gradients and Hessian blocks of the terminant l(a, b).

    Returns (value, grad_a, grad_b, H_aa, H_ab, H_bb).
    """
    n = len(a)
    env, m = _jet_env(e, (("a", a), ("b", b)))
    jet = _jet_node(e.root, env, m)
    ia = slice(0, n)
    ib = slice(n, 2 * n)
    return (
        jet.v,
        jet.g[ia].copy(),
        jet.g[ib].copy(),
        jet.h[ia, ia].copy(),
        jet.h[ia, ib].copy(),
        jet.h[ib, ib].copy(),
    )
