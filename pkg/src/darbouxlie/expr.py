"""Scalar expressions over chart coordinates.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := atom ("^" atom)? | "-" factor
    atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"

Compiled expressions evaluate on batches ``(..., n)`` of points.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import ExpressionError, ParseError, ResolveError

FUNCTIONS: dict[str, tuple[Callable, int]] = {
    "sin": (np.sin, 1),
    "cos": (np.cos, 1),
    "tan": (np.tan, 1),
    "exp": (np.exp, 1),
    "log": (np.log, 1),
    "sqrt": (np.sqrt, 1),
    "abs": (np.abs, 1),
    "min": (np.minimum, -1),
    "max": (np.maximum, -1),
}
CONSTANTS = {"pi": np.pi}
ZERO_DIVISOR = 1e-300

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)"
                    r"|(?P<op>[-+*/^(),]))")
_ATOM_START = ("number", "identifier", "'('")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, Bin, Call]


def _tokenize(src: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos == len(src):
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte(src, pos),
                             ("operator", "number", "identifier"))
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _byte(src, pos):
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected):
        kind, text, pos = self.tok
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"expected {', '.join(sorted(expected))}; found {found}",
                         _byte(self.src, pos), expected)

    def is_op(self, *ops):
        return self.tok[0] == "op" and self.tok[1] in ops

    def take(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, op, also=()):
        if not self.is_op(op):
            self.fail((f"'{op}'",) + tuple(also))
        self.take()

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            self.fail(("end of input", "'+'", "'-'", "'*'", "'/'", "'^'"))
        return node

    def expr(self):
        node = self.term()
        while self.is_op("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.is_op("*", "/"):
            op = self.take()[1]
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        if self.is_op("-"):
            self.take()
            return Neg(self.factor())
        node = self.atom(("'-'",))
        if self.is_op("^"):
            self.take()
            node = Bin("^", node, self.atom())
        return node

    def atom(self, extra=()):
        kind, text, _ = self.tok
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "ident":
            self.take()
            if not self.is_op("("):
                return Var(text)
            self.take()
            args = [self.expr()]
            while self.is_op(","):
                self.take()
                args.append(self.expr())
            self.expect(")", ("','",))
            return Call(text, tuple(args))
        if self.is_op("("):
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(_ATOM_START + tuple(extra))


def parse_expression(src: str) -> Node:
    """Parse ``src`` to an AST; raises :class:`ParseError` with byte offset and expected set."""
    return _Parser(src).parse()


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def unparse(node: Node) -> str:
    """Canonical text for ``node``; parsing it back yields an equal AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(unparse(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = unparse(node.operand)
        if isinstance(node.operand, Bin) and node.operand.op != "^":
            inner = f"({inner})"
        return f"-{inner}"
    if node.op == "^":
        return f"{_wrap_atom(node.left)}^{_wrap_atom(node.right)}"
    p = _PRECEDENCE[node.op]
    left = unparse(node.left)
    if isinstance(node.left, Bin) and _PRECEDENCE[node.left.op] < p:
        left = f"({left})"
    right = unparse(node.right)
    if isinstance(node.right, Bin) and _PRECEDENCE[node.right.op] <= p:
        right = f"({right})"
    elif isinstance(node.right, Neg) and p >= 1:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def _wrap_atom(node):
    text = unparse(node)
    if isinstance(node, (Num, Var, Call)) and not text.startswith("-"):
        return text
    return f"({text})"


def free_variables(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Bin):
        return free_variables(node.left) | free_variables(node.right)
    out = set()
    for a in node.args:
        out |= free_variables(a)
    return out


def coordinate_names(n: int) -> dict:
    """``x1..xn`` plus ``x, y, z`` aliases when ``n <= 3``."""
    names = {f"x{i + 1}": i for i in range(n)}
    if n <= 3:
        names.update({a: i for i, a in enumerate("xyz"[:n])})
    return names


def _divide(num, den):
    if np.any(np.abs(den) < ZERO_DIVISOR):
        raise ExpressionError("division by zero")
    return num / den


_NAMESPACE = {"_div": _divide, "_pow": np.power,
              **{f"_f_{k}": fn for k, (fn, _) in FUNCTIONS.items()}}


def _codegen(node: Node, coords: Mapping[str, int], params: Mapping[str, float]) -> str:
    """Python source for ``node`` in terms of the point array ``x``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        if node.name in coords:
            return f"x[..., {coords[node.name]}]"
        if node.name in params:
            return repr(float(params[node.name]))
        if node.name in CONSTANTS:
            return repr(CONSTANTS[node.name])
        raise ResolveError(node.name, "expression variable")
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand, coords, params)})"
    if isinstance(node, Call):
        if node.name not in FUNCTIONS:
            raise ResolveError(node.name, "function")
        arity = FUNCTIONS[node.name][1]
        args = [_codegen(a, coords, params) for a in node.args]
        if arity > 0 and len(args) != arity:
            raise ExpressionError(f"{node.name} takes {arity} argument(s), got {len(args)}")
        out = args[0]
        if arity < 0:
            for arg in args[1:]:
                out = f"_f_{node.name}({out}, {arg})"
            return out
        return f"_f_{node.name}({out})"
    left, right = _codegen(node.left, coords, params), _codegen(node.right, coords, params)
    if node.op == "/":
        return f"_div({left}, {right})"
    if node.op == "^":
        return f"_pow({left}, {right})"
    return f"({left} {node.op} {right})"


def _compile_components(nodes, dim, params):
    coords = coordinate_names(dim)
    lines = ["def _fn(x):", f"    out = _empty(x.shape[:-1] + ({len(nodes)},))"]
    lines += [f"    out[..., {i}] = {_codegen(nd, coords, params)}" for i, nd in enumerate(nodes)]
    lines.append("    return out")
    scope = dict(_NAMESPACE, _empty=np.empty)
    exec("\n".join(lines), scope)  # noqa: S102 - source generated from a validated AST
    return scope["_fn"]


def _evaluate(fn, x):
    with np.errstate(all="ignore"):
        out = fn(x)
    if not np.isfinite(out).all():
        raise ExpressionError("expression produced a non-finite value")
    return out


@dataclass(frozen=True, eq=False)
class Expression:
    """A parsed, resolved scalar expression on an ``n``-dimensional chart."""

    source: str
    ast: Node
    dim: int
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_fn", _compile_components([self.ast], self.dim,
                                                            dict(self.params)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ExpressionError(f"expected points of dimension {self.dim}")
        return _evaluate(self._fn, x)[..., 0]

    def canonical(self) -> str:
        return unparse(self.ast)


def compile_expression(src: str, dim: int, params: Mapping[str, float] | None = None) -> Expression:
    """Parse and resolve ``src`` for a ``dim``-dimensional chart."""
    return Expression(src, parse_expression(src), dim, tuple(sorted((params or {}).items())))


def compile_vector(srcs: Sequence[str], dim: int, params=None):
    """Component expressions as a batched map ``(..., dim) -> (..., len(srcs))``."""
    exprs = [compile_expression(s, dim, params) for s in srcs]
    fn = _compile_components([e.ast for e in exprs], dim, dict(params or {}))

    def f(x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != dim:
            raise ExpressionError(f"expected points of dimension {dim}")
        return _evaluate(fn, x)

    f.expressions = exprs
    return f
