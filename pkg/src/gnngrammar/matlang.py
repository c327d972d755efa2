"""MATLANG expressions: S-expression syntax, shape inference and evaluation over a graph.

Concrete syntax::

    expr  := "(" op expr* ")" | atom
    atom  := A | I | J | one
    op    := mul | add | hadamard | transpose | trace | diag
           | smul <literal> | f:<name>

Expressions also compose with Python operators: ``@`` is the matrix product,
``*`` the Hadamard product (or scalar multiplication when one side is a
number), ``+``/``-`` addition, and ``.T`` the transpose.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import Graph, matrices


class Shape(enum.Enum):
    SCALAR = "scalar"
    COLVEC = "colvec"
    ROWVEC = "rowvec"
    MATRIX = "matrix"


class MatlangSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class ShapeError(TypeError):
    """Operand shapes violate the closure table; ``subtree`` is the offending node."""

    def __init__(self, message: str, subtree: Expr):
        super().__init__(f"{message}: {to_sexpr(subtree)}")
        self.subtree = subtree


# pointwise registry --------------------------------------------------------


def _recip_sqrt(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = 1.0 / np.sqrt(x[pos])
    return out


POINTWISE: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": lambda x: np.maximum(x, 0.0),
    "sign": np.sign,
    "gtzero": lambda x: (x > 0).astype(np.float64),
    "recip_sqrt": _recip_sqrt,
}
for _k in range(1, 10):
    POINTWISE[f"pow{_k}"] = lambda x, _k=_k: x**_k


# AST -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False, repr=False)
class Expr:
    """Immutable AST node with a structural hash computed once at construction."""

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__, self._key())))

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and self._hash == other._hash and self._key() == other._key()

    def __repr__(self):
        return f"Expr({to_sexpr(self)})"

    # operator sugar
    def __matmul__(self, other):
        return MatMul(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return ScalarMul(float(other), self)
        return Hadamard(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return ScalarMul(float(other), self)
        return NotImplemented

    def __add__(self, other):
        return Add(self, other)

    def __sub__(self, other):
        return Add(self, ScalarMul(-1.0, other))

    def __neg__(self):
        return ScalarMul(-1.0, self)

    @property
    def T(self):
        return Transpose(self)


@dataclass(frozen=True, eq=False, repr=False)
class Terminal(Expr):
    name: str  # "A" | "I" | "J" | "one"

    def __post_init__(self):
        if self.name not in TERMINAL_SHAPES:
            raise ValueError(f"unknown terminal {self.name!r}")
        super().__post_init__()

    def _key(self):
        return (self.name,)


@dataclass(frozen=True, eq=False, repr=False)
class _Binary(Expr):
    left: Expr
    right: Expr

    def _key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)


class MatMul(_Binary):
    pass


class Add(_Binary):
    pass


class Hadamard(_Binary):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class _Unary(Expr):
    operand: Expr

    def _key(self):
        return (self.operand,)

    def children(self):
        return (self.operand,)


class Transpose(_Unary):
    pass


class Trace(_Unary):
    pass


class Diag(_Unary):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class ScalarMul(Expr):
    scalar: float
    operand: Expr

    def _key(self):
        return (self.scalar, self.operand)

    def children(self):
        return (self.operand,)


@dataclass(frozen=True, eq=False, repr=False)
class Pointwise(Expr):
    fn: str
    operand: Expr

    def __post_init__(self):
        if self.fn not in POINTWISE:
            raise ValueError(f"unknown pointwise function {self.fn!r}")
        super().__post_init__()

    def _key(self):
        return (self.fn, self.operand)

    def children(self):
        return (self.operand,)


TERMINAL_SHAPES = {"A": Shape.MATRIX, "I": Shape.MATRIX, "J": Shape.MATRIX, "one": Shape.COLVEC}

A = Terminal("A")
I = Terminal("I")
J = Terminal("J")
ONE = Terminal("one")


def diag(e: Expr) -> Diag:
    return Diag(e)


def trace(e: Expr) -> Trace:
    return Trace(e)


def pointwise(fn: str, e: Expr) -> Pointwise:
    return Pointwise(fn, e)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in e.children())


# printing and parsing ------------------------------------------------------

_BINARY_OPS = {MatMul: "mul", Add: "add", Hadamard: "hadamard"}
_UNARY_OPS = {Transpose: "transpose", Trace: "trace", Diag: "diag"}
_OP_CLASSES = {v: k for k, v in {**_BINARY_OPS, **_UNARY_OPS}.items()}


def to_sexpr(e: Expr) -> str:
    if isinstance(e, Terminal):
        return e.name
    if isinstance(e, _Binary):
        return f"({_BINARY_OPS[type(e)]} {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, _Unary):
        return f"({_UNARY_OPS[type(e)]} {to_sexpr(e.operand)})"
    if isinstance(e, ScalarMul):
        return f"(smul {e.scalar!r} {to_sexpr(e.operand)})"
    if isinstance(e, Pointwise):
        return f"(f:{e.fn} {to_sexpr(e.operand)})"
    raise TypeError(f"not an expression: {e!r}")


def _tokenize(text: str):
    """Yield ``(token, line, column)``; columns are 1-based."""
    line, col = 1, 1
    buf, start = [], (1, 1)
    for ch in text:
        if ch in "()" or ch.isspace():
            if buf:
                yield "".join(buf), *start
                buf = []
            if ch in "()":
                yield ch, line, col
        else:
            if not buf:
                start = (line, col)
            buf.append(ch)
        if ch == "\n":
            line, col = line + 1, 1
        else:
            col += 1
    if buf:
        yield "".join(buf), *start


_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$")


def parse_expr(text: str) -> Expr:
    tokens = list(_tokenize(text))
    if not tokens:
        raise MatlangSyntaxError("empty expression", 1, 1)
    pos = 0

    def expect_more(where):
        if pos >= len(tokens):
            tok, line, col = tokens[-1]
            raise MatlangSyntaxError(f"unbalanced parenthesis: input ends inside {where}", line, col + len(tok))

    def parse():
        nonlocal pos
        expect_more("an expression")
        tok, line, col = tokens[pos]
        pos += 1
        if tok == ")":
            raise MatlangSyntaxError("unexpected ')'", line, col)
        if tok != "(":
            if tok in TERMINAL_SHAPES:
                return Terminal(tok)
            raise MatlangSyntaxError(f"unknown symbol {tok!r}", line, col)
        expect_more(f"'(' opened")
        op, oline, ocol = tokens[pos]
        pos += 1
        if op in ("(", ")"):
            raise MatlangSyntaxError("expected an operator after '('", oline, ocol)
        if op == "smul":
            expect_more("smul")
            lit, lline, lcol = tokens[pos]
            if not _NUMBER_RE.match(lit):
                raise MatlangSyntaxError(f"smul expects a numeric literal, got {lit!r}", lline, lcol)
            pos += 1
            args = [parse()]
            node = ScalarMul(float(lit), args[0])
        elif op.startswith("f:"):
            name = op[2:]
            if name not in POINTWISE:
                raise MatlangSyntaxError(f"unknown pointwise function {name!r}", oline, ocol)
            args = [parse()]
            node = Pointwise(name, args[0])
        elif op in _OP_CLASSES:
            cls = _OP_CLASSES[op]
            arity = 2 if cls in _BINARY_OPS else 1
            args = []
            while True:
                expect_more(f"({op} ...)")
                if tokens[pos][0] == ")":
                    break
                args.append(parse())
            if len(args) != arity:
                raise MatlangSyntaxError(f"{op} takes {arity} operand(s), got {len(args)}", oline, ocol)
            node = cls(*args)
        else:
            raise MatlangSyntaxError(f"unknown operator {op!r}", oline, ocol)
        expect_more(f"({op} ...)")
        tok, cline, ccol = tokens[pos]
        if tok != ")":
            raise MatlangSyntaxError(f"expected ')' to close {op}, got {tok!r}", cline, ccol)
        pos += 1
        return node

    expr = parse()
    if pos != len(tokens):
        tok, line, col = tokens[pos]
        raise MatlangSyntaxError(f"unexpected trailing token {tok!r}", line, col)
    return expr


# shapes --------------------------------------------------------------------

_S, _C, _R, _M = Shape.SCALAR, Shape.COLVEC, Shape.ROWVEC, Shape.MATRIX
_MATMUL = {
    (_M, _M): _M,
    (_M, _C): _C,
    (_R, _M): _R,
    (_R, _C): _S,
    (_C, _R): _M,
    (_C, _S): _C,
    (_S, _R): _R,
    (_S, _S): _S,
}
_TRANSPOSE = {_S: _S, _C: _R, _R: _C, _M: _M}


def infer_shape(e: Expr, _memo: dict | None = None) -> Shape:
    """Shape class of ``e`` per the closure table; raises ShapeError naming the offending subtree."""
    memo = {} if _memo is None else _memo
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if node in memo:
            continue
        if not ready:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children() if c not in memo)
            continue
        memo[node] = _node_shape(node, memo)
    return memo[e]


def _node_shape(e: Expr, memo: dict) -> Shape:
    if isinstance(e, Terminal):
        return TERMINAL_SHAPES[e.name]
    if isinstance(e, MatMul):
        key = (memo[e.left], memo[e.right])
        if key not in _MATMUL:
            raise ShapeError(f"cannot multiply {key[0].value} by {key[1].value}", e)
        return _MATMUL[key]
    if isinstance(e, (Add, Hadamard)):
        ls, rs = memo[e.left], memo[e.right]
        if ls is not rs:
            op = "add" if isinstance(e, Add) else "hadamard"
            raise ShapeError(f"{op} needs equal shapes, got {ls.value} and {rs.value}", e)
        return ls
    if isinstance(e, Transpose):
        return _TRANSPOSE[memo[e.operand]]
    if isinstance(e, Trace):
        s = memo[e.operand]
        if s not in (_M, _S):
            raise ShapeError(f"trace of a {s.value}", e)
        return _S
    if isinstance(e, Diag):
        s = memo[e.operand]
        if s is _C:
            return _M
        if s is _S:
            return _S
        raise ShapeError(f"diag of a {s.value}", e)
    if isinstance(e, (ScalarMul, Pointwise)):
        return memo[e.operand]
    raise TypeError(f"not an expression: {e!r}")


# evaluation ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Value:
    """Evaluation result; ``data`` is always 2-D: 1x1, n x 1, 1 x n or n x n."""

    shape: Shape
    data: np.ndarray

    def item(self) -> float:
        if self.shape is not Shape.SCALAR:
            raise ValueError(f"not a scalar: {self.shape.value}")
        return float(self.data[0, 0])

    def vector(self) -> np.ndarray:
        if self.shape not in (Shape.COLVEC, Shape.ROWVEC):
            raise ValueError(f"not a vector: {self.shape.value}")
        return self.data.ravel()

    def matrix(self) -> np.ndarray:
        if self.shape is not Shape.MATRIX:
            raise ValueError(f"not a matrix: {self.shape.value}")
        return self.data

    def to_python(self):
        if self.shape is Shape.SCALAR:
            return self.item()
        if self.shape is Shape.MATRIX:
            return self.data.tolist()
        return self.vector().tolist()


class Evaluator:
    """Evaluates expressions over one graph, memoizing every subtree it has seen.

    Reusing one evaluator across many expressions (e.g. a grammar's sentences)
    shares work between common subtrees.
    """

    def __init__(self, g: Graph):
        self.graph = g
        A_, I_, J_, _ = matrices(g)
        self._terminals = {"A": A_, "I": I_, "J": J_, "one": np.ones((g.n, 1))}
        self._cache: dict[Expr, np.ndarray] = {}
        self._shapes: dict[Expr, Shape] = {}

    def __call__(self, e: Expr) -> Value:
        shape = infer_shape(e, self._shapes)
        return Value(shape, self._eval(e))

    def _eval(self, e: Expr) -> np.ndarray:
        hit = self._cache.get(e)
        if hit is not None:
            return hit
        # iterative post-order walk; deep grammar sentences overflow recursion
        stack = [(e, False)]
        while stack:
            node, ready = stack.pop()
            if node in self._cache:
                continue
            if not ready:
                stack.append((node, True))
                stack.extend((c, False) for c in node.children() if c not in self._cache)
                continue
            self._cache[node] = self._apply(node)
        return self._cache[e]

    def _apply(self, e: Expr) -> np.ndarray:
        c = self._cache
        if isinstance(e, Terminal):
            out = self._terminals[e.name]
        elif isinstance(e, MatMul):
            l, r = c[e.left], c[e.right]
            out = l * r if l.shape == (1, 1) or r.shape == (1, 1) else l @ r
        elif isinstance(e, Add):
            out = c[e.left] + c[e.right]
        elif isinstance(e, Hadamard):
            out = c[e.left] * c[e.right]
        elif isinstance(e, Transpose):
            out = c[e.operand].T
        elif isinstance(e, Trace):
            out = np.array([[np.trace(c[e.operand])]])
        elif isinstance(e, Diag):
            v = c[e.operand]
            out = v if v.shape == (1, 1) else np.diag(v.ravel())
        elif isinstance(e, ScalarMul):
            out = e.scalar * c[e.operand]
        elif isinstance(e, Pointwise):
            out = POINTWISE[e.fn](c[e.operand])
        else:
            raise TypeError(f"not an expression: {e!r}")
        out = np.asarray(out, dtype=np.float64)
        out.flags.writeable = False
        return out


def evaluate(e: Expr, g: Graph) -> Value:
    return Evaluator(g)(e)


# random well-shaped expressions --------------------------------------------


def random_expr(rng: np.random.Generator, shape: Shape, depth: int) -> Expr:
    """Random expression of the requested shape class with height at most ``depth``.

    Used to exercise the shape system: every operator of the closure table
    can appear, including pointwise functions and scalar multiplication.
    """
    if depth <= 1:
        if shape is _M:
            return Terminal(["A", "I", "J"][rng.integers(3)])
        if shape is _C:
            return ONE
        if shape is _R:
            return Transpose(ONE)
        return MatMul(Transpose(ONE), ONE)
    d = depth - 1
    choices = _PRODUCERS[shape]
    rule = choices[rng.integers(len(choices))]
    return rule(rng, d)


def _scalar_lit(rng):
    return float(rng.choice([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]))


def _pw(rng):
    names = ["relu", "sign", "gtzero", "recip_sqrt", "pow2", "pow3"]
    return names[rng.integers(len(names))]


_PRODUCERS = {
    _M: [
        lambda r, d: MatMul(random_expr(r, _M, d), random_expr(r, _M, d)),
        lambda r, d: MatMul(random_expr(r, _C, d), random_expr(r, _R, d)),
        lambda r, d: Hadamard(random_expr(r, _M, d), random_expr(r, _M, d)),
        lambda r, d: Add(random_expr(r, _M, d), random_expr(r, _M, d)),
        lambda r, d: Transpose(random_expr(r, _M, d)),
        lambda r, d: Diag(random_expr(r, _C, d)),
        lambda r, d: ScalarMul(_scalar_lit(r), random_expr(r, _M, d)),
        lambda r, d: Pointwise(_pw(r), random_expr(r, _M, d)),
    ],
    _C: [
        lambda r, d: MatMul(random_expr(r, _M, d), random_expr(r, _C, d)),
        lambda r, d: MatMul(random_expr(r, _C, d), random_expr(r, _S, d)),
        lambda r, d: Transpose(random_expr(r, _R, d)),
        lambda r, d: Hadamard(random_expr(r, _C, d), random_expr(r, _C, d)),
        lambda r, d: Add(random_expr(r, _C, d), random_expr(r, _C, d)),
        lambda r, d: ScalarMul(_scalar_lit(r), random_expr(r, _C, d)),
        lambda r, d: Pointwise(_pw(r), random_expr(r, _C, d)),
    ],
    _R: [
        lambda r, d: MatMul(random_expr(r, _R, d), random_expr(r, _M, d)),
        lambda r, d: MatMul(random_expr(r, _S, d), random_expr(r, _R, d)),
        lambda r, d: Transpose(random_expr(r, _C, d)),
        lambda r, d: Hadamard(random_expr(r, _R, d), random_expr(r, _R, d)),
        lambda r, d: ScalarMul(_scalar_lit(r), random_expr(r, _R, d)),
    ],
    _S: [
        lambda r, d: MatMul(random_expr(r, _R, d), random_expr(r, _C, d)),
        lambda r, d: MatMul(random_expr(r, _S, d), random_expr(r, _S, d)),
        lambda r, d: Trace(random_expr(r, _M, d)),
        lambda r, d: Diag(random_expr(r, _S, d)),
        lambda r, d: Hadamard(random_expr(r, _S, d), random_expr(r, _S, d)),
        lambda r, d: Add(random_expr(r, _S, d), random_expr(r, _S, d)),
        lambda r, d: Pointwise(_pw(r), random_expr(r, _S, d)),
    ],
}


def result_shape_class(value: np.ndarray, n: int) -> Shape:
    """Classify a raw 2-D result by its dimensions (ambiguous only when n == 1)."""
    rows, cols = value.shape
    if (rows, cols) == (1, 1):
        return _S
    if cols == 1:
        return _C
    if rows == 1:
        return _R
    return _M


def is_integral(x, tol: float = 1e-6) -> bool:
    arr = np.asarray(x, dtype=np.float64)
    return bool(np.all(np.isfinite(arr)) and np.all(np.abs(arr - np.round(arr)) <= tol))


__all__ = [
    "A",
    "I",
    "J",
    "ONE",
    "Add",
    "Diag",
    "Evaluator",
    "Expr",
    "Hadamard",
    "MatMul",
    "MatlangSyntaxError",
    "POINTWISE",
    "Pointwise",
    "ScalarMul",
    "Shape",
    "ShapeError",
    "Terminal",
    "Trace",
    "Transpose",
    "Value",
    "diag",
    "evaluate",
    "infer_shape",
    "parse_expr",
    "pointwise",
    "random_expr",
    "result_shape_class",
    "size",
    "to_sexpr",
    "trace",
]
