"""Closed-form substructure counts at edge, node and graph level, plus brute-force oracles.

Every closed form is a MATLANG expression in A, I, J and 1, evaluated by the
interpreter; ``(A²>0)`` is the ``gtzero`` pointwise function. The oracles
enumerate simple paths, simple cycles and chordal cycles explicitly and share
no code with the formulas.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import matlang as ml
from .graph import Graph
from .matlang import A, I, J, ONE, Diag, Expr, pointwise

INTEGRALITY_TOL = 1e-6
ORACLE_MAX_N = 14
LEVELS = ("edge", "node", "graph")


class IntegralityError(ArithmeticError):
    """A count came out further than the tolerance from an integer."""


@dataclass(frozen=True)
class CountKind:
    family: str  # "path", "cycle" or "chordal"
    length: int = 0

    def __post_init__(self):
        ok = (
            (self.family == "path" and 2 <= self.length <= 5)
            or (self.family == "cycle" and 3 <= self.length <= 6)
            or (self.family == "chordal" and self.length == 0)
        )
        if not ok:
            raise ValueError(f"unsupported count kind {self.name!r}")

    @property
    def name(self) -> str:
        return "chordal" if self.family == "chordal" else f"{self.family}{self.length}"

    @classmethod
    def parse(cls, text: str) -> CountKind:
        m = re.fullmatch(r"(path|cycle)(\d+)|chordal", text.strip().lower())
        if not m:
            raise ValueError(f"unknown count kind {text!r}")
        if m.group(1):
            return cls(m.group(1), int(m.group(2)))
        return cls("chordal")

    @property
    def edge_to_node(self) -> int:
        """Edges of the substructure at a counted node (path tip 1, cycle 2, chord endpoint 1)."""
        return 2 if self.family == "cycle" else 1

    @property
    def node_to_graph(self) -> int:
        """Counted nodes per substructure (2 path tips, l cycle nodes, 2 chord endpoints)."""
        return self.length if self.family == "cycle" else 2


ALL_KINDS = tuple(
    [CountKind("path", l) for l in range(2, 6)] + [CountKind("cycle", l) for l in range(3, 7)] + [CountKind("chordal")]
)


@dataclass
class CountResult:
    kind: CountKind
    level: str
    data: np.ndarray  # integer array: (n, n), (n,) or ()

    def to_dict(self) -> dict:
        key = {"edge": "matrix", "node": "vector", "graph": "value"}[self.level]
        return {"kind": self.kind.name, "level": self.level, key: self.data.tolist()}


# closed forms ------------------------------------------------------------------

A2 = A @ A
A3 = A2 @ A
DEG = A2 * I  # degree matrix
TRI = A3 * I  # twice the triangles through each node, on the diagonal


@lru_cache(maxsize=None)
def path_expr(l: int) -> Expr:
    """Matrix whose (i, j) entry counts simple paths with l edges between i and j."""
    if l == 2:
        return A2 * J
    if l == 3:
        return A3 * J - A @ DEG - DEG @ A + A
    X2, X3 = path_expr(2), path_expr(3)
    A4 = A3 @ A
    if l == 4:
        return (
            A4 * J
            - (A @ (DEG - 2 * I) @ A) * J
            - DEG @ X2
            - X2 @ DEG
            - A @ TRI
            - TRI @ A
            + 3 * (A2 * A)
        )
    if l == 5:
        A5 = A4 @ A
        D1 = DEG - I
        C4_row = (A * X3) @ ONE
        return (
            A5 * J
            - A @ DEG @ D1
            - DEG @ A @ DEG
            - D1 @ DEG @ A
            - (A @ D1 @ X2) * J
            - (X2 @ D1 @ A) * J
            - DEG @ X3
            - X3 @ D1
            - TRI @ X2
            - X2 @ TRI
            - (A @ TRI @ A) * J
            - A * A2
            + 3 * ((A @ (A * A2) + (A * A2) @ A) * J)
            - A @ Diag(C4_row)
            - Diag(C4_row) @ A
            + 3 * (A * X3)
            + 3 * (A * A2 * (A2 - pointwise("gtzero", A2)))
        )
    raise ValueError(f"path length must be in 2..5, got {l}")


def cycle_expr(l: int) -> Expr:
    """Edge-level l-cycle counts: adjacency masked onto (l-1)-path counts."""
    if not 3 <= l <= 6:
        raise ValueError(f"cycle length must be in 3..6, got {l}")
    return A * path_expr(l - 1)


# twice the edge-level chordal count
CHORDAL_TWICE = A * A2 * (A2 - pointwise("gtzero", A2))


def chordal_expr() -> Expr:
    return 0.5 * CHORDAL_TWICE


def edge_expr(kind: CountKind) -> Expr:
    if kind.family == "path":
        return path_expr(kind.length)
    if kind.family == "cycle":
        return cycle_expr(kind.length)
    return chordal_expr()


def node_expr(kind: CountKind) -> Expr:
    if kind.family == "path":
        return path_expr(kind.length) @ ONE
    if kind.family == "cycle":
        return 0.5 * (cycle_expr(kind.length) @ ONE)
    return 0.5 * (CHORDAL_TWICE @ ONE)


def graph_expr(kind: CountKind) -> Expr:
    if kind.family == "path":
        return 0.5 * (ONE.T @ path_expr(kind.length) @ ONE)
    if kind.family == "cycle":
        l = kind.length
        return (1.0 / (2 * l)) * (ONE.T @ cycle_expr(l) @ ONE)
    return 0.25 * (ONE.T @ CHORDAL_TWICE @ ONE)


def level_expr(kind: CountKind, level: str) -> Expr:
    return {"edge": edge_expr, "node": node_expr, "graph": graph_expr}[level](kind)


def _to_int(raw: np.ndarray, what: str) -> np.ndarray:
    rounded = np.round(raw)
    err = np.max(np.abs(raw - rounded)) if raw.size else 0.0
    if not np.isfinite(err) or err > INTEGRALITY_TOL:
        raise IntegralityError(f"{what}: deviation {err:.3g} from an integer exceeds {INTEGRALITY_TOL}")
    return rounded.astype(np.int64)


def count(kind: CountKind | str, level: str, g: Graph, evaluator: ml.Evaluator | None = None) -> CountResult:
    """Closed-form count; pass a shared ``evaluator`` to reuse A², X_2, ... across calls."""
    if isinstance(kind, str):
        kind = CountKind.parse(kind)
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    ev = evaluator or ml.Evaluator(g)
    value = ev(level_expr(kind, level))
    raw = value.data if level == "edge" else value.data.ravel()
    if level == "graph":
        raw = raw.reshape(())
    return CountResult(kind, level, _to_int(np.asarray(raw), f"{kind.name}/{level}"))


def path_matrix(g: Graph, l: int) -> np.ndarray:
    return count(CountKind("path", l), "edge", g).data


def cycle_edge(g: Graph, l: int) -> np.ndarray:
    return count(CountKind("cycle", l), "edge", g).data


def chordal_edge(g: Graph) -> np.ndarray:
    return count(CountKind("chordal"), "edge", g).data


def node_level(kind: CountKind | str, g: Graph) -> np.ndarray:
    return count(kind, "node", g).data


def graph_level(kind: CountKind | str, g: Graph) -> int:
    return int(count(kind, "graph", g).data)


# brute-force oracles -----------------------------------------------------------


def _neighbors(g: Graph) -> list[list[int]]:
    return [np.nonzero(row)[0].tolist() for row in g.adj]


def enumerate_paths(g: Graph, l: int) -> list[tuple[int, ...]]:
    """Simple paths with l edges, each listed once (first endpoint < last endpoint)."""
    nbrs = _neighbors(g)
    out = []

    def dfs(walk, used):
        if len(walk) == l + 1:
            if walk[0] < walk[-1]:
                out.append(tuple(walk))
            return
        for w in nbrs[walk[-1]]:
            if w not in used:
                used.add(w)
                walk.append(w)
                dfs(walk, used)
                walk.pop()
                used.discard(w)

    for s in range(g.n):
        dfs([s], {s})
    return out


def enumerate_cycles(g: Graph, l: int) -> list[tuple[int, ...]]:
    """Simple cycles with l edges, each listed once: smallest node first, then its smaller neighbour."""
    nbrs = _neighbors(g)
    out = []

    def dfs(walk, used):
        s, last = walk[0], walk[-1]
        if len(walk) == l:
            if s in nbrs[last] and walk[1] < walk[-1]:
                out.append(tuple(walk))
            return
        for w in nbrs[last]:
            if w > s and w not in used:
                used.add(w)
                walk.append(w)
                dfs(walk, used)
                walk.pop()
                used.discard(w)

    for s in range(g.n):
        dfs([s], {s})
    return out


def enumerate_chordal(g: Graph) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Chordal cycles as (chord, opposite non-edge of the 4-cycle) over all 4-node subsets.

    A 4-node subset hosts one chordal cycle per node pair whose five complementary
    pairs are all edges; that pair is the missing diagonal, the other diagonal the chord.
    """
    adj = g.adj
    out = []
    for quad in itertools.combinations(range(g.n), 4):
        pairs = list(itertools.combinations(quad, 2))
        for missing in pairs:
            if all(adj[p] for p in pairs if p != missing):
                chord = tuple(v for v in quad if v not in missing)
                out.append((chord, missing))
    return out


def oracle_count(kind: CountKind | str, level: str, g: Graph) -> CountResult:
    if isinstance(kind, str):
        kind = CountKind.parse(kind)
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    if g.n > ORACLE_MAX_N:
        raise ValueError(f"oracle enumeration supports n <= {ORACLE_MAX_N}, got {g.n}")
    n = g.n
    edge = np.zeros((n, n), dtype=np.int64)
    node = np.zeros(n, dtype=np.int64)
    if kind.family == "path":
        found = enumerate_paths(g, kind.length)
        for p in found:
            a, b = p[0], p[-1]
            edge[a, b] += 1
            edge[b, a] += 1
            node[a] += 1
            node[b] += 1
    elif kind.family == "cycle":
        found = enumerate_cycles(g, kind.length)
        for c in found:
            for a, b in zip(c, c[1:] + c[:1]):
                edge[a, b] += 1
                edge[b, a] += 1
            for v in c:
                node[v] += 1
    else:
        found = enumerate_chordal(g)
        for (a, b), _ in found:
            edge[a, b] += 1
            edge[b, a] += 1
            node[a] += 1
            node[b] += 1
    data = {"edge": edge, "node": node, "graph": np.array(len(found), dtype=np.int64)}[level]
    return CountResult(kind, level, data)


# verification sweep ----------------------------------------------------------


@dataclass
class Mismatch:
    graph_index: int
    kind: str
    level: str
    detail: str


def verification_corpus(num_graphs: int = 50, max_n: int = 12, seed: int = 1, min_n: int = 6,
                        probs=(0.3, 0.5)) -> list[tuple[int, float, int]]:
    """Seeded ``(n, p, graph_seed)`` triples for the formula/oracle sweep."""
    rng = np.random.default_rng(seed)
    return [
        (int(rng.integers(min_n, max_n + 1)), float(probs[k % len(probs)]), int(rng.integers(2**31)))
        for k in range(num_graphs)
    ]


def check_graph(g: Graph, index: int = 0) -> list[Mismatch]:
    """Compare closed forms with the oracle for every kind and level, plus the level conversions."""
    ev = ml.Evaluator(g)
    problems = []
    for kind in ALL_KINDS:
        counts = {}
        for level in LEVELS:
            try:
                got = count(kind, level, g, ev).data
            except IntegralityError as exc:
                problems.append(Mismatch(index, kind.name, level, str(exc)))
                continue
            want = oracle_count(kind, level, g).data
            counts[level] = got
            if not np.array_equal(got, want):
                problems.append(Mismatch(index, kind.name, level, f"formula {got.tolist()} != oracle {want.tolist()}"))
        if len(counts) == 3:
            edge, node, total = counts["edge"], counts["node"], counts["graph"]
            if not np.array_equal(edge.sum(axis=1), kind.edge_to_node * node):
                problems.append(Mismatch(index, kind.name, "edge->node", "row sums / e_S differ from node counts"))
            if node.sum() != kind.node_to_graph * total:
                problems.append(Mismatch(index, kind.name, "node->graph", "node sum / n_S differs from graph count"))
    return problems
