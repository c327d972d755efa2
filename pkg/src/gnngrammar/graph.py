"""Simple undirected graphs, their standard matrices, built-in test graphs and graph6 I/O."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

GRAPH6_HEADER = ">>graph6<<"


class Graph6Error(ValueError):
    """Malformed graph6 input; ``offset`` is the byte index of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph backed by a read-only dense adjacency matrix."""

    n: int
    adj: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.array(self.adj, dtype=np.float64)
        if self.n < 1:
            raise ValueError("a graph needs at least one node")
        if adj.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {adj.shape} does not match n={self.n}")
        if not np.all((adj == 0) | (adj == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        adj.flags.writeable = False
        object.__setattr__(self, "adj", adj)

    @classmethod
    def from_edges(cls, n: int, edges) -> Graph:
        adj = np.zeros((n, n))
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            adj[i, j] = adj[j, i] = 1.0
        return cls(n, adj)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.adj.tobytes()))

    @property
    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    @property
    def num_edges(self) -> int:
        return int(self.adj.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adj, 1))
        return list(zip(i.tolist(), j.tolist()))

    def relabel(self, perm) -> Graph:
        """Graph whose node ``perm[v]`` plays the role of node ``v`` here."""
        perm = np.asarray(perm)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        P = np.zeros((self.n, self.n))
        P[perm, np.arange(self.n)] = 1.0
        return Graph(self.n, P @ self.adj @ P.T)

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, data: dict) -> Graph:
        return cls.from_edges(int(data["n"]), data["edges"])


def matrices(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A, I, J, D)``; J is all-ones off the diagonal, D the degree matrix."""
    A = np.array(g.adj)
    I = np.eye(g.n)
    J = np.ones((g.n, g.n)) - I
    D = np.diag(A.sum(axis=1))
    return A, I, J, D


# graph6 ---------------------------------------------------------------------


def _encode_size(n: int) -> str:
    if n <= 62:
        return chr(n + 63)
    if n <= 258047:
        return "~" + "".join(chr(((n >> s) & 63) + 63) for s in (12, 6, 0))
    return "~~" + "".join(chr(((n >> s) & 63) + 63) for s in (30, 24, 18, 12, 6, 0))


def _sixbits(text: str, start: int, count: int) -> list[int]:
    out = []
    for k in range(start, start + count):
        if k >= len(text):
            raise Graph6Error("truncated header", k)
        v = ord(text[k]) - 63
        if not 0 <= v <= 63:
            raise Graph6Error(f"byte {text[k]!r} outside graph6 range 63..126", k)
        out.append(v)
    return out


def parse_graph6(text: str) -> Graph:
    s = text.strip()
    base = 0
    if s.startswith(GRAPH6_HEADER):
        base = len(GRAPH6_HEADER)
    if base >= len(s):
        raise Graph6Error("empty graph6 string", base)
    pos = base
    if s[pos] == "~":
        if pos + 1 < len(s) and s[pos + 1] == "~":
            vals, pos = _sixbits(s, pos + 2, 6), pos + 8
        else:
            vals, pos = _sixbits(s, pos + 1, 3), pos + 4
        n = 0
        for v in vals:
            n = (n << 6) | v
    else:
        n = _sixbits(s, pos, 1)[0]
        pos += 1
    if n == 0:
        raise Graph6Error("graph with zero nodes", base)
    nbits = n * (n - 1) // 2
    nbytes = (nbits + 5) // 6
    if len(s) - pos < nbytes:
        raise Graph6Error(f"truncated bit stream: expected {nbytes} data bytes, got {len(s) - pos}", len(s))
    if len(s) - pos > nbytes:
        raise Graph6Error("trailing data after bit stream", pos + nbytes)
    data = _sixbits(s, pos, nbytes)
    bits = np.unpackbits(np.array(data, dtype=np.uint8)[:, None], axis=1)[:, 2:].ravel()[:nbits]
    adj = np.zeros((n, n))
    # column-major upper triangle: (0,1), (0,2), (1,2), (0,3), ...
    cols = np.repeat(np.arange(n), np.arange(n))
    rows = np.concatenate([np.arange(j) for j in range(n)]) if n > 1 else np.array([], dtype=int)
    adj[rows, cols] = bits
    adj[cols, rows] = bits
    return Graph(n, adj)


def to_graph6(g: Graph) -> str:
    n = g.n
    cols = np.repeat(np.arange(n), np.arange(n))
    rows = np.concatenate([np.arange(j) for j in range(n)]) if n > 1 else np.array([], dtype=int)
    bits = g.adj[rows, cols].astype(np.uint8)
    pad = (-len(bits)) % 6
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, 6)
    values = bits @ (1 << np.arange(5, -1, -1))
    return _encode_size(n) + "".join(chr(int(v) + 63) for v in values)


def read_graph6_file(path) -> list[Graph]:
    with open(path, encoding="ascii") as fh:
        return [parse_graph6(line) for line in fh if line.strip()]


# built-in graphs --------------------------------------------------------------


def cycle(k: int) -> Graph:
    if k < 3:
        raise ValueError("cycle needs at least 3 nodes")
    return Graph.from_edges(k, [(i, (i + 1) % k) for i in range(k)])


def path(k: int) -> Graph:
    return Graph.from_edges(k, [(i, i + 1) for i in range(k - 1)])


def complete(k: int) -> Graph:
    return Graph.from_edges(k, itertools.combinations(range(k), 2))


def grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return Graph.from_edges(rows * cols, edges)


def diamond() -> Graph:
    """K4 minus the edge (2, 3); the chord is (0, 1)."""
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])


def two_triangles() -> Graph:
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def shrikhande() -> Graph:
    """Cayley graph of Z4 x Z4 with connection set {±(1,0), ±(0,1), ±(1,1)}."""
    steps = [(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)]
    edges = set()
    for a, b in itertools.product(range(4), repeat=2):
        for da, db in steps:
            u, v = 4 * a + b, 4 * ((a + da) % 4) + (b + db) % 4
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(16, sorted(edges))


def rook4x4() -> Graph:
    """Line graph of K_{4,4}: cells of a 4x4 board, adjacent when sharing a row or column."""
    k44 = [(r, c) for r in range(4) for c in range(4)]  # edge (r, c) joins left r to right c
    edges = [
        (u, v)
        for u, v in itertools.combinations(range(16), 2)
        if k44[u][0] == k44[v][0] or k44[u][1] == k44[v][1]
    ]
    return Graph.from_edges(16, edges)


_PARAMETRIC = {"cycle": (cycle, 1), "path": (path, 1), "complete": (complete, 1), "grid": (grid, 2)}
_FIXED = {
    "diamond": diamond,
    "shrikhande": shrikhande,
    "rook4x4": rook4x4,
    "two_triangles": two_triangles,
}
PAIRS = {
    # 1-WL-equivalent, 3-WL-distinguishable
    "exppair": ("cycle(6)", "two_triangles"),
    # 3-WL-equivalent strongly regular SR(16,6,2,2) graphs
    "srpair": ("shrikhande", "rook4x4"),
}

_NAME_RE = re.compile(r"^([a-z_0-9]+?)\s*(?:\(\s*([0-9,\s]*)\)|([0-9]+)(?:x([0-9]+))?)?$")


def builtin(name: str) -> Graph:
    """Build a named graph: ``cycle(6)``, ``grid(30,30)``, ``diamond``, ``shrikhande``...

    Compact spellings ``cycle6`` and ``grid30x30`` are accepted too.
    """
    key = name.strip().lower()
    if key in _FIXED:
        return _FIXED[key]()
    m = _NAME_RE.match(key)
    if m and m.group(1) in _PARAMETRIC:
        fn, arity = _PARAMETRIC[m.group(1)]
        if m.group(2) is not None:
            args = [int(a) for a in m.group(2).split(",") if a.strip()]
        else:
            args = [int(a) for a in (m.group(3), m.group(4)) if a is not None]
        if len(args) != arity:
            raise ValueError(f"{m.group(1)} takes {arity} integer argument(s), got {name!r}")
        return fn(*args)
    raise ValueError(f"unknown builtin graph {name!r}")


def builtin_pair(name: str) -> tuple[Graph, Graph]:
    if name not in PAIRS:
        raise ValueError(f"unknown builtin pair {name!r}; choose from {sorted(PAIRS)}")
    a, b = PAIRS[name]
    return builtin(a), builtin(b)


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) with a seeded PCG64 stream; pairs (i, j), i < j, drawn row by row."""
    if not 1 <= n <= 10_000:
        raise ValueError(f"n must be in [1, 10000], got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    for i in range(n - 1):
        row = rng.random(n - i - 1) < p
        adj[i, i + 1 :] = row
    adj = adj + adj.T
    return Graph(n, adj)
