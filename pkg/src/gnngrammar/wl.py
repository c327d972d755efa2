"""1-WL colour refinement, the folklore 2-WL test on node pairs, and exact maximum clique.

Colours are canonical: every round sorts the signatures seen across all graphs
refined together and hands out dense ids in that order, so ids are comparable
between graphs and no hashing is involved.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .graph import Graph

FWL2_MAX_N = 500
CLIQUE_MAX_N = 32


@dataclass(frozen=True)
class Coloring:
    level: str  # "node" or "pair"
    colors: np.ndarray  # shape (n,) or (n, n); ids contiguous from 0 across the refined batch
    rounds: int

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.colors.ravel().tolist()).items()))

    @property
    def num_classes(self) -> int:
        return len(np.unique(self.colors))


def _relabel(signatures: list[list]) -> list[np.ndarray]:
    """Dense ids by sorted signature, shared across all graphs."""
    universe = sorted({s for sigs in signatures for s in sigs})
    ids = {s: k for k, s in enumerate(universe)}
    return [np.array([ids[s] for s in sigs], dtype=np.int64) for sigs in signatures]


def _wl1_round(graphs: list[Graph], colors: list[np.ndarray]) -> list[np.ndarray]:
    sigs = []
    for g, c in zip(graphs, colors):
        nbrs = [np.nonzero(row)[0] for row in g.adj]
        sigs.append([(int(c[v]), tuple(sorted(c[nbrs[v]].tolist()))) for v in range(g.n)])
    return _relabel(sigs)


def _fwl2_round(graphs: list[Graph], colors: list[np.ndarray]) -> list[np.ndarray]:
    k = max(int(c.max()) for c in colors) + 1
    sigs = []
    for c in colors:
        n = c.shape[0]
        rows = []
        for u in range(n):
            # codes[w, v] encodes the pair of colours (c(u,w), c(w,v))
            codes = c[u][:, None] * k + c
            multiset = np.sort(codes, axis=0).T  # row v: sorted over w
            for v in range(n):
                rows.append(np.concatenate(([c[u, v]], multiset[v])).tobytes())
        sigs.append(rows)
    flat = _relabel(sigs)
    return [f.reshape(c.shape) for f, c in zip(flat, colors)]


def _refine(graphs, colors, step, max_rounds):
    classes = len(np.unique(np.concatenate([c.ravel() for c in colors])))
    rounds = 0
    while rounds < max_rounds:
        new = step(graphs, colors)
        new_classes = len(np.unique(np.concatenate([c.ravel() for c in new])))
        if new_classes == classes:
            break
        colors, classes = new, new_classes
        rounds += 1
    return colors, rounds


def wl1_batch(graphs: list[Graph]) -> list[Coloring]:
    """Refine several graphs together; equivalent to refining their disjoint union."""
    init = [np.zeros(g.n, dtype=np.int64) for g in graphs]
    total = sum(g.n for g in graphs)
    colors, rounds = _refine(graphs, init, _wl1_round, max(total, 1))
    return [Coloring("node", c, rounds) for c in colors]


def fwl2_batch(graphs: list[Graph]) -> list[Coloring]:
    for g in graphs:
        if g.n > FWL2_MAX_N:
            raise ValueError(f"fwl2 supports n <= {FWL2_MAX_N}, got {g.n}")
    # initial colour: 0 off-diagonal non-edge, 1 edge, 2 diagonal
    init = [(g.adj + 2 * np.eye(g.n)).astype(np.int64) for g in graphs]
    init = _relabel([c.ravel().tolist() for c in init])
    init = [c.reshape(g.n, g.n) for c, g in zip(init, graphs)]
    total = sum(g.n for g in graphs)
    colors, rounds = _refine(graphs, init, _fwl2_round, max(total * total, 1))
    return [Coloring("pair", c, rounds) for c in colors]


def wl1(g: Graph) -> Coloring:
    return wl1_batch([g])[0]


def fwl2(g: Graph) -> Coloring:
    return fwl2_batch([g])[0]


@dataclass
class WLVerdict:
    test: str
    equivalent: bool
    rounds: int
    histogram_g1: dict[int, int]
    histogram_g2: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "equivalent": self.equivalent,
            "rounds": self.rounds,
            "histogram_g1": {str(k): v for k, v in self.histogram_g1.items()},
            "histogram_g2": {str(k): v for k, v in self.histogram_g2.items()},
        }


def compare(g1: Graph, g2: Graph, test: str = "wl1") -> WLVerdict:
    if test == "wl1":
        c1, c2 = wl1_batch([g1, g2])
    elif test == "fwl2":
        c1, c2 = fwl2_batch([g1, g2])
    else:
        raise ValueError(f"unknown test {test!r}; use 'wl1' or 'fwl2'")
    h1, h2 = c1.histogram(), c2.histogram()
    return WLVerdict(test, g1.n == g2.n and h1 == h2, c1.rounds, h1, h2)


def equivalent(g1: Graph, g2: Graph, test: str = "wl1") -> bool:
    return compare(g1, g2, test).equivalent


def max_clique(g: Graph) -> int:
    """Exact clique number by Bron-Kerbosch with pivoting on bitsets, pruned by size."""
    if g.n > CLIQUE_MAX_N:
        raise ValueError(f"max_clique supports n <= {CLIQUE_MAX_N}, got {g.n}")
    nbr = [sum(1 << j for j in np.nonzero(g.adj[i])[0].tolist()) for i in range(g.n)]
    best = 0

    def expand(size, cand, excl):
        nonlocal best
        if cand == 0:
            best = max(best, size)
            return
        if size + cand.bit_count() <= best:
            return
        pivot_pool = cand | excl
        pivot = max(_bits(pivot_pool), key=lambda u: (cand & nbr[u]).bit_count())
        for v in _bits(cand & ~nbr[pivot]):
            expand(size + 1, cand & nbr[v], excl & nbr[v])
            cand &= ~(1 << v)
            excl |= 1 << v

    expand(0, (1 << g.n) - 1, 0)
    return best


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low
