"""Context-free grammars over MATLANG operations, sentence enumeration and fingerprints.

A production carries its right-hand side as a symbol sequence (for display
in the usual notation) plus a builder that assembles the MATLANG expression
from the expressions derived for its variables, left to right.

Derivation depth is the height of the derivation tree: the largest number of
rule applications on any path from the start variable to a terminal leaf.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import matlang as ml
from .graph import Graph
from .matlang import A, I, J, ONE, Diag, Expr, Shape

FINGERPRINT_TOL = 1e-9


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]
    build: Callable[..., Expr] = field(compare=False, repr=False)

    def text(self) -> str:
        return "".join(self.rhs)


@dataclass(frozen=True)
class Grammar:
    """A 4-tuple (V, Σ, R, S); ``productions`` maps each variable to its ordered rules."""

    name: str
    variables: tuple[str, ...]
    terminals: frozenset[str]
    productions: dict[str, tuple[Production, ...]]
    start: str

    def __post_init__(self):
        if self.start not in self.variables:
            raise ValueError(f"start variable {self.start!r} is not a variable")
        symbols = set(self.variables) | set(self.terminals)
        for var, rules in self.productions.items():
            if var not in self.variables:
                raise ValueError(f"production for unknown variable {var!r}")
            for rule in rules:
                unknown = [s for s in rule.rhs if s not in symbols]
                if unknown:
                    raise ValueError(f"{var} -> {rule.text()} uses unknown symbols {unknown}")

    def rule_vars(self, rule: Production) -> list[str]:
        return [s for s in rule.rhs if s in self.variables]

    def num_productions(self) -> int:
        return sum(len(r) for r in self.productions.values())

    def to_text(self) -> str:
        order = [self.start] + [v for v in self.variables if v != self.start]
        return "\n".join(
            f"{v} → " + " | ".join(r.text() for r in self.productions.get(v, ())) for v in order
        )


def make_grammar(name: str, start: str, rules: dict[str, list[tuple[str, Callable[..., Expr]]]]) -> Grammar:
    """Build a grammar from ``{variable: [(rhs, builder), ...]}``; rhs symbols are space-separated."""
    variables = tuple(rules)
    productions = {}
    terminals = set()
    for var, alts in rules.items():
        prods = []
        for rhs, build in alts:
            symbols = tuple(rhs.split())
            terminals.update(s for s in symbols if s not in variables)
            prods.append(Production(var, symbols, build))
        productions[var] = tuple(prods)
    return Grammar(name, variables, frozenset(terminals), productions, start)


# presets ---------------------------------------------------------------------

# the renormalised GCN support diag((A+I)1)^(-1/2) (A+I) diag((A+I)1)^(-1/2)
_A_PLUS_I = A + I
_GCN_SCALE = Diag(ml.pointwise("recip_sqrt", _A_PLUS_I @ ONE))
GCN_SUPPORT = _GCN_SCALE @ _A_PLUS_I @ _GCN_SCALE


def _rgl1():
    return make_grammar("rgl1", "V_c", {
        "V_c": [
            ("diag ( V_c ) V_c", lambda v, w: Diag(v) @ w),
            ("A V_c", lambda v: A @ v),
            ("𝟙", lambda: ONE),
        ],
    })


def _gl1_full():
    return make_grammar("gl1_full", "S", {
        "S": [
            ("( V_r ) ( V_c )", lambda r, c: r @ c),
            ("diag ( S )", lambda s: Diag(s)),
            ("S S", lambda s, t: s @ t),
        ],
        "V_c": [
            ("M V_c", lambda m, v: m @ v),
            ("( V_r ) ᵀ", lambda r: r.T),
            ("V_c S", lambda v, s: v @ s),
            ("𝟙", lambda: ONE),
        ],
        "V_r": [
            ("V_r M", lambda r, m: r @ m),
            ("( V_c ) ᵀ", lambda v: v.T),
            ("S V_r", lambda s, r: s @ r),
        ],
        "M": [
            ("M M", lambda m, k: m @ k),
            ("( M ) ᵀ", lambda m: m.T),
            ("diag ( V_c )", lambda v: Diag(v)),
            ("( V_c ) ( V_r )", lambda v, r: v @ r),
            ("A", lambda: A),
        ],
    })


def _gcn():
    return support_mpnn({"C": GCN_SUPPORT}, name="gcn")


def _gnnml1():
    return make_grammar("gnnml1", "V_c", {
        "V_c": [
            ("V_c ⊙ V_c", lambda v, w: v * w),
            ("A V_c", lambda v: A @ v),
            ("𝟙", lambda: ONE),
        ],
    })


def _rgl3():
    return make_grammar("rgl3", "V_c", {
        "V_c": [
            ("M V_c", lambda m, v: m @ v),
            ("𝟙", lambda: ONE),
        ],
        "M": [
            ("( M ⊙ M )", lambda m, k: m * k),
            ("M M", lambda m, k: m @ k),
            ("diag ( V_c )", lambda v: Diag(v)),
            ("A", lambda: A),
        ],
    })


def _gl3_full():
    return make_grammar("gl3_full", "S", {
        "S": [
            ("( V_r ) ( V_c )", lambda r, c: r @ c),
            ("diag ( S )", lambda s: Diag(s)),
            ("S S", lambda s, t: s @ t),
            ("( S ⊙ S )", lambda s, t: s * t),
        ],
        "V_c": [
            ("( V_c ⊙ V_c )", lambda v, w: v * w),
            ("M V_c", lambda m, v: m @ v),
            ("( V_r ) ᵀ", lambda r: r.T),
            ("V_c S", lambda v, s: v @ s),
            ("𝟙", lambda: ONE),
        ],
        "V_r": [
            ("( V_r ⊙ V_r )", lambda r, q: r * q),
            ("V_r M", lambda r, m: r @ m),
            ("( V_c ) ᵀ", lambda v: v.T),
            ("S V_r", lambda s, r: s @ r),
        ],
        "M": [
            ("( M ⊙ M )", lambda m, k: m * k),
            ("M M", lambda m, k: m @ k),
            ("( M ) ᵀ", lambda m: m.T),
            ("diag ( V_c )", lambda v: Diag(v)),
            ("( V_c ) ( V_r )", lambda v, r: v @ r),
            ("A", lambda: A),
        ],
    })


def _ppgn():
    return make_grammar("ppgn", "M", {
        "M": [
            ("M M", lambda m, k: m @ k),
            ("diag ( 𝟙 )", lambda: Diag(ONE)),
            ("M ⊙ I", lambda m: m * I),
            ("M ⊙ J", lambda m: m * J),
            ("A", lambda: A),
        ],
    })


def support_mpnn(supports: dict[str, Expr], name: str = "support_mpnn") -> Grammar:
    """MPNN grammar ``V_c → C_1 V_c | ... | C_k V_c | 𝟙`` for matrix-valued supports."""
    for label, expr in supports.items():
        if ml.infer_shape(expr) is not Shape.MATRIX:
            raise ValueError(f"support {label!r} is not matrix-valued")
    alts = [(f"{label} V_c", lambda v, _s=expr: _s @ v) for label, expr in supports.items()]
    alts.append(("𝟙", lambda: ONE))
    return make_grammar(name, "V_c", {"V_c": alts})


_PRESETS = {
    "rgl1": _rgl1,
    "gl1_full": _gl1_full,
    "gcn": _gcn,
    "gnnml1": _gnnml1,
    "rgl3": _rgl3,
    "gl3_full": _gl3_full,
    "ppgn": _ppgn,
}
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> Grammar:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown grammar {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


# enumeration -----------------------------------------------------------------


@dataclass
class SentenceSet:
    grammar: str
    depth: int
    sentences: list[Expr]
    heights: list[int]
    truncated: bool = False

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __contains__(self, e):
        return e in set(self.sentences)

    def to_lines(self) -> list[str]:
        return [ml.to_sexpr(e) for e in self.sentences]


def _level(grammar: Grammar, var: str, h: int, found, heights) -> Iterator[Expr]:
    """Candidate expressions for ``var`` whose derivation height is exactly ``h``.

    Children come from derivations of height <= h-1 and at least one child has
    height exactly h-1. Rules are tried in declaration order and child tuples
    in lexicographic order of their enumeration indices.
    """
    for rule in grammar.productions.get(var, ()):
        kids = grammar.rule_vars(rule)
        if not kids:
            if h == 1:
                yield rule.build()
            continue
        if h == 1:
            continue
        pools = [found[k] for k in kids]
        if any(not p for p in pools):
            continue
        hpools = [heights[k] for k in kids]
        for idx in itertools.product(*(range(len(p)) for p in pools)):
            if max(hp[i] for hp, i in zip(hpools, idx)) != h - 1:
                continue
            yield rule.build(*(p[i] for p, i in zip(pools, idx)))


def enumerate_sentences(grammar: Grammar, depth: int, limit: int = 10_000) -> SentenceSet:
    """All distinct expressions derivable from the start variable within ``depth``.

    Sentences are ordered by derivation height (breadth first), then by rule
    order and child indices. Structurally identical expressions are kept once.
    """
    if depth < 1 or limit < 1:
        raise ValueError("depth and limit must be >= 1")
    found: dict[str, list[Expr]] = {v: [] for v in grammar.variables}
    heights: dict[str, list[int]] = {v: [] for v in grammar.variables}
    seen: dict[str, set[Expr]] = {v: set() for v in grammar.variables}
    start = grammar.start
    for h in range(1, depth + 1):
        snapshot = {v: list(found[v]) for v in grammar.variables}
        snap_h = {v: list(heights[v]) for v in grammar.variables}
        # only the start variable is needed at the final height
        todo = [start] if h == depth else list(grammar.variables)
        for var in todo:
            for expr in _level(grammar, var, h, snapshot, snap_h):
                if expr in seen[var]:
                    continue
                seen[var].add(expr)
                found[var].append(expr)
                heights[var].append(h)
                if var == start and len(found[start]) >= limit:
                    return SentenceSet(grammar.name, depth, found[start], heights[start], truncated=True)
    return SentenceSet(grammar.name, depth, found[start], heights[start])


# fingerprints ----------------------------------------------------------------


def canonical_value(value: ml.Value) -> np.ndarray:
    """Permutation-invariant form of a sentence value: scalars as-is, column vectors sorted."""
    if value.shape is Shape.SCALAR:
        return np.array([value.item()])
    if value.shape is Shape.COLVEC:
        return np.sort(value.vector())
    raise ValueError(f"cannot fingerprint a {value.shape.value}-shaped sentence")


def fingerprint(g: Graph, sentences, evaluator: ml.Evaluator | None = None) -> np.ndarray:
    ev = evaluator or ml.Evaluator(g)
    parts = [canonical_value(ev(e)) for e in sentences]
    return np.concatenate(parts) if parts else np.zeros(0)


def _values_differ(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return True
    # overflowed entries carry no usable information either way
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        return False
    return not np.allclose(a, b, rtol=FINGERPRINT_TOL, atol=FINGERPRINT_TOL)


@dataclass
class SentenceVerdict:
    distinguished: bool
    witness: Expr | None
    depth: int
    checked: int

    def to_dict(self) -> dict:
        return {
            "distinguished": self.distinguished,
            "witness": ml.to_sexpr(self.witness) if self.witness is not None else None,
            "depth": self.depth,
            "checked": self.checked,
        }


def distinguish_by_sentences(g1: Graph, g2: Graph, grammar: Grammar, depth: int,
                             limit: int = 10_000, sentences: SentenceSet | None = None) -> SentenceVerdict:
    """First enumerated sentence whose canonical values differ on the two graphs."""
    if g1.n != g2.n:
        return SentenceVerdict(True, None, depth, 0)
    sents = sentences if sentences is not None else enumerate_sentences(grammar, depth, limit)
    ev1, ev2 = ml.Evaluator(g1), ml.Evaluator(g2)
    with np.errstate(over="ignore", invalid="ignore"):
        for k, e in enumerate(sents):
            if _values_differ(canonical_value(ev1(e)), canonical_value(ev2(e))):
                return SentenceVerdict(True, e, depth, k + 1)
    return SentenceVerdict(False, None, depth, len(sents))
