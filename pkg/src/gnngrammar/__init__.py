"""Grammar-derived tools for studying GNN expressivity.

Modules:
    graph     simple graphs, builtin test graphs, graph6 I/O
    matlang   matrix-language expressions: parse, shape-check, evaluate
    cfg       grammars over the language and depth-bounded sentence enumeration
    wl        1-WL and folklore 2-WL refinement, exact clique number
    counting  closed-form path/cycle/chordal counts and brute-force oracles
    spectral  Laplacians, Jacobi eigensolver, spectral responses, filter fits
    g2n2      random-weight forward pass of the tensor GNN and a pair harness
"""

from .graph import Graph, builtin, builtin_pair, erdos_renyi, parse_graph6, to_graph6

__version__ = "0.1.0"

__all__ = ["Graph", "builtin", "builtin_pair", "erdos_renyi", "parse_graph6", "to_graph6", "__version__"]
