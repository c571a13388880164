"""Cross-aspect relation modeling over the aspect-context graph.

Neighbor aspects are linked through segmentation-term nodes: the words in
the inner branches under their lowest common ancestor (typically the
conjunction separating them), falling back to the words between the two
aspects when no inner branch exists. Influence is modeled bi-directionally
with two directed adjacency matrices: odd-position aspects (1-based, in
sentence order) send through their flanking term nodes into adjacent
even-position aspects in the forward matrix, and the backward matrix is the
reverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .attention import HgatBlockParams, stack_blocks
from .autodiff import Tensor
from .intra import ContextEncoding
from .treebank import ConstituencyTree

VARIANTS = ("bi", "undirected", "adjacent_aspect", "bi_adjacent_aspect",
            "global_aspect")
DIRECTED_VARIANTS = ("bi", "bi_adjacent_aspect")


@dataclass
class SegTerm:
    words: list[int]        # token indices, in order
    source: str             # "inner_branches" | "between_fallback"


@dataclass
class AspectContextGraph:
    nodes: list[tuple[str, int]]    # ("aspect", k) or ("term", pair index)
    a_fwd: np.ndarray
    a_bwd: np.ndarray
    aspect_rows: list[int]

    @property
    def n_aspects(self) -> int:
        return len(self.aspect_rows)


def lca(tree: ConstituencyTree, token_i: int, token_j: int) -> int:
    """Deepest node whose span contains both tokens."""
    if token_i == token_j:
        raise ValueError("lca expects distinct tokens")
    node = tree.root
    while True:
        for c in tree.nodes[node].children:
            lo, hi = tree.nodes[c].span
            if lo <= token_i < hi and lo <= token_j < hi:
                node = c
                break
        else:
            return node


def phrase_segmentation(tree: ConstituencyTree, aspect_i: int,
                        aspect_j: int) -> SegTerm:
    """Segmentation term between two aspects (token positions, i before j)."""
    if not aspect_i < aspect_j:
        raise ValueError("aspects must be given in sentence order")
    anc = lca(tree, aspect_i, aspect_j)
    kids = tree.nodes[anc].children
    ci = cj = None
    for idx, c in enumerate(kids):
        lo, hi = tree.nodes[c].span
        if lo <= aspect_i < hi:
            ci = idx
        if lo <= aspect_j < hi:
            cj = idx
    words = []
    for c in kids[ci + 1:cj]:
        lo, hi = tree.nodes[c].span
        words.extend(range(lo, hi))
    if words:
        return SegTerm(words, "inner_branches")
    return SegTerm(list(range(aspect_i + 1, aspect_j)), "between_fallback")


def build_graph(aspect_positions: list[int], seg_terms: list[SegTerm],
                variant: str) -> AspectContextGraph:
    """Aspect-context graph; seg_terms[k] sits between aspects k and k+1.

    Term nodes appear only in the bi / undirected variants and only when the
    term has words; adjacent aspects with an empty fallback link directly.
    Diagonals are 1 in every variant.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown aspect-graph variant {variant!r}")
    m = len(aspect_positions)
    if m >= 2 and len(seg_terms) != m - 1:
        raise ValueError(f"{m} aspects need {m - 1} segmentation terms")

    with_terms = variant in ("bi", "undirected")
    nodes: list[tuple[str, int]] = []
    aspect_rows: list[int] = []
    term_rows: dict[int, int] = {}
    for k in range(m):
        aspect_rows.append(len(nodes))
        nodes.append(("aspect", k))
        if with_terms and k < m - 1 and seg_terms[k].words:
            term_rows[k] = len(nodes)
            nodes.append(("term", k))

    size = len(nodes)
    fwd = np.zeros((size, size), dtype=np.int8)
    bwd = np.zeros((size, size), dtype=np.int8)

    def link(sender: int, receiver: int, term_row: int | None):
        s, r = aspect_rows[sender], aspect_rows[receiver]
        if term_row is None:
            fwd[s, r] = 1
            bwd[r, s] = 1
        else:
            fwd[s, term_row] = fwd[term_row, r] = 1
            bwd[r, term_row] = bwd[term_row, s] = 1

    if variant in ("bi", "undirected", "adjacent_aspect", "bi_adjacent_aspect"):
        for k in range(m - 1):
            # 1-based odd aspect sends forward; in 0-based terms that's even
            sender, receiver = (k, k + 1) if k % 2 == 0 else (k + 1, k)
            link(sender, receiver, term_rows.get(k))
    else:  # global_aspect
        for a in range(m):
            for b in range(a + 1, m):
                link(a, b, None)

    if variant not in DIRECTED_VARIANTS:
        sym = ((fwd + bwd) > 0).astype(np.int8)
        sym = ((sym + sym.T) > 0).astype(np.int8)
        fwd = sym
        bwd = sym.copy()
    np.fill_diagonal(fwd, 1)
    np.fill_diagonal(bwd, 1)
    return AspectContextGraph(nodes, fwd, bwd, aspect_rows)


def term_node_repr(ctx: ContextEncoding, words: list[int]) -> Tensor:
    """2d vector for a term node: mean of its word rows ++ pooled context."""
    return ad.concat([ad.mean_rows(ad.take_rows(ctx.token_reprs, words)),
                      ctx.pooled])


def relation_encoder(graph: AspectContextGraph, node_reprs: Tensor,
                     variant: str,
                     fwd_blocks: list[HgatBlockParams] | None,
                     bwd_blocks: list[HgatBlockParams] | None,
                     dropout_between: float = 0.0, dropout_io: float = 0.0,
                     rng: np.random.Generator | None = None,
                     training: bool = False) -> Tensor:
    """Relation-enhanced aspect rows [#aspects, 2d]; zeros for a lone aspect.

    Directed variants run one stack per matrix, each node attending to its
    in-neighbors, and sum the two outputs; undirected variants run a single
    stack (pass its params as fwd_blocks).
    """
    if graph.n_aspects == 1:
        return ad.zeros((1, node_reprs.shape[1]), dtype=node_reprs.dtype)

    def run(adj: np.ndarray, blocks: list[HgatBlockParams]) -> Tensor:
        layers = len(blocks[0].layers)
        masks = [adj.T] * layers  # row i of adj.T = in-neighbors of i
        return stack_blocks(node_reprs, masks, blocks,
                            dropout_between, dropout_io, rng, training)

    if variant in DIRECTED_VARIANTS:
        out = ad.add(run(graph.a_fwd, fwd_blocks), run(graph.a_bwd, bwd_blocks))
    else:
        out = run(graph.a_fwd, fwd_blocks)
    return ad.take_rows(out, graph.aspect_rows)
