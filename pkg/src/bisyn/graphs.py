"""Per-layer phrase partitions and the CA/DA/FA adjacency matrices.

All matrices are small dense numpy int8 arrays over (aspect-collapsed)
tokens. Fused matrices are binarized {0,1}, symmetric, with a forced unit
diagonal so every token can attend to itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .treebank import ConstituencyTree, DependencyTree

FUSION_MODES = ("dot", "add", "cond_add", "con_only", "dep_only")


@dataclass
class LayerPartition:
    """Disjoint contiguous token ranges covering [0, n)."""

    height: int
    phrases: list[tuple[int, int]]

    @property
    def n_tokens(self) -> int:
        return self.phrases[-1][1]

    def phrase_of(self, token: int) -> int:
        for k, (lo, hi) in enumerate(self.phrases):
            if lo <= token < hi:
                return k
        raise IndexError(f"token {token} outside partition")


def layer_partition(tree: ConstituencyTree, height: int) -> LayerPartition:
    """Group tokens by the ancestor `height` levels above their leaf.

    Ascents clamp at the root. Phrases are the maximal runs of consecutive
    tokens that share that ancestor, so the result is always a partition
    even on lopsided trees.
    """
    if height < 1:
        raise ValueError("height must be >= 1")
    parents = tree.parents()
    anchors = []
    for leaf in tree.leaf_ids():
        node = leaf
        for _ in range(height):
            if parents[node] is None:
                break
            node = parents[node]
        anchors.append(node)
    phrases: list[tuple[int, int]] = []
    start = 0
    for i in range(1, len(anchors) + 1):
        if i == len(anchors) or anchors[i] != anchors[i - 1]:
            phrases.append((start, i))
            start = i
    return LayerPartition(height, phrases)


def clause_partition(tree: ConstituencyTree) -> LayerPartition:
    """Top-level clause split: the first multi-child node down from the root.

    Single-child chains are skipped; a childless root (1-token sentence)
    yields one phrase. The stored height counts levels below the root.
    """
    node = tree.root
    level = 1
    while len(tree.nodes[node].children) == 1 and \
            not tree.nodes[tree.nodes[node].children[0]].is_leaf:
        node = tree.nodes[node].children[0]
        level += 1
    kids = tree.nodes[node].children
    if not kids:
        phrases = [tree.nodes[node].span]
    else:
        phrases = [tree.nodes[c].span for c in kids]
    return LayerPartition(level, phrases)


def build_ca(partition: LayerPartition) -> np.ndarray:
    """CA[i, j] = 1 iff i and j share a phrase (diagonal included)."""
    n = partition.n_tokens
    ca = np.zeros((n, n), dtype=np.int8)
    for lo, hi in partition.phrases:
        ca[lo:hi, lo:hi] = 1
    return ca


def build_da(dep: DependencyTree, self_loops: bool = False) -> np.ndarray:
    """Symmetric head-link adjacency; diagonal only when self_loops is set."""
    n = len(dep)
    da = np.zeros((n, n), dtype=np.int8)
    for i, h in dep.edges():
        da[i, h] = 1
        da[h, i] = 1
    if self_loops:
        np.fill_diagonal(da, 1)
    return da


def fuse(ca: np.ndarray, da: np.ndarray, clause: LayerPartition,
         mode: str) -> np.ndarray:
    """Combine the two syntax adjacencies into one attention mask.

    dot keeps dependency links only inside a phrase; add keeps both; cond_add
    keeps both but drops dependency links whose endpoints sit in different
    clauses; con_only / dep_only pass one matrix through. Output is {0,1},
    symmetric, diagonal forced to 1.
    """
    if mode not in FUSION_MODES:
        raise ValueError(f"unknown fusion mode {mode!r}")
    if ca.shape != da.shape:
        raise ValueError(f"size mismatch: CA {ca.shape} vs DA {da.shape}")
    if mode == "dot":
        fa = ca * da
    elif mode == "add":
        fa = ca + da
    elif mode == "cond_add":
        n = ca.shape[0]
        clause_id = np.empty(n, dtype=np.int64)
        for k, (lo, hi) in enumerate(clause.phrases):
            clause_id[lo:hi] = k
        same_clause = clause_id[:, None] == clause_id[None, :]
        fa = ca + da * same_clause
    elif mode == "con_only":
        fa = ca.copy()
    else:
        fa = da.copy()
    fa = (fa > 0).astype(np.int8)
    np.fill_diagonal(fa, 1)
    return fa
