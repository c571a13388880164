"""Aspect-specific representations: context encoder + syntax encoder.

Two encoder modes feed the same downstream path. The toy encoder is a
trainable embedding table with a learned marker vector added at the aspect
position and mean pooling; the archive encoder replays precomputed
contextual vectors verbatim. Both are aspect-conditioned: encoding the same
sentence for different aspects yields different representations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .archive import Archive
from .attention import HgatBlockParams, glorot, stack_blocks
from .autodiff import Tensor
from .graphs import build_ca, build_da, clause_partition, fuse, layer_partition
from .optim import ParamStore
from .treebank import ConstituencyTree, DependencyTree, Sentence, ValidationError

UNK = "<unk>"


@dataclass
class ContextEncoding:
    token_reprs: Tensor     # [n, d]
    pooled: Tensor          # [d]


class ToyEncoder:
    mode = "toy"

    def __init__(self, vocab: dict[str, int], dim: int):
        if vocab.get(UNK) != 0:
            raise ValueError(f"vocabulary must map {UNK!r} to index 0")
        self.vocab = vocab
        self.dim = dim

    @staticmethod
    def build_vocab(token_lists) -> dict[str, int]:
        words = sorted({t for tokens in token_lists for t in tokens})
        return {UNK: 0, **{w: i + 1 for i, w in enumerate(words)}}

    def init(self, store: ParamStore, rng: np.random.Generator) -> None:
        store.add("enc.embed", glorot(rng, len(self.vocab), self.dim))
        store.add("enc.marker", glorot(rng, self.dim, 1, shape=(self.dim,)))

    def encode(self, store: ParamStore, sentence: Sentence,
               aspect_idx: int | None) -> ContextEncoding:
        ids = [self.vocab.get(t, 0) for t in sentence.tokens]
        reprs = ad.take_rows(store["enc.embed"], ids)
        if aspect_idx is not None:
            pos = sentence.aspects[aspect_idx].start
            reprs = ad.add_at_row(reprs, pos, store["enc.marker"])
        return ContextEncoding(reprs, ad.mean_rows(reprs))


class ArchiveEncoder:
    mode = "archive"

    def __init__(self, archive: Archive, dim: int):
        self.archive = archive
        self.dim = dim

    def init(self, store: ParamStore, rng: np.random.Generator) -> None:
        pass  # nothing trainable

    def encode(self, store: ParamStore, sentence: Sentence,
               aspect_idx: int | None) -> ContextEncoding:
        suffix = "ctx" if aspect_idx is None else str(aspect_idx)
        rec = self.archive.get_record(f"{sentence.id}#{suffix}")
        if rec.dim != self.dim:
            raise ValidationError(f"record {rec.key!r} has dim {rec.dim}, "
                                  f"model expects {self.dim}")
        if rec.rows.shape[0] != len(sentence.tokens):
            raise ValidationError(
                f"record {rec.key!r} has {rec.rows.shape[0]} rows for "
                f"{len(sentence.tokens)} collapsed tokens")
        return ContextEncoding(ad.constant(rec.rows), ad.constant(rec.pooled))


def encode_context(store: ParamStore, sentence: Sentence,
                   aspect_idx: int | None, encoder) -> ContextEncoding:
    return encoder.encode(store, sentence, aspect_idx)


def select_graph_layers(tree: ConstituencyTree, aspect_pos: int,
                        max_layers: int = 3) -> list[int]:
    """Heights of the syntax-graph layers used for one aspect.

    Depth is counted from the aspect token's leaf to the root. Shallow trees
    use every level; deeper ones are pruned to bottom, middle, and top so
    the final graph always reaches the root partition.
    """
    if max_layers < 1:
        raise ValueError("max_layers must be >= 1")
    depth = len(tree.ancestors(tree.leaf_of_token(aspect_pos)))
    if depth <= max_layers:
        return list(range(1, depth + 1))
    if max_layers == 1:
        return [depth]
    if max_layers == 2:
        return [1, depth]
    return [1, -(-depth // 2), depth]


def build_syntax_graphs(con: ConstituencyTree, dep: DependencyTree,
                        aspect_pos: int, fusion_mode: str,
                        max_layers: int = 3) -> list[np.ndarray]:
    """One fused adjacency per selected layer height, bottom-up."""
    heights = select_graph_layers(con, aspect_pos, max_layers)
    clause = clause_partition(con)
    da = build_da(dep, self_loops=fusion_mode == "dep_only")
    return [fuse(build_ca(layer_partition(con, h)), da, clause, fusion_mode)
            for h in heights]


def intra_repr(store: ParamStore, sentence: Sentence, con: ConstituencyTree,
               dep: DependencyTree, aspect_idx: int, encoder,
               fusion_mode: str, blocks: list[HgatBlockParams],
               max_layers: int = 3, dropout_between: float = 0.0,
               dropout_io: float = 0.0,
               rng: np.random.Generator | None = None,
               training: bool = False,
               graphs: list[np.ndarray] | None = None) -> Tensor:
    """Aspect-specific vector [2d]: syntax-enhanced aspect row + pooled context."""
    enc = encode_context(store, sentence, aspect_idx, encoder)
    pos = sentence.aspects[aspect_idx].start
    if graphs is None:
        graphs = build_syntax_graphs(con, dep, pos, fusion_mode, max_layers)
    # shallow sentences use a prefix of each block's layers
    sized = [HgatBlockParams(b.layers[:len(graphs)]) for b in blocks]
    g_hat = stack_blocks(enc.token_reprs, graphs, sized,
                         dropout_between, dropout_io, rng, training)
    aspect_vec = ad.add(ad.row(enc.token_reprs, pos), ad.row(g_hat, pos))
    return ad.concat([aspect_vec, enc.pooled])
