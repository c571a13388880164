"""Multi-head masked graph attention and its hierarchical block stacking.

One attention layer: per head z, project H with Wg[z], score node pairs with
an additive scorer LeakyReLU(a[z] . [Wg x || Wg y]) restricted to the mask,
normalize each row with a masked softmax, aggregate, apply ELU per head,
concatenate heads, then map FC(heads + H) through a two-layer feed-forward.
A block applies one such layer per syntax-graph layer; stacked blocks reuse
the same graph list.

Parameters live in a ParamStore under a name prefix so the same layout can
be resolved against float64 shadow stores for gradient checking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .optim import ParamStore

LEAKY_SLOPE = 0.2
MAX_BLOCKS = 3


@dataclass
class GatLayerParams:
    wg: list[Tensor]     # per head [d, d_head]
    att: list[Tensor]    # per head [2 * d_head]
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @property
    def heads(self) -> int:
        return len(self.wg)

    @property
    def d_in(self) -> int:
        return self.wg[0].shape[0]


@dataclass
class HgatBlockParams:
    layers: list[GatLayerParams]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
           shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out)).astype(np.float32)


def init_gat_layer(store: ParamStore, prefix: str, d: int, heads: int,
                   d_ff: int, rng: np.random.Generator) -> None:
    if d % heads != 0:
        raise ValueError(f"dim {d} not divisible by {heads} heads")
    dh = d // heads
    for z in range(heads):
        store.add(f"{prefix}.h{z}.wg", glorot(rng, d, dh))
        store.add(f"{prefix}.h{z}.att", glorot(rng, 2 * dh, 1, shape=(2 * dh,)))
    store.add(f"{prefix}.ff.w1", glorot(rng, d, d_ff))
    store.add(f"{prefix}.ff.b1", np.zeros(d_ff, dtype=np.float32))
    store.add(f"{prefix}.ff.w2", glorot(rng, d_ff, d))
    store.add(f"{prefix}.ff.b2", np.zeros(d, dtype=np.float32))


def resolve_gat_layer(store: ParamStore, prefix: str, heads: int) -> GatLayerParams:
    return GatLayerParams(
        wg=[store[f"{prefix}.h{z}.wg"] for z in range(heads)],
        att=[store[f"{prefix}.h{z}.att"] for z in range(heads)],
        w1=store[f"{prefix}.ff.w1"], b1=store[f"{prefix}.ff.b1"],
        w2=store[f"{prefix}.ff.w2"], b2=store[f"{prefix}.ff.b2"])


def init_hgat_block(store: ParamStore, prefix: str, d: int, heads: int,
                    d_ff: int, n_layers: int, rng: np.random.Generator) -> None:
    for l in range(n_layers):
        init_gat_layer(store, f"{prefix}.l{l}", d, heads, d_ff, rng)


def resolve_hgat_block(store: ParamStore, prefix: str, heads: int,
                       n_layers: int) -> HgatBlockParams:
    return HgatBlockParams(
        [resolve_gat_layer(store, f"{prefix}.l{l}", heads) for l in range(n_layers)])


def gat_layer(h: Tensor, adj: np.ndarray, params: GatLayerParams,
              dropout_rate: float = 0.0,
              rng: np.random.Generator | None = None,
              training: bool = False) -> Tensor:
    """One masked multi-head attention layer over neighborhood mask `adj`.

    Row i of adj marks the nodes i attends to, so a directed graph where
    messages flow along edges is passed as its transpose. Every row needs
    at least one neighbor (keep the diagonal set).
    """
    mask = np.asarray(adj) != 0
    n, d = h.shape
    if mask.shape != (n, n):
        raise ValueError(f"adjacency {mask.shape} does not match {n} nodes")
    head_outs = []
    for wg, att in zip(params.wg, params.att):
        alpha, proj = _head_attention(h, mask, wg, att)
        head_outs.append(ad.elu(ad.matmul(alpha, proj)))
    g = head_outs[0] if len(head_outs) == 1 else ad.concat_cols(head_outs)
    mixed = ad.add(g, h)
    # ELU keeps the feed-forward C1, which central-difference checks need
    inner = ad.elu(ad.add(ad.matmul(mixed, params.w1), params.b1))
    out = ad.add(ad.matmul(inner, params.w2), params.b2)
    return ad.dropout(out, dropout_rate, rng, training)


def _head_attention(h: Tensor, mask: np.ndarray, wg: Tensor,
                    att: Tensor) -> tuple[Tensor, Tensor]:
    dh = wg.shape[1]
    proj = ad.matmul(h, wg)
    src = ad.matvec(proj, ad.slice1d(att, 0, dh))
    dst = ad.matvec(proj, ad.slice1d(att, dh, 2 * dh))
    scores = ad.leaky_relu(ad.outer_add(src, dst), LEAKY_SLOPE)
    return ad.masked_softmax_rows(scores, mask), proj


def attention_weights(h: Tensor, adj: np.ndarray,
                      params: GatLayerParams) -> list[np.ndarray]:
    """Per-head attention matrices, straight from the layer's own path."""
    mask = np.asarray(adj) != 0
    return [_head_attention(h, mask, wg, att)[0].data
            for wg, att in zip(params.wg, params.att)]


def hgat_block(h0: Tensor, graphs: list[np.ndarray], params: HgatBlockParams,
               dropout_between: float = 0.0, dropout_io: float = 0.0,
               rng: np.random.Generator | None = None,
               training: bool = False) -> Tensor:
    """Apply one attention layer per graph, each consuming the previous output."""
    if len(graphs) != len(params.layers):
        raise ValueError(f"{len(graphs)} graphs for {len(params.layers)} layers")
    x = ad.dropout(h0, dropout_io, rng, training)
    for i, (adj, layer) in enumerate(zip(graphs, params.layers)):
        rate = dropout_between if i < len(graphs) - 1 else 0.0
        x = gat_layer(x, adj, layer, rate, rng, training)
    return ad.dropout(x, dropout_io, rng, training)


def stack_blocks(h0: Tensor, graphs: list[np.ndarray],
                 blocks: list[HgatBlockParams],
                 dropout_between: float = 0.0, dropout_io: float = 0.0,
                 rng: np.random.Generator | None = None,
                 training: bool = False,
                 max_blocks: int = MAX_BLOCKS) -> Tensor:
    """Chain blocks over the same graph list."""
    if not 1 <= len(blocks) <= max_blocks:
        raise ValueError(f"block count {len(blocks)} outside [1, {max_blocks}]")
    x = h0
    for block in blocks:
        x = hgat_block(x, graphs, block, dropout_between, dropout_io, rng, training)
    return x
