"""Model assembly: per-aspect intra representations, cross-aspect relations,
and the 3-class classifier head."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .archive import open_archive
from .attention import glorot, init_hgat_block, resolve_hgat_block
from .autodiff import Tensor
from .config import ModelConfig
from .inter import (AspectContextGraph, build_graph, phrase_segmentation,
                    relation_encoder, term_node_repr)
from .intra import (ArchiveEncoder, ToyEncoder, build_syntax_graphs,
                    encode_context, intra_repr)
from .optim import ParamStore
from .treebank import (ConstituencyTree, DependencyTree, Sentence,
                       collapse_aspects, load_dataset)


@dataclass
class Instance:
    """One collapsed sentence with everything static precomputed."""

    sentence: Sentence
    con: ConstituencyTree
    dep: DependencyTree
    index_map: list[int]
    graphs_per_aspect: list[list[np.ndarray]] = field(default_factory=list)
    seg_terms: list = field(default_factory=list)
    aspect_graph: AspectContextGraph | None = None

    @property
    def n_aspects(self) -> int:
        return len(self.sentence.aspects)

    @property
    def labels(self) -> list[int]:
        return [a.label for a in self.sentence.aspects]


def prepare_instance(sentence: Sentence, con: ConstituencyTree,
                     dep: DependencyTree, config: ModelConfig) -> Instance:
    sentence, con, dep, index_map = collapse_aspects(sentence, con, dep)
    inst = Instance(sentence, con, dep, index_map)
    inst.graphs_per_aspect = [
        build_syntax_graphs(con, dep, a.start, config.fusion_mode,
                            config.layers_per_block)
        for a in sentence.aspects]
    if config.inter_variant != "off" and inst.n_aspects >= 2:
        positions = [a.start for a in sentence.aspects]
        inst.seg_terms = [phrase_segmentation(con, positions[k], positions[k + 1])
                          for k in range(len(positions) - 1)]
        inst.aspect_graph = build_graph(positions, inst.seg_terms,
                                        config.inter_variant)
    return inst


def load_instances(path, config: ModelConfig) -> list[Instance]:
    return [prepare_instance(s, c, d, config)
            for s, c, d in load_dataset(path)]


class SentimentModel:
    """Owns the parameter layout; forwards resolve params from any store."""

    def __init__(self, config: ModelConfig, vocab: dict[str, int] | None = None):
        config.validate()
        self.config = config
        if config.encoder_mode == "toy":
            if vocab is None:
                raise ValueError("toy encoder needs a vocabulary")
            self.encoder = ToyEncoder(vocab, config.dim)
        else:
            self.encoder = ArchiveEncoder(open_archive(config.encoder_archive),
                                          config.dim)
        self.store = ParamStore()
        rng = np.random.default_rng(config.seed)
        d, ff = config.dim, config.dim * config.ff_mult
        self.encoder.init(self.store, rng)
        for b in range(config.blocks):
            init_hgat_block(self.store, f"intra.b{b}", d, config.heads, ff,
                            config.layers_per_block, rng)
        self._stacks = ()
        if config.inter_variant in ("bi", "bi_adjacent_aspect"):
            self._stacks = ("fwd", "bwd")
        elif config.inter_variant != "off":
            self._stacks = ("uni",)
        for stack in self._stacks:
            for b in range(config.inter_blocks):
                init_hgat_block(self.store, f"inter.{stack}.b{b}", 2 * d,
                                config.heads, 2 * ff, config.inter_layers, rng)
        self.store.add("cls.w", glorot(rng, 2 * d, 3))
        self.store.add("cls.b", np.zeros(3, dtype=np.float32))

    # -- parameter resolution against an arbitrary store (shadow-friendly)

    def _intra_blocks(self, store: ParamStore):
        return [resolve_hgat_block(store, f"intra.b{b}", self.config.heads,
                                   self.config.layers_per_block)
                for b in range(self.config.blocks)]

    def _inter_blocks(self, store: ParamStore, stack: str):
        return [resolve_hgat_block(store, f"inter.{stack}.b{b}",
                                   self.config.heads, self.config.inter_layers)
                for b in range(self.config.inter_blocks)]

    # -- forward passes

    def aspect_reprs(self, inst: Instance, store: ParamStore | None = None,
                     rng: np.random.Generator | None = None,
                     training: bool = False) -> list[Tensor]:
        """v for every aspect: intra vector plus relation enhancement."""
        cfg = self.config
        store = self.store if store is None else store
        blocks = self._intra_blocks(store)
        v_as = [
            intra_repr(store, inst.sentence, inst.con, inst.dep, k,
                       self.encoder, cfg.fusion_mode, blocks,
                       cfg.layers_per_block, cfg.dropout_between,
                       cfg.dropout_io, rng, training,
                       graphs=inst.graphs_per_aspect[k])
            for k in range(inst.n_aspects)]
        if inst.aspect_graph is None or inst.n_aspects < 2:
            return v_as
        ctx = encode_context(store, inst.sentence, None, self.encoder)
        rows = []
        for kind, k in inst.aspect_graph.nodes:
            if kind == "aspect":
                rows.append(v_as[k])
            else:
                rows.append(term_node_repr(ctx, inst.seg_terms[k].words))
        node_reprs = ad.stack_rows(rows)
        fwd = self._inter_blocks(store, self._stacks[0])
        bwd = self._inter_blocks(store, "bwd") if "bwd" in self._stacks else None
        v_aa = relation_encoder(inst.aspect_graph, node_reprs,
                                cfg.inter_variant, fwd, bwd,
                                cfg.dropout_between, cfg.dropout_io,
                                rng, training)
        return [ad.add(v_as[k], ad.row(v_aa, k)) for k in range(inst.n_aspects)]

    def forward_sentence(self, inst: Instance, store: ParamStore | None = None,
                         rng: np.random.Generator | None = None,
                         training: bool = False) -> list[Tensor]:
        """One probability 3-vector per aspect, in sentence order."""
        store = self.store if store is None else store
        probs = []
        for o in self.aspect_reprs(inst, store, rng, training):
            logits = ad.add(ad.vecmat(o, store["cls.w"]), store["cls.b"])
            probs.append(ad.masked_softmax(logits, [True, True, True]))
        return probs

    def loss_sentence(self, inst: Instance, store: ParamStore | None = None,
                      rng: np.random.Generator | None = None,
                      training: bool = True) -> Tensor:
        """Summed cross-entropy over the sentence's aspects."""
        probs = self.forward_sentence(inst, store, rng, training)
        loss = None
        for p, gold in zip(probs, inst.labels):
            term = ad.cross_entropy(p, gold)
            loss = term if loss is None else ad.add(loss, term)
        return loss

    def predict_sentence(self, inst: Instance) -> list[tuple[int, np.ndarray]]:
        return [(int(np.argmax(p.data)), p.data.copy())
                for p in self.forward_sentence(inst)]
