"""Contextual encoders behind one interface.

An encoder turns a word sequence (optionally with an appended aspect, which
conditions the whole encoding) into sub-token vectors plus a sequence-level
pooled vector, and reports which input word each sub-token came from. The
stub encoder is deterministic and dependency-free; the transformers adapter
wraps a locally available pretrained model.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

CLS, SEP = "[CLS]", "[SEP]"


@dataclass
class EncodedSequence:
    pieces: list[str]               # sub-tokens including special markers
    vectors: np.ndarray             # [n_pieces, dim]
    pooled: np.ndarray              # [dim]
    word_ids: list[int | None]      # source word index; None for specials
                                    # and appended-aspect pieces


def split_subwords(word: str, width: int = 4) -> list[str]:
    """Fixed-width wordpiece-style split; continuations carry a ## prefix."""
    pieces = [word[i:i + width] for i in range(0, len(word), width)]
    return [pieces[0]] + ["##" + p for p in pieces[1:]]


class StubEncoder:
    """Hash-seeded vectors with a light sequence-dependent shift.

    Deterministic across runs and machines; the shift makes the encoding of
    the same word differ between aspect-conditioned sequences, mirroring
    what a real contextual encoder does.
    """

    name = "stub"

    def __init__(self, dim: int = 16):
        self.dim = dim

    def _piece_vec(self, piece: str) -> np.ndarray:
        digest = hashlib.sha256(piece.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return (rng.standard_normal(self.dim) / np.sqrt(self.dim)).astype(np.float32)

    def encode(self, words: list[str],
               appended: list[str] | None = None) -> EncodedSequence:
        pieces: list[str] = [CLS]
        word_ids: list[int | None] = [None]
        for w, word in enumerate(words):
            for piece in split_subwords(word):
                pieces.append(piece)
                word_ids.append(w)
        pieces.append(SEP)
        word_ids.append(None)
        if appended:
            for word in appended:
                for piece in split_subwords(word):
                    pieces.append(piece)
                    word_ids.append(None)
            pieces.append(SEP)
            word_ids.append(None)
        shift = 0.1 * self._piece_vec("\x1f".join(pieces))
        vectors = np.stack([self._piece_vec(p) + shift for p in pieces])
        pooled = np.tanh(vectors.mean(axis=0, dtype=np.float64)).astype(np.float32)
        return EncodedSequence(pieces, vectors.astype(np.float32), pooled,
                               word_ids)


class TransformersEncoder:
    """Adapter for a locally available Hugging Face encoder."""

    name = "transformers"

    def __init__(self, model_name: str):
        import torch  # noqa: F401  (transformers needs it at runtime)
        from transformers import AutoModel, AutoTokenizer
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def encode(self, words: list[str],
               appended: list[str] | None = None) -> EncodedSequence:
        import torch
        if appended:
            batch = self.tokenizer(words, appended, is_split_into_words=True,
                                   return_tensors="pt")
        else:
            batch = self.tokenizer(words, is_split_into_words=True,
                                   return_tensors="pt")
        word_ids = batch.word_ids(0)
        if appended:
            # word ids from the appended segment must not count as text words
            seq_ids = batch.sequence_ids(0)
            word_ids = [w if s == 0 else None
                        for w, s in zip(word_ids, seq_ids)]
        with torch.no_grad():
            out = self.model(**batch)
        vectors = out.last_hidden_state[0].numpy().astype(np.float32)
        if getattr(out, "pooler_output", None) is not None:
            pooled = out.pooler_output[0].numpy().astype(np.float32)
        else:
            pooled = vectors[0]
        pieces = self.tokenizer.convert_ids_to_tokens(batch["input_ids"][0])
        return EncodedSequence(pieces, vectors, pooled, list(word_ids))


def make_encoder(spec: str):
    """Build an encoder from a CLI spec: "stub", "stub:32", or a model name."""
    if spec == "stub" or spec.startswith("stub:"):
        dim = int(spec.split(":", 1)[1]) if ":" in spec else 16
        return StubEncoder(dim)
    return TransformersEncoder(spec)
