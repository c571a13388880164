"""Export contextual embeddings into the core's archive format.

For every (sentence, aspect) the aspect-appended sequence is encoded, each
word's sub-token vectors are averaged into one row, aspect spans are
averaged into single rows (the core collapses multi-word aspects to one
token), and the result is stored under "<id>#<aspect_index>" with the
encoder's pooled vector as row 0. The bare sentence is stored once more
under "<id>#ctx" to feed segmentation-term nodes.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

log = logging.getLogger("preproc.embed")


@dataclass
class ExportJob:
    dataset_path: str
    encoder_spec: str
    archive_path: str


class ArchiveSink:
    """Writer for the archive container: JSON manifest + little-endian f32 blob."""

    def __init__(self, path: str):
        base = str(path)
        for suffix in (".manifest.json", ".blob"):
            if base.endswith(suffix):
                base = base[:-len(suffix)]
        self.manifest_path = base + ".manifest.json"
        self.blob_path = base + ".blob"
        self._records: list[dict] = []
        self._blob = open(self.blob_path, "wb")
        self._offset = 0

    def add(self, key: str, pooled: np.ndarray, rows: np.ndarray) -> None:
        pooled = np.ascontiguousarray(pooled, dtype="<f4")
        rows = np.ascontiguousarray(rows, dtype="<f4")
        self._records.append({"key": key, "n_tokens": int(rows.shape[0]),
                              "dim": int(pooled.shape[0]),
                              "offset": self._offset})
        self._blob.write(pooled.tobytes())
        self._blob.write(rows.tobytes())
        self._offset += (1 + rows.shape[0]) * pooled.shape[0] * 4

    def close(self) -> None:
        self._blob.close()
        manifest = {"blob": os.path.basename(self.blob_path),
                    "records": self._records}
        with open(self.manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def word_rows(seq, n_words: int) -> np.ndarray:
    """Average each word's sub-token vectors; words the tokenizer dropped
    get a zero row and a warning."""
    dim = seq.vectors.shape[1]
    rows = np.zeros((n_words, dim), dtype=np.float32)
    counts = np.zeros(n_words, dtype=np.int64)
    for vec, wid in zip(seq.vectors, seq.word_ids):
        if wid is None:
            continue
        rows[wid] += vec
        counts[wid] += 1
    missing = np.flatnonzero(counts == 0)
    for w in missing:
        log.warning("word %d produced no sub-tokens; emitting a zero row", w)
    counts[counts == 0] = 1
    return rows / counts[:, None]


def collapse_groups(n_tokens: int, aspect_spans: list[tuple[int, int]]
                    ) -> list[list[int]]:
    """Token groups after aspect collapsing: spans merge, the rest stay solo."""
    groups: list[list[int]] = []
    i = 0
    spans = sorted(aspect_spans)
    by_start = {s: e for s, e in spans}
    while i < n_tokens:
        if i in by_start:
            groups.append(list(range(i, by_start[i])))
            i = by_start[i]
        else:
            groups.append([i])
            i += 1
    return groups


def collapse_rows(rows: np.ndarray, groups: list[list[int]]) -> np.ndarray:
    return np.stack([rows[g].mean(axis=0) for g in groups]).astype(np.float32)


def export_embeddings(records: list[dict], encoder, archive_path: str) -> int:
    """Write (#aspects + 1) archive records per dataset record."""
    written = 0
    with ArchiveSink(archive_path) as sink:
        for rec in records:
            tokens = rec["tokens"]
            spans = [(a["from"], a["to"]) for a in rec["aspects"]]
            groups = collapse_groups(len(tokens), spans)
            for k, (start, end) in enumerate(spans):
                seq = encoder.encode(tokens, appended=tokens[start:end])
                rows = collapse_rows(word_rows(seq, len(tokens)), groups)
                sink.add(f"{rec['id']}#{k}", seq.pooled, rows)
                written += 1
            seq = encoder.encode(tokens)
            rows = collapse_rows(word_rows(seq, len(tokens)), groups)
            sink.add(f"{rec['id']}#ctx", seq.pooled, rows)
            written += 1
    return written
