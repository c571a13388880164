"""Precomputed-embedding archives: JSON manifest + raw float32 blob.

An archive named <path> is the pair <path>.manifest.json / <path>.blob. Each
record is (1 + n_tokens) rows of dim little-endian float32 values at the byte
offset listed in the manifest; row 0 is the pooled vector. Keys follow
"<sentence_id>#<aspect_index>" for aspect-conditioned records and
"<sentence_id>#ctx" for the aspect-free one.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .treebank import ValidationError

MANIFEST_SUFFIX = ".manifest.json"
BLOB_SUFFIX = ".blob"


@dataclass
class EmbeddingRecord:
    key: str
    dim: int
    pooled: np.ndarray      # [dim]
    rows: np.ndarray        # [n_tokens, dim]


def _paths(path: str) -> tuple[str, str]:
    base = str(path)
    if base.endswith(MANIFEST_SUFFIX):
        base = base[:-len(MANIFEST_SUFFIX)]
    elif base.endswith(BLOB_SUFFIX):
        base = base[:-len(BLOB_SUFFIX)]
    return base + MANIFEST_SUFFIX, base + BLOB_SUFFIX


class ArchiveWriter:
    def __init__(self, path: str):
        self.manifest_path, self.blob_path = _paths(path)
        self._records: list[dict] = []
        self._seen: set[str] = set()
        self._blob = open(self.blob_path, "wb")
        self._offset = 0

    def add(self, key: str, pooled: np.ndarray, rows: np.ndarray) -> None:
        if key in self._seen:
            raise ValidationError(f"duplicate archive key {key!r}")
        pooled = np.ascontiguousarray(pooled, dtype="<f4")
        rows = np.ascontiguousarray(rows, dtype="<f4")
        if pooled.ndim != 1 or rows.ndim != 2 or rows.shape[1] != pooled.shape[0]:
            raise ValidationError(f"record {key!r} has inconsistent shapes "
                                  f"{pooled.shape} / {rows.shape}")
        self._records.append({"key": key, "n_tokens": int(rows.shape[0]),
                              "dim": int(pooled.shape[0]), "offset": self._offset})
        self._seen.add(key)
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


class Archive:
    """Read-only view of an archive; immutable after construction."""

    def __init__(self, path: str):
        self.manifest_path, self.blob_path = _paths(path)
        if not os.path.exists(self.manifest_path):
            raise ValidationError(f"archive manifest {self.manifest_path} not found")
        if not os.path.exists(self.blob_path):
            raise ValidationError(f"archive blob {self.blob_path} not found")
        with open(self.manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        with open(self.blob_path, "rb") as fh:
            self._blob = fh.read()
        self._index: dict[str, dict] = {}
        for rec in manifest["records"]:
            end = rec["offset"] + (1 + rec["n_tokens"]) * rec["dim"] * 4
            if end > len(self._blob):
                raise ValidationError(
                    f"record {rec['key']!r} extends past the end of the blob")
            self._index[rec["key"]] = rec

    def keys(self) -> list[str]:
        return list(self._index)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def get_record(self, key: str) -> EmbeddingRecord:
        if key not in self._index:
            raise ValidationError(f"missing key {key!r}")
        rec = self._index[key]
        dim, n = rec["dim"], rec["n_tokens"]
        flat = np.frombuffer(self._blob, dtype="<f4",
                             count=(1 + n) * dim, offset=rec["offset"])
        return EmbeddingRecord(key=key, dim=dim,
                               pooled=flat[:dim].copy(),
                               rows=flat[dim:].reshape(n, dim).copy())


def open_archive(path: str) -> Archive:
    return Archive(path)
