"""Self-describing parameter dumps: manifest JSON + float32 blob."""
from __future__ import annotations

import json
import os

import numpy as np

from .config import ModelConfig, config_to_dict
from .intra import UNK
from .model import SentimentModel
from .treebank import ValidationError

MANIFEST_NAME = "model.manifest.json"
BLOB_NAME = "model.blob"


def save_model(out_dir: str, model: SentimentModel) -> None:
    os.makedirs(out_dir, exist_ok=True)
    records = []
    offset = 0
    with open(os.path.join(out_dir, BLOB_NAME), "wb") as blob:
        for name, tensor in model.store.items():
            data = np.ascontiguousarray(tensor.data, dtype="<f4")
            blob.write(data.tobytes())
            records.append({"key": name, "shape": list(data.shape),
                            "offset": offset})
            offset += data.size * 4
    vocab = None
    if model.encoder.mode == "toy":
        ordered = sorted(model.encoder.vocab, key=model.encoder.vocab.get)
        vocab = ordered
    manifest = {"format": "bisyn-checkpoint", "blob": BLOB_NAME,
                "config": config_to_dict(model.config), "vocab": vocab,
                "params": records}
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh)


def load_model(model_dir: str) -> SentimentModel:
    manifest_path = os.path.join(model_dir, MANIFEST_NAME)
    blob_path = os.path.join(model_dir, BLOB_NAME)
    if not os.path.exists(manifest_path) or not os.path.exists(blob_path):
        raise ValidationError(f"no checkpoint found in {model_dir}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "bisyn-checkpoint":
        raise ValidationError(f"{manifest_path} is not a checkpoint manifest")
    config = ModelConfig(**manifest["config"])
    vocab = None
    if manifest["vocab"] is not None:
        vocab = {w: i for i, w in enumerate(manifest["vocab"])}
        if vocab.get(UNK) != 0:
            raise ValidationError("checkpoint vocabulary is malformed")
    model = SentimentModel(config, vocab)
    with open(blob_path, "rb") as fh:
        blob = fh.read()
    arrays = {}
    for rec in manifest["params"]:
        shape = tuple(rec["shape"])
        count = int(np.prod(shape)) if shape else 1
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=rec["offset"])
        arrays[rec["key"]] = flat.reshape(shape).copy()
    try:
        model.store.load_arrays(arrays)
    except ValueError as exc:
        raise ValidationError(f"checkpoint does not match model: {exc}") from None
    return model
