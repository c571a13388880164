"""Run configuration: flat key=value files plus validation."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields

from .graphs import FUSION_MODES
from .treebank import ValidationError

INTER_VARIANTS = ("off", "bi", "undirected", "adjacent_aspect",
                  "bi_adjacent_aspect", "global_aspect")
ENCODER_MODES = ("toy", "archive")

SEED_ENV = "BISYN_SEED"


@dataclass
class ModelConfig:
    dim: int = 32
    heads: int = 4
    blocks: int = 1
    layers_per_block: int = 3
    ff_mult: int = 4
    fusion_mode: str = "cond_add"
    inter_variant: str = "bi"
    inter_blocks: int = 1
    inter_layers: int = 2
    encoder_mode: str = "toy"
    encoder_archive: str = ""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 1e-5
    dropout_io: float = 0.1
    dropout_between: float = 0.2
    seed: int = 0
    epochs: int = 200
    patience: int = 30
    accum_sentences: int = 1

    def validate(self) -> None:
        if self.dim <= 0 or self.heads <= 0:
            raise ValidationError("model dims must be positive")
        if self.dim % self.heads != 0:
            raise ValidationError(f"dim {self.dim} not divisible by "
                                  f"{self.heads} heads")
        if not 1 <= self.blocks <= 3 or not 1 <= self.inter_blocks <= 3:
            raise ValidationError("block counts must be in [1, 3]")
        if self.layers_per_block < 1 or self.inter_layers < 1 or self.ff_mult < 1:
            raise ValidationError("layer counts must be positive")
        if self.fusion_mode not in FUSION_MODES:
            raise ValidationError(f"unknown fusion mode {self.fusion_mode!r}")
        if self.inter_variant not in INTER_VARIANTS:
            raise ValidationError(f"unknown inter variant {self.inter_variant!r}")
        if self.encoder_mode not in ENCODER_MODES:
            raise ValidationError(f"unknown encoder mode {self.encoder_mode!r}")
        if self.encoder_mode == "archive" and not self.encoder_archive:
            raise ValidationError("archive encoder needs encoder.archive path")
        for rate in (self.dropout_io, self.dropout_between):
            if not 0.0 <= rate < 1.0:
                raise ValidationError(f"dropout rate {rate} outside [0, 1)")
        for val, name in ((self.lr, "lr"), (self.l2, "l2"), (self.eps, "eps")):
            if val < 0:
                raise ValidationError(f"optimizer.{name} must be non-negative")
        if self.epochs < 1 or self.patience < 0 or self.accum_sentences < 1:
            raise ValidationError("epochs/patience/accum out of range")


# config-file key -> field name
KEY_MAP = {
    "model.dim": "dim",
    "model.heads": "heads",
    "model.blocks": "blocks",
    "model.layers_per_block": "layers_per_block",
    "model.ff_mult": "ff_mult",
    "fusion.mode": "fusion_mode",
    "inter.variant": "inter_variant",
    "inter.blocks": "inter_blocks",
    "inter.layers": "inter_layers",
    "encoder.mode": "encoder_mode",
    "encoder.archive": "encoder_archive",
    "optimizer.lr": "lr",
    "optimizer.beta1": "beta1",
    "optimizer.beta2": "beta2",
    "optimizer.eps": "eps",
    "optimizer.l2": "l2",
    "dropout.io": "dropout_io",
    "dropout.between": "dropout_between",
    "seed": "seed",
    "epochs": "epochs",
    "patience": "patience",
    "train.accum": "accum_sentences",
}

_TYPES = {f.name: f.type for f in fields(ModelConfig)}


def _coerce(field_name: str, raw: str):
    kind = _TYPES[field_name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path: str | None = None, overrides: dict | None = None,
                env: dict | None = None) -> ModelConfig:
    """Build a config from an optional key=value file, overrides, and env."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{lineno}: expected key=value")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in KEY_MAP:
                    raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[KEY_MAP[key]] = _coerce(KEY_MAP[key], raw)
                except ValueError:
                    raise ValidationError(
                        f"{path}:{lineno}: bad value {raw!r} for {key}") from None
    if overrides:
        values.update(overrides)
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            values["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer") from None
    config = ModelConfig(**values)
    config.validate()
    return config


def config_to_dict(config: ModelConfig) -> dict:
    return asdict(config)
