"""Training loop, evaluation metrics, and validation-based selection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import NumericError
from .config import ModelConfig
from .intra import ToyEncoder
from .model import Instance, SentimentModel
from .optim import AdamState, adam_step
from .treebank import POLARITIES


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    per_class: list[dict]           # one {precision, recall, f1} per polarity
    confusion: np.ndarray           # [gold, pred], 3x3


@dataclass
class TrainResult:
    model: SentimentModel
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_valid_accuracy: float = 0.0


def metrics_from_confusion(confusion: np.ndarray) -> EvalReport:
    """Accuracy, per-class P/R/F1, macro-F1 (absent classes score 0)."""
    confusion = np.asarray(confusion, dtype=np.int64)
    total = confusion.sum()
    accuracy = float(np.trace(confusion) / total) if total else 0.0
    per_class = []
    for c in range(len(POLARITIES)):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append({"precision": float(precision), "recall": float(recall),
                          "f1": float(f1)})
    macro = float(np.mean([pc["f1"] for pc in per_class]))
    return EvalReport(accuracy, macro, per_class, confusion)


def evaluate(model: SentimentModel, dataset: list[Instance]) -> EvalReport:
    if not dataset:
        raise ValueError("cannot evaluate an empty dataset")
    confusion = np.zeros((3, 3), dtype=np.int64)
    for inst in dataset:
        for (pred, _), gold in zip(model.predict_sentence(inst), inst.labels):
            confusion[gold, pred] += 1
    return metrics_from_confusion(confusion)


def build_vocab(dataset: list[Instance]) -> dict[str, int]:
    return ToyEncoder.build_vocab([inst.sentence.tokens for inst in dataset])


def train(config: ModelConfig, train_set: list[Instance],
          valid_set: list[Instance] | None = None,
          model: SentimentModel | None = None,
          log=None) -> TrainResult:
    """Adam over per-sentence batches; keeps the best-validation parameters.

    The epoch loss is the plain sum of per-aspect cross-entropies, so
    gradient accumulation changes step timing but never the objective.
    Stops after `patience` epochs without a validation improvement. A
    non-finite loss aborts immediately, naming the sentence.
    """
    if not train_set:
        raise ValueError("cannot train on an empty dataset")
    if model is None:
        vocab = build_vocab(train_set) if config.encoder_mode == "toy" else None
        model = SentimentModel(config, vocab)
    valid = valid_set if valid_set else train_set
    state = AdamState.for_store(model.store, lr=config.lr, beta1=config.beta1,
                                beta2=config.beta2, eps=config.eps, l2=config.l2)
    rng = np.random.default_rng(config.seed + 1)

    result = TrainResult(model)
    best_arrays = {name: t.data.copy() for name, t in model.store.items()}
    best_val = -1.0
    since_best = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_set))
        epoch_loss = 0.0
        model.store.zero_grad()
        pending = 0
        for idx in order:
            inst = train_set[int(idx)]
            loss = model.loss_sentence(inst, rng=rng, training=True)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(
                    f"non-finite loss at batch {inst.sentence.id!r} "
                    f"(epoch {epoch})")
            loss.backward()
            epoch_loss += value
            pending += 1
            if pending >= config.accum_sentences:
                adam_step(model.store, state)
                model.store.zero_grad()
                pending = 0
        if pending:
            adam_step(model.store, state)
            model.store.zero_grad()
        train_acc = evaluate(model, train_set).accuracy
        valid_acc = evaluate(model, valid).accuracy
        result.history.append({"epoch": epoch, "loss": epoch_loss,
                               "train_accuracy": train_acc,
                               "valid_accuracy": valid_acc})
        if log:
            log(f"epoch {epoch:3d}  loss {epoch_loss:9.4f}  "
                f"train {train_acc:.3f}  valid {valid_acc:.3f}")
        if valid_acc > best_val:
            best_val = valid_acc
            result.best_epoch = epoch
            best_arrays = {name: t.data.copy() for name, t in model.store.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break
    model.store.load_arrays(best_arrays)
    result.best_valid_accuracy = best_val
    return result
