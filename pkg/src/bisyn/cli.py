"""Command-line surface.

Exit codes: 0 success, 1 validation error (bad data, config, or arguments),
2 runtime or numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .autodiff import NumericError
from .checkpoint import load_model, save_model
from .config import load_config
from .graphs import build_ca, build_da, clause_partition, fuse, layer_partition
from .inter import phrase_segmentation
from .intra import select_graph_layers
from .model import load_instances
from .synth import write_synthetic
from .train import evaluate, train
from .treebank import ValidationError, collapse_aspects, load_dataset


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bisyn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", default=None)
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--valid", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("predict", help="emit per-aspect predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("graph", help="dump CA/DA/FA matrices for a sentence")
    p.add_argument("--data", required=True)
    p.add_argument("--id", required=True, dest="sid")
    p.add_argument("--fusion", default="cond_add")
    p.add_argument("--layers", type=int, default=3)

    p = sub.add_parser("ps", help="print segmentation terms for a sentence")
    p.add_argument("--data", required=True)
    p.add_argument("--id", required=True, dest="sid")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", action="store_true")
    return parser


def _find_record(path, sid):
    for sentence, con, dep in load_dataset(path):
        if sentence.id == sid:
            return sentence, con, dep
    raise ValidationError(f"no record with id {sid!r} in {path}")


def _matrix_lines(name: str, mat) -> list[str]:
    lines = [name]
    lines.extend("  " + " ".join(str(int(v)) for v in row) for row in mat)
    return lines


def _cmd_train(args) -> int:
    config = load_config(args.config)
    train_set = load_instances(args.train_path, config)
    valid_set = load_instances(args.valid, config) if args.valid else None
    log = None if args.quiet else lambda msg: print(msg)
    result = train(config, train_set, valid_set, log=log)
    save_model(args.out, result.model)
    with open(f"{args.out}/history.json", "w", encoding="utf-8") as fh:
        json.dump(result.history, fh)
    best = result.best_valid_accuracy
    print(f"saved model to {args.out} (best valid accuracy {best:.4f} "
          f"at epoch {result.best_epoch})")
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_instances(args.data, model.config)
    if not dataset:
        raise ValidationError(f"no records in {args.data}")
    report = evaluate(model, dataset)
    print(f"accuracy {report.accuracy:.4f}")
    print(f"macro_f1 {report.macro_f1:.4f}")
    for pol, pc in zip(("positive", "negative", "neutral"), report.per_class):
        print(f"{pol:8s} precision {pc['precision']:.4f} "
              f"recall {pc['recall']:.4f} f1 {pc['f1']:.4f}")
    print("confusion (rows gold, cols pred):")
    for line in _matrix_lines("", report.confusion)[1:]:
        print(line)
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    dataset = load_instances(args.data, model.config)
    labels = ("positive", "negative", "neutral")
    for inst in dataset:
        for aspect, (pred, probs) in zip(inst.sentence.aspects,
                                         model.predict_sentence(inst)):
            print(json.dumps({
                "id": inst.sentence.id,
                "aspect": inst.sentence.tokens[aspect.start],
                "from": aspect.start, "to": aspect.end,
                "label": labels[pred],
                "probs": [round(float(p), 6) for p in probs],
            }))
    return 0


def _cmd_graph(args) -> int:
    sentence, con, dep = _find_record(args.data, args.sid)
    sentence, con, dep, _ = collapse_aspects(sentence, con, dep)
    clause = clause_partition(con)
    da = build_da(dep, self_loops=args.fusion == "dep_only")
    print(f"sentence {sentence.id}: {' '.join(sentence.tokens)}")
    for line in _matrix_lines("DA", da):
        print(line)
    for k, aspect in enumerate(sentence.aspects):
        heights = select_graph_layers(con, aspect.start, args.layers)
        print(f"aspect {k} ({sentence.tokens[aspect.start]!r}) "
              f"heights {heights}")
        for h in heights:
            ca = build_ca(layer_partition(con, h))
            fa = fuse(ca, da, clause, args.fusion)
            for line in _matrix_lines(f"  CA h={h}", ca):
                print(line)
            for line in _matrix_lines(f"  FA h={h} ({args.fusion})", fa):
                print(line)
    return 0


def _cmd_ps(args) -> int:
    sentence, con, dep = _find_record(args.data, args.sid)
    sentence, con, dep, _ = collapse_aspects(sentence, con, dep)
    positions = [a.start for a in sentence.aspects]
    if len(positions) < 2:
        print("single-aspect sentence: no segmentation terms")
        return 0
    for k in range(len(positions) - 1):
        term = phrase_segmentation(con, positions[k], positions[k + 1])
        words = [sentence.tokens[w] for w in term.words]
        left = sentence.tokens[positions[k]]
        right = sentence.tokens[positions[k + 1]]
        print(f"PS({left}, {right}) = {words} [{term.source}]")
    return 0


def _cmd_synth(args) -> int:
    count = write_synthetic(args.out, args.n, args.seed, args.noise)
    print(f"wrote {count} sentences to {args.out}")
    return 0


_COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "predict": _cmd_predict,
             "graph": _cmd_graph, "ps": _cmd_ps, "synth": _cmd_synth}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
