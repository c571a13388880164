"""Command-line surface: `preproc build` and `preproc embed`."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .build import build_dataset, write_dataset
from .embed import export_embeddings
from .encoders import make_encoder
from .parsers import ParserError, make_parsers


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="preproc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="convert a raw corpus to dataset records")
    p.add_argument("--in", required=True, dest="raw_path")
    p.add_argument("--out", required=True)
    p.add_argument("--parser", default="heuristic",
                   choices=("heuristic", "supar"))

    p = sub.add_parser("embed", help="export embeddings for a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--encoder", required=True,
                   help='"stub", "stub:<dim>", or a pretrained model name')
    p.add_argument("--out", required=True)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "build":
            con_parser, dep_parser = make_parsers(args.parser)
            with open(args.raw_path, encoding="utf-8") as fh:
                records, skipped = build_dataset(fh, con_parser, dep_parser)
            write_dataset(records, args.out)
            print(f"wrote {len(records)} records to {args.out} "
                  f"({len(skipped)} skipped)")
            return 0
        with open(args.data, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        encoder = make_encoder(args.encoder)
        written = export_embeddings(records, encoder, args.out)
        print(f"wrote {written} archive records to {args.out}")
        return 0
    except (OSError, ParserError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
