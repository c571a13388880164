"""Raw corpus -> dataset records in the core interchange schema.

Raw input is line-delimited JSON: {"id": str?, "text": str, "aspects":
[{"start": char, "end": char, "polarity": "positive"|"negative"|"neutral"}]}.
Character spans are mapped to token spans over one shared tokenization; both
parses run over that same tokenization. Records that cannot be aligned or
parsed are skipped with a logged reason, never emitted broken.
"""
from __future__ import annotations

import json
import logging

from .parsers import ParserError
from .tokenize import AlignmentError, char_span_to_tokens, escape_token, tokenize

log = logging.getLogger("preproc.build")

POLARITIES = ("positive", "negative", "neutral")


class RawRecordError(ValueError):
    pass


def convert_record(raw: dict, con_parser, dep_parser, record_id: str) -> dict:
    text = raw.get("text")
    if not isinstance(text, str) or not text.strip():
        raise RawRecordError("missing or empty 'text'")
    raw_aspects = raw.get("aspects") or []
    if not raw_aspects:
        raise RawRecordError("no aspects")
    tokens, spans = tokenize(text)
    aspects = []
    for a in raw_aspects:
        pol = a.get("polarity")
        if pol not in POLARITIES:
            raise RawRecordError(f"bad polarity {pol!r}")
        try:
            start, end = char_span_to_tokens(spans, int(a["start"]), int(a["end"]))
        except (AlignmentError, KeyError, TypeError, ValueError) as exc:
            raise RawRecordError(f"aspect alignment failed: {exc}") from None
        aspects.append({"from": start, "to": end, "polarity": pol})
    aspects.sort(key=lambda a: a["from"])
    for prev, nxt in zip(aspects, aspects[1:]):
        if nxt["from"] < prev["to"]:
            raise RawRecordError("overlapping aspect spans")
    out_tokens = [escape_token(t) for t in tokens]
    try:
        con = con_parser.parse(tokens)
        heads = dep_parser.parse(tokens)
    except ParserError as exc:
        raise RawRecordError(f"parser failure: {exc}") from None
    if len(heads) != len(out_tokens):
        raise RawRecordError("dependency parse length mismatch")
    return {"id": record_id, "tokens": out_tokens, "aspects": aspects,
            "con": con, "dep_heads": heads}


def build_dataset(raw_lines, con_parser, dep_parser):
    """Convert raw records; returns (records, skipped) with logged reasons."""
    records, skipped = [], []
    for i, line in enumerate(raw_lines):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append((i + 1, f"bad JSON: {exc}"))
            log.warning("line %d skipped: bad JSON", i + 1)
            continue
        record_id = str(raw.get("id", f"r{i + 1:05d}"))
        try:
            records.append(convert_record(raw, con_parser, dep_parser, record_id))
        except RawRecordError as exc:
            skipped.append((i + 1, str(exc)))
            log.warning("line %d (%s) skipped: %s", i + 1, record_id, exc)
    return records, skipped


def write_dataset(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
