"""Syntactic parser backends producing bracketed trees and head arrays.

The heuristic backend needs no models: it splits at coordinating tokens for
a flat clause structure and emits left-to-right chain dependencies. The
supar adapters use the same parser families as the upstream experiments when
that package is installed.
"""
from __future__ import annotations

from .tokenize import escape_token as _escape

SPLIT_TOKENS = {"and", "but", "or", "while", "yet", "however", ","}


class ParserError(RuntimeError):
    pass


class HeuristicConstituencyParser:
    name = "heuristic"

    def parse(self, tokens: list[str]) -> str:
        if not tokens:
            raise ParserError("cannot parse an empty sentence")
        words = [_escape(t) for t in tokens]
        chunks: list[list[str]] = [[]]
        seps: list[str] = []
        for w in words:
            if w.lower() in SPLIT_TOKENS and chunks[-1]:
                seps.append(w)
                chunks.append([])
            else:
                chunks[-1].append(w)
        if not chunks[-1]:
            # trailing separator: fold it back into the last chunk
            chunks.pop()
            chunks[-1].append(seps.pop())
        if len(chunks) == 1:
            return f"(S (C {' '.join(chunks[0])}))"
        parts = [f"(C {' '.join(chunks[0])})"]
        for sep, chunk in zip(seps, chunks[1:]):
            parts.append(f"(CC {sep})")
            parts.append(f"(C {' '.join(chunk)})")
        return "(S " + " ".join(parts) + ")"


class HeuristicDependencyParser:
    name = "heuristic"

    def parse(self, tokens: list[str]) -> list[int]:
        if not tokens:
            raise ParserError("cannot parse an empty sentence")
        return [-1] + list(range(len(tokens) - 1))


class SuparConstituencyParser:
    name = "supar-crf-con"

    def __init__(self, model: str = "crf-con-en"):
        from supar import Parser
        self.parser = Parser.load(model)

    def parse(self, tokens: list[str]) -> str:
        dataset = self.parser.predict([[_escape(t) for t in tokens]],
                                      verbose=False)
        return str(dataset.trees[0])


class SuparDependencyParser:
    name = "supar-biaffine-dep"

    def __init__(self, model: str = "biaffine-dep-en"):
        from supar import Parser
        self.parser = Parser.load(model)

    def parse(self, tokens: list[str]) -> list[int]:
        dataset = self.parser.predict([[_escape(t) for t in tokens]],
                                      verbose=False)
        return [h - 1 if h > 0 else -1 for h in dataset.arcs[0]]


def make_parsers(spec: str):
    if spec == "heuristic":
        return HeuristicConstituencyParser(), HeuristicDependencyParser()
    if spec == "supar":
        return SuparConstituencyParser(), SuparDependencyParser()
    raise ParserError(f"unknown parser backend {spec!r}")
