"""Word tokenization with character offsets and span alignment."""
from __future__ import annotations

import re

_WORD = re.compile(r"\w+|[^\w\s]")


class AlignmentError(ValueError):
    pass


def escape_token(token: str) -> str:
    """Normalize a token for the bracketed-tree format (no parens/spaces)."""
    return (token.replace("(", "-LRB-").replace(")", "-RRB-")
            .replace(" ", "_")) or "_"


def tokenize(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Split into words/punctuation, returning tokens and char spans."""
    tokens, spans = [], []
    for m in _WORD.finditer(text):
        tokens.append(m.group())
        spans.append((m.start(), m.end()))
    return tokens, spans


def char_span_to_tokens(spans: list[tuple[int, int]], start: int,
                        end: int) -> tuple[int, int]:
    """Map a character span to a [from, to) token span.

    The span must begin at a token start and finish at a token end
    (surrounding whitespace is tolerated); anything else raises.
    """
    if end <= start:
        raise AlignmentError(f"empty character span [{start},{end})")
    covered = [i for i, (s, e) in enumerate(spans) if s < end and e > start]
    if not covered:
        raise AlignmentError(f"character span [{start},{end}) covers no token")
    first, last = covered[0], covered[-1]
    if covered != list(range(first, last + 1)):
        raise AlignmentError(f"character span [{start},{end}) is discontiguous")
    if spans[first][0] < start or spans[last][1] > end:
        raise AlignmentError(
            f"character span [{start},{end}) splits a token "
            f"({spans[first]}..{spans[last]})")
    return first, last + 1
