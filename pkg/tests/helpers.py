"""Shared fixtures and random-structure generators for the test suite."""
from __future__ import annotations

import numpy as np

from bisyn.treebank import (AspectSpan, ConstituencyTree, DependencyTree,
                            Sentence, parse_bracketed)

# "The food is great but the service and the environment are dreadful":
# two clauses joined by "but"; the dependency parse links "dreadful" to
# "great" across the clause boundary (the classic misleading edge).
TWO_CLAUSE_TOKENS = ["The", "food", "is", "great", "but", "the", "service", "and",
              "the", "environment", "are", "dreadful"]
TWO_CLAUSE_BRACKETED = ("(S (S (NP (DT The) (NN food)) (VP (VBZ is) (JJ great))) "
                 "(CC but) "
                 "(S (NP (DT the) (NN service) (CC and) (DT the) (NN environment)) "
                 "(VP (VBP are) (JJ dreadful))))")
TWO_CLAUSE_HEADS = [1, 3, 3, -1, 11, 6, 11, 9, 9, 6, 11, 3]
TWO_CLAUSE_ASPECTS = [("food", 1, 2, "positive"), ("service", 6, 7, "negative"),
               ("environment", 9, 10, "negative")]
GREAT, DREADFUL = 3, 11

# "disappointed with the taste of the food": no branch sits between the two
# aspects under their lowest common ancestor, so segmentation falls back to
# the words between them ("of the").
FALLBACK_TOKENS = ["disappointed", "with", "the", "taste", "of", "the", "food"]
FALLBACK_BRACKETED = ("(VP (VBN disappointed) (PP (IN with) (NP (NP (DT the) "
                   "(NN taste)) (PP (IN of) (NP (DT the) (NN food))))))")
FALLBACK_HEADS = [-1, 3, 3, 0, 6, 6, 3]

# compact 5-token, 2-aspect sentence for end-to-end gradient checks
MINI_TOKENS = ["food", "is", "great", "but", "service"]
MINI_BRACKETED = ("(S (S (NP (NN food)) (VP (VBZ is) (ADJP (JJ great)))) "
                  "(CC but) (NP (NN service)))")
MINI_HEADS = [2, 2, -1, 4, 2]


def two_clause_sentence() -> tuple[Sentence, ConstituencyTree, DependencyTree]:
    sent = Sentence("tc", list(TWO_CLAUSE_TOKENS),
                    [AspectSpan(s, e, p) for _, s, e, p in TWO_CLAUSE_ASPECTS])
    return sent, parse_bracketed(TWO_CLAUSE_BRACKETED, TWO_CLAUSE_TOKENS), DependencyTree(list(TWO_CLAUSE_HEADS))


def fallback_sentence() -> tuple[Sentence, ConstituencyTree, DependencyTree]:
    sent = Sentence("fb", list(FALLBACK_TOKENS),
                    [AspectSpan(3, 4, "negative"), AspectSpan(6, 7, "neutral")])
    return sent, parse_bracketed(FALLBACK_BRACKETED, FALLBACK_TOKENS), DependencyTree(list(FALLBACK_HEADS))


def mini_sentence() -> tuple[Sentence, ConstituencyTree, DependencyTree]:
    sent = Sentence("mini", list(MINI_TOKENS),
                    [AspectSpan(0, 1, "positive"), AspectSpan(4, 5, "negative")])
    return sent, parse_bracketed(MINI_BRACKETED, MINI_TOKENS), DependencyTree(list(MINI_HEADS))


_LABELS = ["S", "NP", "VP", "PP", "ADJP", "SBAR", "X"]


def _random_struct(rng: np.random.Generator, lo: int, hi: int, depth: int) -> str:
    width = hi - lo
    label = _LABELS[int(rng.integers(len(_LABELS)))]
    if width == 1:
        if depth < 8 and rng.random() < 0.2:
            return f"({label} {_random_struct(rng, lo, hi, depth + 1)})"
        return f"w{lo}"
    if depth < 8 and rng.random() < 0.15:
        return f"({label} {_random_struct(rng, lo, hi, depth + 1)})"
    k = int(rng.integers(2, min(4, width) + 1))
    cuts = sorted(rng.choice(np.arange(lo + 1, hi), size=k - 1, replace=False).tolist())
    bounds = [lo, *cuts, hi]
    parts = [_random_struct(rng, bounds[i], bounds[i + 1], depth + 1)
             for i in range(k)]
    return f"({label} " + " ".join(parts) + ")"


def random_bracketing(rng: np.random.Generator, n_tokens: int) -> str:
    body = _random_struct(rng, 0, n_tokens, 1)
    if not body.startswith("("):
        return f"(S {body})"
    return body


def random_tree(rng: np.random.Generator, n_tokens: int) -> ConstituencyTree:
    return parse_bracketed(random_bracketing(rng, n_tokens))


def random_dep(rng: np.random.Generator, n_tokens: int) -> DependencyTree:
    order = rng.permutation(n_tokens)
    heads = [0] * n_tokens
    heads[int(order[0])] = -1
    for i in range(1, n_tokens):
        heads[int(order[i])] = int(order[int(rng.integers(0, i))])
    return DependencyTree(heads)


def token_ancestor_at_height(tree: ConstituencyTree, token: int, height: int) -> int:
    """Brute-force: ascend `height` ancestors from the token's leaf, clamping."""
    node = tree.leaf_of_token(token)
    chain = tree.ancestors(node)
    return chain[min(height, len(chain)) - 1]
