"""Grammar-generated corpus for desk-scale training and evaluation.

Sentences are 1-3 clauses joined by a conjunction; each clause is one aspect
(occasionally two words), a copula, and an opinion word whose polarity is
the aspect's gold label. Trees and head arrays are emitted by construction:
opinions head their clauses, later opinions attach to the first one, and the
conjunction attaches to the following opinion, so adjacent-clause opinions
are always linked across the clause boundary.

With noise=True every sentence has at least two clauses and each clause's
copula (and determiner, when present) is rerouted to the opinion word of a
different clause with a different polarity: extra misleading cross-clause
dependency edges by construction, while every aspect keeps its true edge to
its own opinion.
"""
from __future__ import annotations

import numpy as np

from .treebank import (AspectSpan, ConstituencyTree, DependencyTree, Sentence,
                       parse_bracketed, record_to_json)

ASPECT_WORDS = ["ambiance", "battery", "coffee", "food", "keyboard", "pizza",
                "screen", "service", "staff", "wine"]
ASPECT_PAIRS = [("battery", "life"), ("main", "courses"), ("wine", "list")]
OPINIONS = {
    "positive": ["great", "excellent", "fantastic", "delicious", "wonderful"],
    "negative": ["dreadful", "terrible", "awful", "horrible", "disappointing"],
    "neutral": ["okay", "average", "ordinary", "plain", "acceptable"],
}
COPULAS = ["is", "was"]
CONJUNCTIONS = ["and", "but", "while"]
POLS = list(OPINIONS)


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def _polarity_sequence(rng: np.random.Generator, k: int, noise: bool) -> list[str]:
    if not noise:
        return [_pick(rng, POLS) for _ in range(k)]
    if k == 2:
        first = _pick(rng, POLS)
        return [first, _pick(rng, [p for p in POLS if p != first])]
    # k == 3: rerouting is cyclic, so all three labels must differ
    pols = list(POLS)
    rng.shuffle(pols)
    return pols


def generate_synthetic(n_sentences: int, seed: int, noise: bool = False,
                       ) -> list[tuple[Sentence, ConstituencyTree, DependencyTree]]:
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_sentences):
        k = int(rng.integers(2, 4)) if noise else int(rng.integers(1, 4))
        pols = _polarity_sequence(rng, k, noise)
        tokens: list[str] = []
        clause_brackets: list[str] = []
        aspects: list[AspectSpan] = []
        aspect_last: list[int] = []     # head word position of each aspect
        opinion_pos: list[int] = []
        conj_pos: list[int] = []
        dets: list[bool] = []
        for c in range(k):
            if c > 0:
                conj_pos.append(len(tokens))
                tokens.append(_pick(rng, CONJUNCTIONS))
            det = rng.random() < 0.5
            dets.append(det)
            two_word = rng.random() < 0.15
            np_parts = []
            if det:
                np_parts.append("(DT the)")
                tokens.append("the")
            start = len(tokens)
            if two_word:
                w1, w2 = _pick(rng, ASPECT_PAIRS)
                tokens.extend([w1, w2])
                np_parts.extend([f"(NN {w1})", f"(NN {w2})"])
            else:
                word = _pick(rng, ASPECT_WORDS)
                tokens.append(word)
                np_parts.append(f"(NN {word})")
            aspects.append(AspectSpan(start, len(tokens), pols[c]))
            aspect_last.append(len(tokens) - 1)
            cop = _pick(rng, COPULAS)
            tokens.append(cop)
            opinion = _pick(rng, OPINIONS[pols[c]])
            opinion_pos.append(len(tokens))
            tokens.append(opinion)
            clause_brackets.append(
                f"(S (NP {' '.join(np_parts)}) (VP (VBZ {cop}) (JJ {opinion})))")

        heads = [0] * len(tokens)
        det_pos = {c: aspects[c].start - 1 for c in range(k) if dets[c]}
        for c in range(k):
            a_start, a_end = aspects[c].start, aspects[c].end
            foreign = opinion_pos[(c + 1) % k]
            heads[aspect_last[c]] = opinion_pos[c]
            for pos in range(a_start, a_end - 1):
                heads[pos] = aspect_last[c]
            if c in det_pos:
                heads[det_pos[c]] = foreign if noise else aspect_last[c]
            heads[opinion_pos[c] - 1] = foreign if noise else opinion_pos[c]
            heads[opinion_pos[c]] = -1 if c == 0 else opinion_pos[c - 1]
        for c, pos in enumerate(conj_pos):
            heads[pos] = opinion_pos[c + 1]

        if k == 1:
            bracket = clause_brackets[0]
        else:
            parts = [clause_brackets[0]]
            for c in range(1, k):
                parts.append(f"(CC {tokens[conj_pos[c - 1]]})")
                parts.append(clause_brackets[c])
            bracket = "(S " + " ".join(parts) + ")"

        sentence = Sentence(f"synth-{i:04d}", tokens, aspects)
        con = parse_bracketed(bracket, tokens)
        dep = DependencyTree(heads)
        dep.validate()
        out.append((sentence, con, dep))
    return out


def write_synthetic(path, n_sentences: int, seed: int, noise: bool = False) -> int:
    records = generate_synthetic(n_sentences, seed, noise)
    with open(path, "w", encoding="utf-8") as fh:
        for sentence, con, dep in records:
            fh.write(record_to_json(sentence, con, dep) + "\n")
    return len(records)
