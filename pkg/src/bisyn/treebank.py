"""Dataset interchange: sentences, aspect spans, bracketed trees, head arrays.

One record per line, JSON-encoded, UTF-8:
  {"id": str, "tokens": [str], "aspects": [{"from": int, "to": int,
   "polarity": "positive"|"negative"|"neutral"}], "con": str,
   "dep_heads": [int]}  (-1 marks the dependency root)

Aspect spans are [from, to) over tokens. Multi-word aspects are collapsed to
single tokens by collapse_aspects before any graph is built.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field


POLARITIES = ("positive", "negative", "neutral")
POLARITY_INDEX = {"positive": 0, "negative": 1, "neutral": 2}


class ValidationError(ValueError):
    """Malformed input data; message carries line/offset context."""


@dataclass
class AspectSpan:
    start: int          # inclusive token index
    end: int            # exclusive
    polarity: str

    @property
    def label(self) -> int:
        return POLARITY_INDEX[self.polarity]


@dataclass
class Sentence:
    id: str
    tokens: list[str]
    aspects: list[AspectSpan]


@dataclass
class Node:
    label: str
    children: list[int]
    span: tuple[int, int] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ConstituencyTree:
    nodes: list[Node]
    root: int
    _parents: list[int | None] | None = field(default=None, repr=False)

    @property
    def n_tokens(self) -> int:
        return self.nodes[self.root].span[1]

    def parents(self) -> list[int | None]:
        if self._parents is None:
            par: list[int | None] = [None] * len(self.nodes)
            for nid, node in enumerate(self.nodes):
                for c in node.children:
                    par[c] = nid
            self._parents = par
        return self._parents

    def leaf_ids(self) -> list[int]:
        """Leaf node ids in token order."""
        out: list[int] = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf:
                out.append(nid)
            else:
                stack.extend(reversed(node.children))
        return out

    def leaf_of_token(self, tok: int) -> int:
        return self.leaf_ids()[tok]

    def ancestors(self, nid: int) -> list[int]:
        """Ancestor ids from parent up to the root."""
        par = self.parents()
        out = []
        while par[nid] is not None:
            nid = par[nid]
            out.append(nid)
        return out

    def depth(self, nid: int) -> int:
        return len(self.ancestors(nid))

    def max_depth(self) -> int:
        return max(self.depth(l) for l in self.leaf_ids())

    def leaf_tokens(self) -> list[str]:
        return [self.nodes[l].label for l in self.leaf_ids()]

    def validate(self, tokens: list[str] | None = None) -> None:
        n = len(self.leaf_ids())
        if self.nodes[self.root].span != (0, n):
            raise ValidationError("root span does not cover all tokens")
        for pos, lid in enumerate(self.leaf_ids()):
            if self.nodes[lid].span != (pos, pos + 1):
                raise ValidationError(f"leaf {pos} has span {self.nodes[lid].span}")
        for nid, node in enumerate(self.nodes):
            if node.is_leaf:
                continue
            lo, hi = node.span
            cur = lo
            for c in node.children:
                cs, ce = self.nodes[c].span
                if cs != cur:
                    raise ValidationError(
                        f"node {nid} children are not contiguous at token {cur}")
                cur = ce
            if cur != hi:
                raise ValidationError(f"node {nid} span disagrees with children")
        if tokens is not None and self.leaf_tokens() != list(tokens):
            raise ValidationError("tree leaves do not match sentence tokens")

    def to_bracketed(self) -> str:
        def fmt(nid: int) -> str:
            node = self.nodes[nid]
            if node.is_leaf:
                return node.label
            return "(" + node.label + " " + " ".join(fmt(c) for c in node.children) + ")"
        return fmt(self.root)


@dataclass
class DependencyTree:
    heads: list[int]

    def __len__(self) -> int:
        return len(self.heads)

    def root(self) -> int:
        return self.heads.index(-1)

    def validate(self) -> None:
        n = len(self.heads)
        if n == 0:
            raise ValidationError("empty head array")
        roots = [i for i, h in enumerate(self.heads) if h == -1]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root, found {len(roots)}")
        for i, h in enumerate(self.heads):
            if h == i or not -1 <= h < n:
                raise ValidationError(f"token {i} has invalid head {h}")
        # every token must reach the root without revisiting a node
        for i in range(n):
            seen = set()
            j = i
            while j != -1:
                if j in seen:
                    raise ValidationError(f"head cycle through token {i}")
                seen.add(j)
                j = self.heads[j]

    def edges(self) -> list[tuple[int, int]]:
        return [(i, h) for i, h in enumerate(self.heads) if h != -1]


def parse_bracketed(text: str, expected_tokens: list[str] | None = None) -> ConstituencyTree:
    """Parse a Penn-style bracketing "(LABEL child child ...)" with bare-word leaves.

    When expected_tokens is given, leaves are checked against it as they are
    read, so mismatches are reported with a character offset.
    """
    def err(msg: str, pos: int):
        raise ValidationError(f"{msg} at offset {pos}")

    nodes: list[Node] = []
    stack: list[int] = []
    root_id: int | None = None
    leaf_count = 0
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "(":
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            start = j
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            label = text[start:j]
            if not label:
                err("missing node label after '('", i)
            if root_id is not None and not stack:
                err("trailing text after root node", i)
            nid = len(nodes)
            nodes.append(Node(label, []))
            if stack:
                nodes[stack[-1]].children.append(nid)
            else:
                root_id = nid
            stack.append(nid)
            i = j
        elif c == ")":
            if not stack:
                err("unbalanced ')'", i)
            nid = stack.pop()
            if not nodes[nid].children:
                err("empty node", i)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            word = text[i:j]
            if not stack:
                err(f"leaf {word!r} outside any node", i)
            if expected_tokens is not None:
                if leaf_count >= len(expected_tokens):
                    err(f"unexpected extra leaf {word!r}", i)
                if expected_tokens[leaf_count] != word:
                    err(f"leaf {word!r} does not match token "
                        f"{expected_tokens[leaf_count]!r}", i)
            lid = len(nodes)
            nodes.append(Node(word, [], (leaf_count, leaf_count + 1)))
            nodes[stack[-1]].children.append(lid)
            leaf_count += 1
            i = j
    if stack:
        err("unbalanced '('", n)
    if root_id is None:
        err("no tree found", 0)
    if expected_tokens is not None and leaf_count != len(expected_tokens):
        err(f"tree has {leaf_count} leaves for {len(expected_tokens)} tokens", n)

    # assign internal spans bottom-up
    def span_of(nid: int) -> tuple[int, int]:
        node = nodes[nid]
        if node.span is None:
            first = span_of(node.children[0])
            last = first
            for c in node.children[1:]:
                last = span_of(c)
            node.span = (first[0], last[1])
        return node.span

    order = [root_id]
    post: list[int] = []
    while order:
        nid = order.pop()
        post.append(nid)
        order.extend(nodes[nid].children)
    for nid in reversed(post):
        node = nodes[nid]
        if node.span is None:
            node.span = (nodes[node.children[0]].span[0],
                         nodes[node.children[-1]].span[1])
    tree = ConstituencyTree(nodes, root_id)
    tree.validate()
    return tree


def load_dataset(path) -> list[tuple[Sentence, ConstituencyTree, DependencyTree]]:
    """Load and validate line-delimited records; errors carry line numbers."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(_parse_record(line))
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
    return out


def _parse_record(line: str) -> tuple[Sentence, ConstituencyTree, DependencyTree]:
    rec = json.loads(line)
    for f in ("id", "tokens", "aspects", "con", "dep_heads"):
        if f not in rec:
            raise ValidationError(f"missing field {f!r}")
    tokens = rec["tokens"]
    if not isinstance(tokens, list) or not tokens or \
            not all(isinstance(t, str) and t for t in tokens):
        raise ValidationError("field 'tokens' must be a non-empty list of words")
    n = len(tokens)
    if not rec["aspects"]:
        raise ValidationError("field 'aspects' must list at least one aspect")
    aspects = []
    for a in rec["aspects"]:
        start, end, pol = a["from"], a["to"], a["polarity"]
        if not (isinstance(start, int) and isinstance(end, int)):
            raise ValidationError("aspect 'from'/'to' must be integers")
        if not 0 <= start < end <= n:
            raise ValidationError(f"aspect span [{start},{end}) outside sentence")
        if pol not in POLARITIES:
            raise ValidationError(f"unknown polarity {pol!r}")
        aspects.append(AspectSpan(start, end, pol))
    aspects.sort(key=lambda a: a.start)
    for prev, nxt in zip(aspects, aspects[1:]):
        if nxt.start < prev.end:
            raise ValidationError(
                f"overlapping aspect spans [{prev.start},{prev.end}) and "
                f"[{nxt.start},{nxt.end})")
    try:
        con = parse_bracketed(rec["con"], expected_tokens=tokens)
    except ValidationError as exc:
        raise ValidationError(f"field 'con': {exc}") from None
    heads = rec["dep_heads"]
    if not isinstance(heads, list) or len(heads) != n or \
            not all(isinstance(h, int) for h in heads):
        raise ValidationError(f"field 'dep_heads' must be {n} integers")
    dep = DependencyTree(list(heads))
    try:
        dep.validate()
    except ValidationError as exc:
        raise ValidationError(f"field 'dep_heads': {exc}") from None
    return Sentence(str(rec["id"]), list(tokens), aspects), con, dep


def record_to_json(sentence: Sentence, con: ConstituencyTree,
                   dep: DependencyTree) -> str:
    return json.dumps({
        "id": sentence.id,
        "tokens": sentence.tokens,
        "aspects": [{"from": a.start, "to": a.end, "polarity": a.polarity}
                    for a in sentence.aspects],
        "con": con.to_bracketed(),
        "dep_heads": dep.heads,
    })


def collapse_aspects(sentence: Sentence, con: ConstituencyTree,
                     dep: DependencyTree,
                     ) -> tuple[Sentence, ConstituencyTree, DependencyTree, list[int]]:
    """Merge each multi-word aspect span into a single token.

    In the constituency tree the span's leaves become one leaf under the
    span's lowest covering node; in the head array the merged token takes
    the head of the span's head word (the token whose head lies outside the
    span; leftmost on ties, with a warning) and external heads pointing into
    the span are redirected to the merged token. Returns the remapped triple
    plus the old->new token index map.
    """
    index_map = list(range(len(sentence.tokens)))
    tokens = list(sentence.tokens)
    spans = [(a.start, a.end) for a in sentence.aspects]
    # right-to-left keeps earlier span coordinates stable
    for start, end in sorted(spans, reverse=True):
        if end - start <= 1:
            continue
        tokens = tokens[:start] + [" ".join(tokens[start:end])] + tokens[end:]
        con = _collapse_tree(con, start, end, tokens[start])
        dep = _collapse_heads(dep, start, end)
        shrink = end - start - 1

        def remap(i, start=start, end=end, shrink=shrink):
            if i < start:
                return i
            if i < end:
                return start
            return i - shrink
        index_map = [remap(i) for i in index_map]

    new_aspects = [AspectSpan(index_map[a.start], index_map[a.start] + 1, a.polarity)
                   for a in sentence.aspects]
    new_sentence = Sentence(sentence.id, tokens, new_aspects)
    con.validate(tokens)
    dep.validate()
    return new_sentence, con, dep, index_map


def _collapse_tree(tree: ConstituencyTree, start: int, end: int,
                   merged_label: str) -> ConstituencyTree:
    shrink = end - start - 1

    def remap(i: int) -> int:
        if i < start:
            return i
        if i < end:
            return start
        return i - shrink

    # lowest node whose span covers the aspect span
    cover = tree.root
    while True:
        nxt = None
        for c in tree.nodes[cover].children:
            cs, ce = tree.nodes[c].span
            if cs <= start and end <= ce:
                nxt = c
                break
        if nxt is None:
            break
        cover = nxt

    new_nodes: list[Node] = []

    def rebuild(nid: int) -> int | None:
        node = tree.nodes[nid]
        s, e = node.span
        covers = s <= start and end <= e
        # nodes inside the span vanish, except the cover chain (span == span)
        if not covers and start <= s and e <= end:
            return None
        if node.is_leaf:
            new_nodes.append(Node(node.label, [], (remap(s), remap(s) + 1)))
            return len(new_nodes) - 1
        kids = [k for k in (rebuild(c) for c in node.children) if k is not None]
        if nid == cover:
            new_nodes.append(Node(merged_label, [], (start, start + 1)))
            merged = len(new_nodes) - 1
            pos = 0
            while pos < len(kids) and new_nodes[kids[pos]].span[0] < start:
                pos += 1
            kids.insert(pos, merged)
        span = (new_nodes[kids[0]].span[0], new_nodes[kids[-1]].span[1])
        new_nodes.append(Node(node.label, kids, span))
        return len(new_nodes) - 1

    new_root = rebuild(tree.root)
    return ConstituencyTree(new_nodes, new_root)


def _collapse_heads(dep: DependencyTree, start: int, end: int) -> DependencyTree:
    shrink = end - start - 1
    heads = dep.heads

    def remap(i: int) -> int:
        if i == -1 or i < start:
            return i
        if i < end:
            return start
        return i - shrink

    head_words = [i for i in range(start, end) if not (start <= heads[i] < end)]
    if len(head_words) > 1:
        warnings.warn(f"aspect span [{start},{end}) has {len(head_words)} head "
                      "words; using the leftmost that keeps a valid tree")
    base = [0] * (len(heads) - shrink)
    for i, h in enumerate(heads):
        if start <= i < end:
            continue
        base[remap(i)] = start if start <= h < end else remap(h)
    # leftmost head word preferred; a pathological choice can route the merged
    # token's head through its own new descendants, so fall forward to the
    # first candidate that still yields a tree (the shallowest always does)
    for hw in head_words:
        out = list(base)
        out[start] = remap(heads[hw])
        try:
            candidate = DependencyTree(out)
            candidate.validate()
            return candidate
        except ValidationError:
            continue
    raise ValidationError(f"cannot collapse aspect span [{start},{end}) "
                          "into a valid dependency tree")
