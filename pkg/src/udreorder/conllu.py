"""Reading, writing and tree-building for CoNLL-U treebanks.

Only the columns the reorderer needs (ID, HEAD, DEPREL) are interpreted;
every other field is carried as an opaque string so that a normalized file
survives ``serialize_conllu(parse_conllu(...))`` byte for byte.

Format reference: https://universaldependencies.org/format.html
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, TextIO

from .errors import (
    ConlluError,
    HeadCycle,
    HeadOutOfRange,
    MalformedRow,
    MultipleRoots,
    NoRoot,
    NonContiguousIds,
    UnknownNode,
)

N_COLUMNS = 10
_EMPTY_ID = re.compile(r"^(\d+)\.(\d+)$")
_MWT_ID = re.compile(r"^(\d+)-(\d+)$")


@dataclass(frozen=True, slots=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: str
    head: int
    deprel: str
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"token id must be positive, got {self.id}")
        if self.head < 0:
            raise ValueError(f"token {self.id}: negative head {self.head}")
        if self.head == self.id:
            raise ValueError(f"token {self.id} is its own head")
        if not self.deprel:
            raise ValueError(f"token {self.id}: empty deprel")

    def to_row(self) -> str:
        return "\t".join((
            str(self.id), self.form, self.lemma, self.upos, self.xpos,
            self.feats, str(self.head), self.deprel, self.deps, self.misc,
        ))


@dataclass(frozen=True, slots=True)
class MultiwordToken:
    """A ``start-end`` range line; the middle columns are always ``_`` in normalized files."""

    start: int
    end: int
    form: str
    misc: str = "_"

    def to_row(self) -> str:
        return "\t".join((f"{self.start}-{self.end}", self.form, *("_",) * 7, self.misc))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    mwt_ranges: tuple[MultiwordToken, ...] = ()
    empty_nodes: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.tokens)
        for i, tok in enumerate(self.tokens, 1):
            if tok.id != i:
                raise NonContiguousIds(f"expected token id {i}, found {tok.id}")
            if tok.head > n:
                raise HeadOutOfRange(f"token {i}: head {tok.head} outside 0..{n}")
        prev_end = 0
        for mwt in self.mwt_ranges:
            if not (prev_end < mwt.start < mwt.end <= n):
                raise MalformedRow(f"bad multiword range {mwt.start}-{mwt.end}")
            prev_end = mwt.end

    def __len__(self) -> int:
        return len(self.tokens)

    def metadata(self, key: str) -> str | None:
        prefix = f"# {key} ="
        for line in self.comments:
            if line.startswith(prefix):
                return line[len(prefix):].strip()
        return None

    @property
    def sent_id(self) -> str | None:
        return self.metadata("sent_id")

    def surface_forms(self) -> list[str]:
        """Forms as they appear on the surface: a multiword token replaces its parts."""
        starts = {m.start: m for m in self.mwt_ranges}
        out = []
        i = 1
        n = len(self.tokens)
        while i <= n:
            mwt = starts.get(i)
            if mwt is not None:
                out.append(mwt.form)
                i = mwt.end + 1
            else:
                out.append(self.tokens[i - 1].form)
                i += 1
        return out


def _iter_blocks(stream: Iterable[str]) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if line == "":
            if block:
                yield block
                block = []
        else:
            block.append((lineno, line))
    if block:
        yield block


def _int_field(value: str, name: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedRow(f"non-numeric {name} {value!r}", lineno) from None


def parse_block(lines: list[tuple[int, str]]) -> Sentence:
    """Build one Sentence from ``(line number, text)`` pairs of a single block."""
    comments: list[str] = []
    tokens: list[Token] = []
    mwts: list[MultiwordToken] = []
    empties: list[str] = []
    token_lines: list[int] = []

    for lineno, line in lines:
        if line.startswith("#"):
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise MalformedRow(f"expected {N_COLUMNS} columns, found {len(cols)}", lineno)
        tid = cols[0]
        expected = len(tokens) + 1

        if m := _MWT_ID.match(tid):
            start, end = int(m.group(1)), int(m.group(2))
            if end <= start:
                raise MalformedRow(f"empty multiword range {tid}", lineno)
            if start != expected or (mwts and mwts[-1].end >= start):
                raise NonContiguousIds(f"multiword range {tid} out of place", lineno)
            mwts.append(MultiwordToken(start, end, cols[1], cols[9]))
            continue
        if _EMPTY_ID.match(tid):
            empties.append(line)
            continue

        token_id = _int_field(tid, "id", lineno)
        if token_id != expected:
            raise NonContiguousIds(f"expected token id {expected}, found {token_id}", lineno)
        head = _int_field(cols[6], "head", lineno)
        if head < 0:
            raise HeadOutOfRange(f"negative head {head}", lineno)
        if head == token_id:
            raise MalformedRow(f"token {token_id} is its own head", lineno)
        if not cols[7]:
            raise MalformedRow("empty deprel", lineno)
        tokens.append(Token(token_id, cols[1], cols[2], cols[3], cols[4], cols[5],
                            head, cols[7], cols[8], cols[9]))
        token_lines.append(lineno)

    first_line = lines[0][0]
    if not tokens:
        raise MalformedRow("sentence block has no token rows", first_line)
    n = len(tokens)
    for tok, lineno in zip(tokens, token_lines):
        if tok.head > n:
            raise HeadOutOfRange(f"head {tok.head} outside 0..{n}", lineno)
    if mwts and mwts[-1].end > n:
        raise NonContiguousIds(f"multiword range ends past token {n}", first_line)
    return Sentence(tuple(tokens), tuple(comments), tuple(mwts), tuple(empties))


def parse_conllu(
    stream: Iterable[str],
    *,
    lenient: bool = False,
    on_error: Callable[[ConlluError], None] | None = None,
) -> Iterator[Sentence]:
    """Lazily yield sentences from a CoNLL-U text stream.

    In strict mode the first bad block raises. With ``lenient=True`` bad blocks
    are skipped and each error is handed to ``on_error`` (if given).
    """
    for block in _iter_blocks(stream):
        try:
            yield parse_block(block)
        except ConlluError as exc:
            if not lenient:
                raise
            if on_error is not None:
                on_error(exc)


def parse_string(text: str, **kwargs) -> list[Sentence]:
    return list(parse_conllu(text.splitlines(keepends=True), **kwargs))


def _empty_prefix(line: str) -> int:
    return int(line.split("\t", 1)[0].split(".", 1)[0])


def serialize_conllu(sentence: Sentence) -> str:
    out = list(sentence.comments)
    empties: dict[int, list[str]] = {}
    for line in sentence.empty_nodes:
        empties.setdefault(_empty_prefix(line), []).append(line)
    mwt_at = {m.start: m for m in sentence.mwt_ranges}

    out.extend(empties.get(0, ()))
    for tok in sentence.tokens:
        if tok.id in mwt_at:
            out.append(mwt_at[tok.id].to_row())
        out.append(tok.to_row())
        out.extend(empties.get(tok.id, ()))
    out.append("")
    return "\n".join(out) + "\n"


def write_conllu(sentences: Iterable[Sentence], stream: TextIO) -> int:
    count = 0
    for sentence in sentences:
        stream.write(serialize_conllu(sentence))
        count += 1
    return count


@dataclass(frozen=True)
class DepTree:
    """A sentence together with its child adjacency lists.

    ``children[0]`` lists the virtual root's single child. ``atomic`` marks
    nodes whose whole subtree is emitted in frozen original order; it is only
    ever non-empty on trees returned by :func:`udreorder.reorder.lock_spans`,
    which may also rewire ``children`` away from the token heads.
    """

    sentence: Sentence
    children: Mapping[int, tuple[int, ...]]
    root_id: int
    atomic: frozenset[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.sentence.tokens)

    @cached_property
    def parents(self) -> dict[int, int]:
        return {c: p for p, kids in self.children.items() for c in kids}

    def token(self, node: int) -> Token:
        return self.sentence.tokens[node - 1]

    def kids(self, node: int) -> tuple[int, ...]:
        return self.children.get(node, ())

    def descendants(self, node: int) -> list[int]:
        """The node's closure (itself included), unsorted."""
        if not 1 <= node <= len(self):
            raise UnknownNode(f"node {node} not in tree of {len(self)} tokens")
        out = []
        stack = [node]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(self.children.get(x, ()))
        return out

    def internal_nodes(self) -> list[int]:
        return [x for x, kids in self.children.items() if x != 0 and kids]


def build_tree(sentence: Sentence) -> DepTree:
    tokens = sentence.tokens
    roots = [t.id for t in tokens if t.head == 0]
    if not roots:
        raise NoRoot("no token has head 0")
    if len(roots) > 1:
        raise MultipleRoots(f"tokens {roots} all have head 0")

    heads = [0] + [t.head for t in tokens]
    # 0 = unvisited, 1 = on current path, 2 = known to reach the root
    state = [2] + [0] * len(tokens)
    for start in range(1, len(heads)):
        path = []
        x = start
        while state[x] == 0:
            state[x] = 1
            path.append(x)
            x = heads[x]
        if state[x] == 1:
            raise HeadCycle(f"head cycle through token {x}")
        for y in path:
            state[y] = 2

    children: dict[int, list[int]] = {i: [] for i in range(len(tokens) + 1)}
    for tok in tokens:
        children[tok.head].append(tok.id)
    return DepTree(sentence, {k: tuple(v) for k, v in children.items()}, roots[0])


def subtree_span(tree: DepTree, node: int) -> tuple[int, int, bool]:
    closure = tree.descendants(node)
    lo, hi = min(closure), max(closure)
    return lo, hi, len(closure) == hi - lo + 1


def subtree_spans(tree: DepTree) -> dict[int, tuple[int, int, bool]]:
    """``subtree_span`` for every node at once, in one post-order pass."""
    order = []
    stack = [tree.root_id]
    while stack:
        x = stack.pop()
        order.append(x)
        stack.extend(tree.kids(x))
    lo: dict[int, int] = {}
    hi: dict[int, int] = {}
    size: dict[int, int] = {}
    for x in reversed(order):
        lo[x] = hi[x] = x
        size[x] = 1
        for c in tree.kids(x):
            lo[x] = min(lo[x], lo[c])
            hi[x] = max(hi[x], hi[c])
            size[x] += size[c]
    return {x: (lo[x], hi[x], size[x] == hi[x] - lo[x] + 1) for x in order}


def is_projective(tree: DepTree) -> bool:
    return all(contig for _, _, contig in subtree_spans(tree).values())
