"""Top-down subtree reordering under pairwise precedence constraints.

Each node and its direct children form one local problem: the children's
subtrees are blocks, and the node itself is a width-1 block carrying its own
label.  Blocks are permuted with :func:`solve_order`; if the relevant
constraints conflict, the node keeps its original block order.  Because
every subtree is emitted as one contiguous block, the output is projective.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

from .conllu import DepTree, MultiwordToken, Sentence, Token, build_tree, is_projective
from .constraints import ConstraintSet, LocalOrderProblem, relevant_constraints, solve_order
from .errors import OverlappingSpans, SpanOutOfRange, UDReorderError
from .pods import normalize_label
from .report import ReorderStats, RunReport

log = logging.getLogger(__name__)

SPAN_REASONS = ("user", "mwt", "entity")


@dataclass(frozen=True)
class LockedSpan:
    """Inclusive token range, in original ids, that must stay contiguous and in order."""

    start: int
    end: int
    reason: str = "user"

    def __post_init__(self):
        if self.reason not in SPAN_REASONS:
            raise ValueError(f"unknown span reason {self.reason!r}")
        if self.start > self.end:
            raise SpanOutOfRange(f"span start {self.start} after end {self.end}")


@dataclass(frozen=True)
class NonContiguousImage:
    """Returned by :func:`apply_alignment` for a span that scatters under the permutation."""

    span: tuple[int, int]
    image: tuple[int, ...]


@dataclass(frozen=True)
class ReorderResult:
    sentence: Sentence
    alignment: tuple[int, ...]  # alignment[o - 1] is the new id of original token o
    stats: ReorderStats
    outcomes: Mapping[int, str] = field(default_factory=dict, compare=False)

    @property
    def order(self) -> list[int]:
        """Original ids in their new linear order."""
        out = [0] * len(self.alignment)
        for orig, new in enumerate(self.alignment, 1):
            out[new - 1] = orig
        return out


def _check_spans(spans: Sequence[LockedSpan], n: int) -> list[LockedSpan]:
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for s in ordered:
        if s.start < 1 or s.end > n:
            raise SpanOutOfRange(f"span {s.start}-{s.end} outside 1..{n}")
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise OverlappingSpans(f"spans {a.start}-{a.end} and {b.start}-{b.end} overlap")
    return ordered


def lock_spans(tree: DepTree, spans: Sequence[LockedSpan]) -> DepTree:
    """Make every span the frozen core of a single subtree.

    Inside each span, the nodes headed from outside it are found; the one
    dominating the most span tokens (leftmost on ties) becomes the span head
    and the others are re-attached beneath it.  The span head is then marked
    atomic.  Token heads in ``tree.sentence`` are left untouched; only the
    adjacency used for linearization changes.
    """
    spans = _check_spans(spans, len(tree))
    if not spans:
        return tree
    children = {k: list(v) for k, v in tree.children.items()}
    parent = dict(tree.parents)
    atomic = set(tree.atomic)

    def closure(x: int) -> list[int]:
        out, stack = [], [x]
        while stack:
            y = stack.pop()
            out.append(y)
            stack.extend(children[y])
        return out

    for span in spans:
        inside = range(span.start, span.end + 1)
        entry = [x for x in inside if not span.start <= parent[x] <= span.end]
        if len(entry) == 1:
            atomic.add(entry[0])
            continue
        dominated = {x: sum(1 for y in closure(x) if span.start <= y <= span.end) for x in entry}
        head = min(entry, key=lambda x: (-dominated[x], x))
        for x in entry:
            if x == head:
                continue
            children[parent[x]].remove(x)
            children[head].append(x)
            children[head].sort()
            parent[x] = head
        atomic.add(head)

    return DepTree(
        tree.sentence,
        {k: tuple(v) for k, v in children.items()},
        tree.root_id,
        frozenset(atomic),
    )


def _mwt_spans(sentence: Sentence, user: Sequence[LockedSpan]) -> list[LockedSpan]:
    out = []
    for m in sentence.mwt_ranges:
        if any(u.start <= m.start and m.end <= u.end for u in user):
            continue
        out.append(LockedSpan(m.start, m.end, "mwt"))
    return out


def _regenerate_text(comments: Sequence[str], sentence: Sentence) -> tuple[str, ...]:
    text = " ".join(sentence.surface_forms())
    return tuple(f"# text = {text}" if c.startswith("# text =") else c for c in comments)


def reorder_tree(
    tree: DepTree,
    constraints: ConstraintSet,
    spans: Sequence[LockedSpan] = (),
) -> ReorderResult:
    sentence = tree.sentence
    if sentence.empty_nodes:
        log.warning("dropping %d empty node(s) from sentence %s",
                    len(sentence.empty_nodes), sentence.sent_id or "<no sent_id>")
    all_spans = list(spans) + _mwt_spans(sentence, spans)
    locked = lock_spans(tree, all_spans)

    granularity = constraints.granularity
    labels = [""] + [normalize_label(t.deprel, granularity) for t in sentence.tokens]
    stats = ReorderStats(spans_locked=len(all_spans), nonprojective_input=int(not is_projective(tree)))
    stats.subtrees_total = len(locked.internal_nodes())
    outcomes: dict[int, str] = {}

    def emit(node: int, out: list[int]) -> None:
        if node in locked.atomic:
            out.extend(sorted(locked_closure(node)))
            return
        kids = locked.kids(node)
        if not kids:
            out.append(node)
            return
        plabel = labels[node]
        blocks = sorted((*kids, node))
        items = tuple((b, plabel if b == node else labels[b]) for b in blocks)
        active = relevant_constraints(constraints, plabel, (label for _, label in items))
        perm = solve_order(LocalOrderProblem(plabel, items, tuple(active)))
        identity = tuple(range(len(items)))
        if not active:
            outcome = "unconstrained"
        elif perm is None:
            outcome = "infeasible"
            perm = identity
        else:
            outcome = "reordered" if perm != identity else "unchanged"
        outcomes[node] = outcome
        for idx in perm:
            b = blocks[idx]
            if b == node:
                out.append(node)
            else:
                emit(b, out)

    def locked_closure(x: int) -> list[int]:
        res, stack = [], [x]
        while stack:
            y = stack.pop()
            res.append(y)
            stack.extend(locked.kids(y))
        return res

    order: list[int] = []
    emit(locked.root_id, order)

    for outcome in outcomes.values():
        if outcome == "infeasible":
            stats.subtrees_infeasible_reverted += 1
        else:
            setattr(stats, f"subtrees_{outcome}", getattr(stats, f"subtrees_{outcome}") + 1)
    stats.subtrees_frozen = stats.subtrees_total - len(outcomes)

    alignment = [0] * len(order)
    for new, orig in enumerate(order, 1):
        alignment[orig - 1] = new
    tokens = []
    for orig in order:
        tok: Token = sentence.tokens[orig - 1]
        tokens.append(replace(tok, id=alignment[orig - 1], head=alignment[tok.head - 1] if tok.head else 0))
    mwts = sorted(
        (MultiwordToken(alignment[m.start - 1], alignment[m.end - 1], m.form, m.misc) for m in sentence.mwt_ranges),
        key=lambda m: m.start,
    )
    new_sentence = Sentence(tuple(tokens), sentence.comments, tuple(mwts))
    new_sentence = replace(new_sentence, comments=_regenerate_text(sentence.comments, new_sentence))
    return ReorderResult(new_sentence, tuple(alignment), stats, outcomes)


def apply_alignment(
    spans: Iterable[tuple[int, int]],
    alignment: Sequence[int],
) -> list[tuple[int, int] | NonContiguousImage]:
    n = len(alignment)
    out: list[tuple[int, int] | NonContiguousImage] = []
    for start, end in spans:
        if not 1 <= start <= end <= n:
            raise SpanOutOfRange(f"span {start}-{end} outside 1..{n}")
        image = tuple(alignment[o - 1] for o in range(start, end + 1))
        lo, hi = min(image), max(image)
        if hi - lo + 1 == len(image):
            out.append((lo, hi))
        else:
            out.append(NonContiguousImage((start, end), image))
    return out


def sentence_key(sentence: Sentence, index: int) -> str:
    """The sidecar key of a sentence: its sent_id, else its 1-based position."""
    return sentence.sent_id or str(index)


def iter_reorder(
    sentences: Iterable[Sentence],
    constraints: ConstraintSet,
    report: RunReport,
    spans: Mapping[str, Sequence[LockedSpan]] | None = None,
    *,
    lenient: bool = False,
    skip_empty_nodes: bool = False,
) -> Iterator[tuple[str, ReorderResult]]:
    """Reorder sentences one at a time, yielding ``(key, result)`` in input order.

    Per-sentence failures raise under the strict policy; with ``lenient`` they
    are recorded in ``report`` and the sentence is dropped.
    """
    spans = spans or {}
    for index, sentence in enumerate(sentences, 1):
        key = sentence_key(sentence, index)
        if sentence.empty_nodes and skip_empty_nodes:
            report.warnings += 1
            log.info("skipping sentence %s with empty nodes", key)
            continue
        try:
            result = reorder_tree(build_tree(sentence), constraints, spans.get(key, ()))
        except UDReorderError as exc:
            if not lenient:
                raise
            report.add_error(f"sentence {key}: {type(exc).__name__}: {exc}")
            continue
        if sentence.empty_nodes:
            report.warnings += 1
        report.sentences += 1
        report.totals = report.totals + result.stats
        yield key, result


def reorder_treebank(
    sentences: Iterable[Sentence],
    constraints: ConstraintSet,
    spans: Mapping[str, Sequence[LockedSpan]] | None = None,
    *,
    lenient: bool = False,
    skip_empty_nodes: bool = False,
) -> tuple[list[ReorderResult], RunReport]:
    report = RunReport("reorder_treebank", parameters={"lenient": lenient, "skip_empty_nodes": skip_empty_nodes})
    started = time.perf_counter()
    results = [r for _, r in iter_reorder(sentences, constraints, report, spans,
                                          lenient=lenient, skip_empty_nodes=skip_empty_nodes)]
    report.duration = time.perf_counter() - started
    return results, report
