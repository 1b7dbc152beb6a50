"""Hard pairwise precedence constraints and the local ordering solver.

A constraint ``(parent, i, j)`` says: among the children of a node labeled
``parent`` (its head copy included), every ``i`` must come before every
``j``.  Pure pairwise precedence over labels is satisfiable exactly when the
label graph with an edge ``i -> j`` per constraint is acyclic, so the solver
is a topological sort with a stable tie-break instead of a general SMT call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CorruptTable, VersionMismatch
from .pods import FORMAT_VERSION, Granularity, PodTable

Constraint = tuple[str, str, str]


@dataclass(frozen=True)
class ConstraintSet:
    """The true entries of the constraint map; anything absent is false."""

    language: str
    granularity: Granularity = Granularity.UNIVERSAL
    entries: frozenset[Constraint] = frozenset()
    min_count: int = 0
    margin: float = 0.0
    _by_parent: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        entries = frozenset(tuple(e) for e in self.entries)
        for k, i, j in entries:
            if i == j:
                raise ValueError(f"self-constraint {k}:({i}<{j})")
            if (k, j, i) in entries:
                raise ValueError(f"contradictory constraints under {k}: {i}<{j} and {j}<{i}")
        object.__setattr__(self, "entries", entries)
        by_parent: dict[str, set[tuple[str, str]]] = {}
        for k, i, j in entries:
            by_parent.setdefault(k, set()).add((i, j))
        object.__setattr__(self, "_by_parent", by_parent)

    def holds(self, parent: str, i: str, j: str) -> bool:
        return (parent, i, j) in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def derive_constraints(table: PodTable, min_count: int = 0, margin: float = 0.0) -> ConstraintSet:
    """Threshold a POD table: ``i < j`` under ``k`` iff ``p(k, i, j) > 0.5 + margin``.

    Pairs observed fewer than ``min_count`` times in total yield nothing.
    Comparisons use exact rationals so that ``margin=0`` is a strict ``> 1/2``.
    """
    if not 0 <= margin < 0.5:
        raise ValueError(f"margin must lie in [0, 0.5), got {margin}")
    if min_count < 0:
        raise ValueError(f"min_count must be non-negative, got {min_count}")
    threshold = Fraction(1, 2) + Fraction(str(float(margin)))
    entries = set()
    for (k, i, j), before in table.counts.items():
        if i == j:
            continue
        total = before + table.count(k, j, i)
        if total < min_count:
            continue
        if Fraction(before, total) > threshold:
            entries.add((k, i, j))
    return ConstraintSet(table.language, table.granularity, frozenset(entries), min_count, margin)


def relevant_constraints(cs: ConstraintSet, parent_label: str, labels: Iterable[str]) -> list[tuple[str, str]]:
    """Constraints under ``parent_label`` whose two labels both occur in ``labels``."""
    pairs = cs._by_parent.get(parent_label)
    if not pairs:
        return []
    present = set(labels)
    if len(present) * (len(present) - 1) < len(pairs):
        found = [(i, j) for i in present for j in present if (i, j) in pairs]
    else:
        found = [(i, j) for i, j in pairs if i in present and j in present]
    return sorted(found)


@dataclass(frozen=True)
class LocalOrderProblem:
    """Children of one node plus its head copy, each as ``(position rank, label)``."""

    parent_label: str
    items: tuple[tuple[int, str], ...]
    active_constraints: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        present = {label for _, label in self.items}
        for i, j in self.active_constraints:
            if i not in present or j not in present:
                raise ValueError(f"constraint {i}<{j} mentions a label with no item")


def solve_order(problem: LocalOrderProblem) -> tuple[int, ...] | None:
    """Return item indices in a constraint-satisfying order, or None if none exists.

    The order is canonical: at each step, among the items whose label has no
    pending predecessor label, the one with the smallest rank is emitted.
    Equal labels therefore keep their relative order, and with no constraints
    the result is the rank order.
    """
    items = problem.items
    by_rank = sorted(range(len(items)), key=lambda x: items[x][0])
    if not problem.active_constraints:
        return tuple(by_rank)

    preds: dict[str, set[str]] = {}
    for i, j in problem.active_constraints:
        preds.setdefault(j, set()).add(i)
    pending: dict[str, int] = {}
    for _, label in items:
        pending[label] = pending.get(label, 0) + 1

    remaining = by_rank
    out: list[int] = []
    while remaining:
        for pos, idx in enumerate(remaining):
            label = items[idx][1]
            if not any(pending[p] for p in preds.get(label, ())):
                break
        else:
            return None
        out.append(idx)
        pending[label] -= 1
        del remaining[pos]
    return tuple(out)


def satisfies(order: Sequence[str], constraints: Iterable[tuple[str, str]]) -> bool:
    """True if every ``i`` in ``order`` precedes every ``j``, for each ``(i, j)``."""
    last: dict[str, int] = {}
    first: dict[str, int] = {}
    for pos, label in enumerate(order):
        first.setdefault(label, pos)
        last[label] = pos
    return all(
        i not in last or j not in first or last[i] < first[j]
        for i, j in constraints
    )


def constraints_to_dict(cs: ConstraintSet) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "language": cs.language,
        "granularity": cs.granularity.value,
        "min_count": cs.min_count,
        "margin": cs.margin,
        "entries": [
            {"parent": k, "before": i, "after": j} for k, i, j in sorted(cs.entries)
        ],
    }


def constraints_from_dict(doc: Mapping) -> ConstraintSet:
    if not isinstance(doc, Mapping):
        raise CorruptTable("constraint document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported constraint format_version {version!r}")
    try:
        entries = frozenset(
            (str(e["parent"]), str(e["before"]), str(e["after"])) for e in doc["entries"]
        )
        return ConstraintSet(
            str(doc["language"]),
            Granularity(doc["granularity"]),
            entries,
            int(doc.get("min_count", 0)),
            float(doc.get("margin", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptTable(f"malformed constraint document: {exc}") from None


def save_constraints(cs: ConstraintSet, destination: str | Path) -> None:
    text = json.dumps(constraints_to_dict(cs), indent=1, ensure_ascii=False)
    Path(destination).write_text(text + "\n", encoding="utf-8")


def load_constraints(source: str | Path) -> ConstraintSet:
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptTable(f"{source}: not valid JSON ({exc})") from None
    return constraints_from_dict(doc)
