"""Pairwise ordering statistics learned from dependency trees.

A :class:`PodTable` stores, for every parent label, how often a child with
label ``first`` was seen linearly before a child with label ``second``.  The
parent itself takes part as one of its own children (the "head copy"),
sitting at its own surface position and carrying the parent's label, so the
table also records where heads go relative to their dependents.

Only counts are stored; probabilities are derived on demand, which keeps
tables mergeable and makes ``p(i, j) + p(j, i) == 1`` exact.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .conllu import DepTree
from .errors import CorruptTable, GranularityMismatch, LanguageMismatch, VersionMismatch

FORMAT_VERSION = 1

Triple = tuple[str, str, str]


class Granularity(str, Enum):
    UNIVERSAL = "universal"
    SUBTYPED = "subtyped"


def normalize_label(deprel: str, granularity: Granularity | str) -> str:
    """``nmod:poss`` -> ``nmod`` under universal granularity, unchanged otherwise."""
    if Granularity(granularity) is Granularity.UNIVERSAL:
        return deprel.split(":", 1)[0]
    return deprel


@dataclass(frozen=True)
class Provenance:
    treebanks: tuple[str, ...] = ()
    sentences: int = 0

    def combine(self, other: Provenance) -> Provenance:
        names = tuple(sorted(set(self.treebanks) | set(other.treebanks)))
        return Provenance(names, self.sentences + other.sentences)


@dataclass(frozen=True)
class PodTable:
    language: str
    granularity: Granularity = Granularity.UNIVERSAL
    counts: Mapping[Triple, int] = field(default_factory=dict)
    provenance: Provenance = Provenance()

    def __post_init__(self):
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        clean = {}
        for key, value in self.counts.items():
            if value < 0:
                raise CorruptTable(f"negative count for {key}: {value}")
            if value:
                clean[tuple(key)] = int(value)
        object.__setattr__(self, "counts", clean)

    def count(self, parent: str, first: str, second: str) -> int:
        return self.counts.get((parent, first, second), 0)

    def fraction(self, parent: str, i: str, j: str) -> Fraction | None:
        """Exact probability that ``i`` precedes ``j`` under ``parent``; None if never observed."""
        if i == j:
            return Fraction(1, 2)
        before = self.count(parent, i, j)
        total = before + self.count(parent, j, i)
        if total == 0:
            return None
        return Fraction(before, total)

    def parents(self) -> list[str]:
        return sorted({k for k, _, _ in self.counts})

    def total(self) -> int:
        return sum(self.counts.values())


def probability(table: PodTable, parent: str, i: str, j: str) -> float | None:
    p = table.fraction(parent, i, j)
    return None if p is None else float(p)


def count_pairs(tree: DepTree, granularity: Granularity | str, counter: Counter) -> None:
    """Add one tree's ordered label pairs to ``counter``."""
    labels = [""] + [normalize_label(t.deprel, granularity) for t in tree.sentence.tokens]
    for parent, kids in tree.children.items():
        if parent == 0 or not kids:
            continue
        plabel = labels[parent]
        # children are already sorted by position; splice the head copy in
        members = [labels[c] for c in kids if c < parent]
        members.append(plabel)
        members.extend(labels[c] for c in kids if c > parent)
        for a in range(len(members) - 1):
            first = members[a]
            for b in range(a + 1, len(members)):
                counter[(plabel, first, members[b])] += 1


def estimate_pods(
    trees: Iterable[DepTree],
    granularity: Granularity | str = Granularity.UNIVERSAL,
    *,
    language: str = "und",
    treebank: str | None = None,
) -> PodTable:
    counter: Counter = Counter()
    n = 0
    for tree in trees:
        count_pairs(tree, granularity, counter)
        n += 1
    prov = Provenance((treebank,) if treebank else (), n)
    return PodTable(language, Granularity(granularity), dict(counter), prov)


def merge(a: PodTable, b: PodTable) -> PodTable:
    if a.granularity is not b.granularity:
        raise GranularityMismatch(f"{a.granularity.value} vs {b.granularity.value}")
    if a.language != b.language:
        raise LanguageMismatch(f"{a.language} vs {b.language}")
    counts = Counter(a.counts)
    counts.update(b.counts)
    return PodTable(a.language, a.granularity, dict(counts), a.provenance.combine(b.provenance))


def empty_table(language: str, granularity: Granularity | str = Granularity.UNIVERSAL) -> PodTable:
    return PodTable(language, Granularity(granularity))


def _pair_distance(a: PodTable, b: PodTable, parents: Iterable[str] | None = None):
    """Yield ``(parent, weight, |p_a - p_b|)`` for every unordered pair seen in both tables."""
    seen = set()
    for k, i, j in a.counts:
        if i == j or (parents is not None and k not in parents):
            continue
        key = (k, min(i, j), max(i, j))
        if key in seen:
            continue
        seen.add(key)
        pa = a.fraction(k, i, j)
        pb = b.fraction(k, i, j)
        if pa is None or pb is None:
            continue
        weight = a.count(k, i, j) + a.count(k, j, i) + b.count(k, i, j) + b.count(k, j, i)
        yield k, weight, abs(pa - pb)


def pod_distance(a: PodTable, b: PodTable) -> float | None:
    """Count-weighted mean of ``|p_a - p_b|`` over label pairs observed in both tables.

    Each unordered pair is weighted by its total observations in both tables;
    same-label pairs are excluded.  Returns None when the tables share no pair.
    """
    if a.granularity is not b.granularity:
        raise GranularityMismatch(f"{a.granularity.value} vs {b.granularity.value}")
    num = Fraction(0)
    den = 0
    for _, weight, diff in _pair_distance(a, b):
        num += weight * diff
        den += weight
    return None if den == 0 else float(num / den)


def pod_distance_by_parent(a: PodTable, b: PodTable) -> dict[str, float]:
    if a.granularity is not b.granularity:
        raise GranularityMismatch(f"{a.granularity.value} vs {b.granularity.value}")
    num: dict[str, Fraction] = {}
    den: dict[str, int] = {}
    for k, weight, diff in _pair_distance(a, b):
        num[k] = num.get(k, Fraction(0)) + weight * diff
        den[k] = den.get(k, 0) + weight
    return {k: float(num[k] / den[k]) for k in sorted(num)}


def table_to_dict(table: PodTable) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "language": table.language,
        "granularity": table.granularity.value,
        "provenance": {
            "treebank": "+".join(table.provenance.treebanks),
            "sentences": table.provenance.sentences,
        },
        "triples": [
            {"parent": k, "first": i, "second": j, "count": c}
            for (k, i, j), c in sorted(table.counts.items())
        ],
    }


def table_from_dict(doc: Mapping) -> PodTable:
    if not isinstance(doc, Mapping):
        raise CorruptTable("POD document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported POD format_version {version!r}")
    try:
        prov = doc.get("provenance") or {}
        names = tuple(n for n in str(prov.get("treebank", "")).split("+") if n)
        counts: dict[Triple, int] = {}
        for rec in doc["triples"]:
            key = (str(rec["parent"]), str(rec["first"]), str(rec["second"]))
            value = rec["count"]
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise CorruptTable(f"bad count {value!r} for {key}")
            if key in counts:
                raise CorruptTable(f"duplicate triple {key}")
            counts[key] = value
        return PodTable(
            str(doc["language"]),
            Granularity(doc["granularity"]),
            counts,
            Provenance(names, int(prov.get("sentences", 0))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptTable(f"malformed POD document: {exc}") from None


def save_pods(table: PodTable, destination: str | Path) -> None:
    text = json.dumps(table_to_dict(table), indent=1, ensure_ascii=False)
    Path(destination).write_text(text + "\n", encoding="utf-8")


def load_pods(source: str | Path) -> PodTable:
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptTable(f"{source}: not valid JSON ({exc})") from None
    return table_from_dict(doc)
