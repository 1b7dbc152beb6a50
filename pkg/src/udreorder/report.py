"""Run statistics and the JSON run report every command writes."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

MAX_ERROR_MESSAGES = 20


@dataclass
class ReorderStats:
    """Per-subtree outcome counters.

    Every internal node lands in exactly one bucket, so the five outcome
    fields always sum to ``subtrees_total``.
    """

    subtrees_total: int = 0
    subtrees_reordered: int = 0
    subtrees_unchanged: int = 0
    subtrees_unconstrained: int = 0
    subtrees_infeasible_reverted: int = 0
    subtrees_frozen: int = 0
    spans_locked: int = 0
    nonprojective_input: int = 0

    def __add__(self, other: ReorderStats) -> ReorderStats:
        return ReorderStats(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunReport:
    command: str
    parameters: dict = field(default_factory=dict)
    inputs: list[dict] = field(default_factory=list)
    outputs: list[dict] = field(default_factory=list)
    sentences: int = 0
    totals: ReorderStats = field(default_factory=ReorderStats)
    errors: int = 0
    error_messages: list[str] = field(default_factory=list)
    warnings: int = 0
    duration: float = 0.0
    result: dict | None = None

    def add_error(self, message: str) -> None:
        self.errors += 1
        if len(self.error_messages) < MAX_ERROR_MESSAGES:
            self.error_messages.append(message)

    def add_input(self, path: str | Path) -> None:
        self.inputs.append({"path": str(path), "sha256": file_digest(path)})

    def add_output(self, path: str | Path) -> None:
        self.outputs.append({"path": str(path), "sha256": file_digest(path)})

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["totals"] = self.totals.as_dict()
        doc["duration"] = round(self.duration, 6)
        if doc["result"] is None:
            del doc["result"]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> RunReport:
        doc = dict(doc)
        doc["totals"] = ReorderStats(**doc.get("totals", {}))
        return cls(**doc)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
