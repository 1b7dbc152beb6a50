"""Exception hierarchy shared by all udreorder modules."""

from __future__ import annotations


class UDReorderError(Exception):
    """Base class for every error raised by this package."""


class ConlluError(UDReorderError):
    """A CoNLL-U block could not be read. ``line`` is 1-based in the source stream."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRow(ConlluError):
    pass


class NonContiguousIds(ConlluError):
    pass


class HeadOutOfRange(ConlluError):
    pass


class TreeError(UDReorderError):
    pass


class MultipleRoots(TreeError):
    pass


class NoRoot(TreeError):
    pass


class HeadCycle(TreeError):
    pass


class UnknownNode(TreeError):
    pass


class PodError(UDReorderError):
    pass


class GranularityMismatch(PodError):
    pass


class LanguageMismatch(PodError):
    pass


class VersionMismatch(PodError):
    pass


class CorruptTable(PodError):
    pass


class SpanError(UDReorderError):
    pass


class OverlappingSpans(SpanError):
    pass


class SpanOutOfRange(SpanError):
    pass


class DuplicateSentId(UDReorderError):
    pass
