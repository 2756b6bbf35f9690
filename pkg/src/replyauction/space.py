"""Queries and the finite reply universe.

Replies are identified by integer index; the text is carried for display and
gateway calls but never interpreted by the engine.  Spaces are immutable after
construction so every downstream object can cache K-length vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DuplicateIndexError, EmptySpaceError


@dataclass(frozen=True)
class Query:
    id: str
    text: str = ""


@dataclass(frozen=True)
class Reply:
    index: int
    text: str = ""


@dataclass(frozen=True)
class OutcomeSpace:
    """Ordered, gap-free universe of replies indexed 0..K-1."""

    replies: tuple[Reply, ...]

    @property
    def size(self) -> int:
        return len(self.replies)

    @classmethod
    def from_texts(cls, texts: list[str] | tuple[str, ...]) -> "OutcomeSpace":
        space = cls(tuple(Reply(i, t) for i, t in enumerate(texts)))
        validate_space(space)
        return space

    @classmethod
    def of_size(cls, k: int) -> "OutcomeSpace":
        space = cls(tuple(Reply(i) for i in range(k)))
        validate_space(space)
        return space

    def __contains__(self, reply: Reply) -> bool:
        return 0 <= reply.index < self.size


def validate_space(space: OutcomeSpace) -> None:
    """Check that every index 0..K-1 appears exactly once.

    Raises EmptySpaceError or DuplicateIndexError otherwise.
    """
    k = space.size
    if k == 0:
        raise EmptySpaceError("outcome space has no replies")
    seen = set()
    for reply in space.replies:
        if reply.index in seen:
            raise DuplicateIndexError(f"reply index {reply.index} appears more than once")
        seen.add(reply.index)
    if seen != set(range(k)):
        missing = sorted(set(range(k)) - seen)
        raise DuplicateIndexError(
            f"reply indices must cover 0..{k - 1} without gaps; missing {missing}"
        )
