"""Scheduler semantics: the restricted-repetition validity predicate and fairness."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

EMPTY_SET = "EmptySet"
FULL_SET_AFTER_PREFIX = "FullSetAfterPrefix"
OVERLAP_CONSECUTIVE = "OverlapConsecutive"


@dataclass(frozen=True)
class Violation:
    index: int
    reason: str


@dataclass(frozen=True)
class RsynchVerdict:
    valid: bool
    violation: Violation | None = None


@dataclass(frozen=True)
class Lasso:
    """A finite certificate for an infinite activation sequence: prefix + cycle."""

    prefix: tuple[frozenset, ...]
    cycle: tuple[frozenset, ...]


class RsynchTracker:
    """Online check of the restricted-repetition condition.

    The whole summary is (seen a non-full set yet?, last non-full set); feeding
    activation sets one by one decides the predicate incrementally.  Violations
    are monotone: once one occurred, every extension stays invalid.
    """

    __slots__ = ("n", "full", "after_prefix", "last")

    def __init__(self, n: int):
        self.n = n
        self.full = frozenset(range(n))
        self.after_prefix = False
        self.last: frozenset | None = None

    def feed(self, activated: frozenset) -> str | None:
        """Consume one activation set; return a violation reason or None."""
        if not activated:
            return EMPTY_SET
        if not activated <= self.full:
            raise ValueError(f"robot ids out of range: {sorted(activated)}")
        if activated == self.full:
            if self.after_prefix:
                return FULL_SET_AFTER_PREFIX
            return None
        if self.after_prefix and self.last & activated:
            return OVERLAP_CONSECUTIVE
        self.after_prefix = True
        self.last = activated
        return None

    def summary(self) -> tuple:
        return (self.after_prefix, self.last)


def validate_rsynch(seq: Sequence[Iterable] | Lasso, n: int) -> RsynchVerdict:
    """Check an activation sequence against the restricted-repetition condition.

    A finite sequence is valid when it has no violation yet (it is extendable);
    a lasso is checked on its unrolling, including the cycle wrap-around pair.
    Violation indices refer to the scanned (unrolled) sequence, 0-based.
    """
    if isinstance(seq, Lasso):
        if not seq.cycle:
            raise ValueError("lasso cycle must be nonempty")
        # Two cycle passes reach the tracker's fixpoint: the prefix flag is
        # monotone and the last non-full set repeats from the second pass on.
        unrolled = list(seq.prefix) + list(seq.cycle) * 2
    else:
        unrolled = list(seq)
    tracker = RsynchTracker(n)
    for i, raw in enumerate(unrolled):
        reason = tracker.feed(frozenset(raw))
        if reason is not None:
            return RsynchVerdict(False, Violation(i, reason))
    return RsynchVerdict(True, None)


def is_fair_lasso(prefix: Sequence[Iterable], cycle: Sequence[Iterable], n: int) -> bool:
    """True iff every robot appears in at least one activation set of the cycle."""
    if not cycle:
        raise ValueError("cycle must be nonempty")
    seen: set[int] = set()
    for group in cycle:
        seen.update(group)
    return seen >= set(range(n))


def ssynch_choices(n: int) -> list[frozenset]:
    """All nonempty activation subsets of [0, n), in mask order."""
    if n < 1:
        raise ValueError("n must be positive")
    return [
        frozenset(i for i in range(n) if mask >> i & 1)
        for mask in range(1, 1 << n)
    ]
