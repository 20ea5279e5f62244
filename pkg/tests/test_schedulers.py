"""Scheduler predicate tests, anchored on an independent brute-force oracle."""
from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robosync.schedulers import (
    EMPTY_SET,
    FULL_SET_AFTER_PREFIX,
    OVERLAP_CONSECUTIVE,
    Lasso,
    RsynchTracker,
    is_fair_lasso,
    ssynch_choices,
    validate_rsynch,
)


def oracle_valid_finite(seq, n):
    """Literal restricted-repetition check for an observed finite prefix.

    Tries every split point p: an all-full prefix, then sets that are nonempty,
    not full, and pairwise disjoint with their successors.  No automaton, no
    sharing with the implementation under test.
    """
    full = frozenset(range(n))
    entries = [frozenset(e) for e in seq]
    length = len(entries)
    if all(e == full for e in entries):
        return True
    for p in range(0, length + 1):
        if any(entries[i] != full for i in range(p)):
            continue
        tail_ok = all(entries[i] and entries[i] != full for i in range(p, length))
        disjoint_ok = all(
            not (entries[i] & entries[i + 1]) for i in range(p, length - 1)
        )
        if tail_ok and disjoint_ok:
            return True
    return False


def all_subset_sequences(n, length):
    subsets = [frozenset(c) for mask in range(1 << n)
               for c in [[i for i in range(n) if mask >> i & 1]]]
    return product(subsets, repeat=length)


def test_agrees_with_oracle_exhaustively_small():
    for n in (2, 3):
        for length in range(1, 5):
            for seq in all_subset_sequences(n, length):
                assert validate_rsynch(list(seq), n).valid == oracle_valid_finite(seq, n), (
                    n, seq)


def test_spec_examples():
    assert validate_rsynch(Lasso((), ({0, 1},)), 2).valid
    assert validate_rsynch(Lasso(({0, 1},), ({0}, {1})), 2).valid

    verdict = validate_rsynch([{0}, {0}], 2)
    assert not verdict.valid
    assert verdict.violation.index == 1
    assert verdict.violation.reason == OVERLAP_CONSECUTIVE

    verdict = validate_rsynch([{0, 1}, {1, 2}], 3)
    assert not verdict.valid
    assert verdict.violation.reason == OVERLAP_CONSECUTIVE
    assert not oracle_valid_finite([{0, 1}, {1, 2}], 3)

    verdict = validate_rsynch([{0}, {0, 1}], 2)
    assert not verdict.valid
    assert verdict.violation.reason == FULL_SET_AFTER_PREFIX


def test_empty_set_rejected():
    verdict = validate_rsynch([{0}, set()], 2)
    assert not verdict.valid
    assert verdict.violation == verdict.violation.__class__(1, EMPTY_SET)


def test_out_of_range_ids_raise():
    with pytest.raises(ValueError):
        validate_rsynch([{0, 5}], 2)


def test_all_full_lasso_valid_for_every_n():
    for n in range(2, 9):
        full = frozenset(range(n))
        assert validate_rsynch(Lasso((), (full,)), n).valid


def test_lasso_wraparound_pair_checked():
    # Cycle ({0}, {1}, {0, 1} is fine; ({0}, {1}, {1}) overlaps inside;
    # ({0}, {1}, {0}) overlaps only across the wrap-around.
    assert validate_rsynch(Lasso((), ({0}, {1})), 3).valid
    assert not validate_rsynch(Lasso((), ({0}, {1}, {1})), 3).valid
    bad_wrap = validate_rsynch(Lasso((), ({0}, {1}, {0})), 3)
    assert not bad_wrap.valid
    assert bad_wrap.violation.reason == OVERLAP_CONSECUTIVE


def test_prefix_cycle_junction_checked():
    assert not validate_rsynch(Lasso(({0},), ({0}, {1})), 3).valid
    assert validate_rsynch(Lasso(({0},), ({1}, {0})), 3).valid


@st.composite
def subset_sequences(draw):
    n = draw(st.integers(min_value=2, max_value=4))
    length = draw(st.integers(min_value=1, max_value=8))
    seq = [
        frozenset(draw(st.sets(st.integers(min_value=0, max_value=n - 1), max_size=n)))
        for _ in range(length)
    ]
    return n, seq


@settings(max_examples=300)
@given(subset_sequences())
def test_matches_oracle_randomly(case):
    n, seq = case
    assert validate_rsynch(seq, n).valid == oracle_valid_finite(seq, n)


@settings(max_examples=150)
@given(subset_sequences(), st.sets(st.integers(min_value=0, max_value=3), min_size=1))
def test_invalid_prefix_stays_invalid(case, extra):
    n, seq = case
    if validate_rsynch(seq, n).valid:
        return
    extension = seq + [frozenset(i for i in extra if i < n) or frozenset({0})]
    assert not validate_rsynch(extension, n).valid


def test_tracker_matches_validator_on_short_runs():
    for n in (2, 3):
        for length in range(1, 4):
            for seq in all_subset_sequences(n, length):
                if any(not e for e in seq):
                    continue
                tracker = RsynchTracker(n)
                reasons = [tracker.feed(e) for e in seq]
                first = next((r for r in reasons if r), None)
                verdict = validate_rsynch(list(seq), n)
                assert (first is None) == verdict.valid


def test_is_fair_lasso():
    assert is_fair_lasso((), [{0}, {1}], 2)
    assert not is_fair_lasso((), [{0}], 2)
    assert is_fair_lasso((), [{0, 1}, {2}], 3)
    with pytest.raises(ValueError):
        is_fair_lasso((), [], 2)


def test_ssynch_choices():
    assert ssynch_choices(1) == [frozenset({0})]
    assert ssynch_choices(2) == [frozenset({0}), frozenset({1}), frozenset({0, 1})]
    assert len(ssynch_choices(3)) == 7
