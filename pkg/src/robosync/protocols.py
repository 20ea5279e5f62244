"""The five control protocols as pure, table-driven transition functions.

Each protocol is an ordered rule list. Within one own-color branch the rules
are evaluated in listed order and a later matching assignment overwrites an
earlier one (the 4-color self-stabilizing variant relies on this); whether the
simulated protocol runs is the OR over matching rules' execute flags.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable

from .model import M, S, SP, T, W

VIEW_PROTOCOL_EXEC_RULE = "T->M"


class ProtocolKind(enum.Enum):
    SIM_RS_S = "sim-rs-s"
    SS_SIM_RS_S = "ss-sim-rs-s"
    SIM_RS_A = "sim-rs-a"
    SS_SIM_RS_A = "ss-sim-rs-a"
    SIM2_RS_A = "sim2-rs-a"

    @property
    def colors(self) -> tuple[str, ...]:
        return _KIND_COLORS[self]

    @property
    def asynch_native(self) -> bool:
        return self in (ProtocolKind.SIM_RS_A, ProtocolKind.SS_SIM_RS_A, ProtocolKind.SIM2_RS_A)

    @property
    def pair_based(self) -> bool:
        return self is ProtocolKind.SIM2_RS_A


_KIND_COLORS = {
    ProtocolKind.SIM_RS_S: (T, M, S, SP),
    ProtocolKind.SS_SIM_RS_S: (T, M, S, SP),
    ProtocolKind.SIM_RS_A: (T, M, S, SP, W),
    ProtocolKind.SS_SIM_RS_A: (T, M, S, SP, W),
    ProtocolKind.SIM2_RS_A: (T, M, S),
}


@dataclass(frozen=True)
class Rule:
    name: str
    my: str
    guard: Callable[[frozenset], bool]
    next: str
    execute: bool = False


@dataclass(frozen=True)
class StepOutcome:
    """Control-level result of one Compute: run P or not, and the next color."""

    execute_p: bool
    next_control: str


def _views(colors: tuple[str, ...]):
    pool = list(colors)
    for r in range(1, len(pool) + 1):
        for combo in combinations(pool, r):
            yield frozenset(combo)


class ViewProtocolTable:
    """A control protocol whose guards read the set of visible colors."""

    def __init__(self, kind: ProtocolKind, rules: tuple[Rule, ...]):
        self.kind = kind
        self.colors = kind.colors
        self.rules = rules
        self._table: dict[tuple[str, frozenset], StepOutcome] = {}
        for view in _views(self.colors):
            for my in view:
                execute = False
                nxt = my
                for rule in rules:
                    if rule.my == my and rule.guard(view):
                        execute = execute or rule.execute
                        nxt = rule.next
                self._table[(my, view)] = StepOutcome(execute, nxt)

    def step(self, my: str, view: frozenset) -> StepOutcome:
        try:
            return self._table[(my, frozenset(view))]
        except KeyError:
            raise ValueError(
                f"{self.kind.value}: no entry for color {my!r} with view {sorted(view)}"
            ) from None

    def fires_exec(self, my: str, view) -> bool:
        out = self._table.get((my, frozenset(view)))
        return out is not None and out.execute_p

    def matching_rules(self, my: str, view: frozenset) -> list[Rule]:
        return [r for r in self.rules if r.my == my and r.guard(view)]

    def without_rule(self, name: str) -> "ViewProtocolTable":
        if all(r.name != name for r in self.rules):
            raise KeyError(name)
        return ViewProtocolTable(self.kind, tuple(r for r in self.rules if r.name != name))

    def rule_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rules)


class PairProtocolTable:
    """An n=2 control protocol whose guards read the other robot's color."""

    def __init__(self, kind: ProtocolKind, colors: tuple[str, ...],
                 entries: dict[tuple[str, str], StepOutcome],
                 rule_names: tuple[str, ...] = ()):
        self.kind = kind
        self.colors = colors
        self._entries = entries
        self._rule_names = rule_names

    @classmethod
    def from_rules(cls, kind: ProtocolKind, colors: tuple[str, ...],
                   rules: tuple[Rule, ...]) -> "PairProtocolTable":
        entries = {}
        for my in colors:
            for other in colors:
                execute = False
                nxt = my
                for rule in rules:
                    if rule.my == my and rule.guard(frozenset({other})):
                        execute = execute or rule.execute
                        nxt = rule.next
                entries[(my, other)] = StepOutcome(execute, nxt)
        table = cls(kind, colors, entries, tuple(r.name for r in rules))
        table._rules = rules
        return table

    def step(self, my: str, other: str) -> StepOutcome:
        try:
            return self._entries[(my, other)]
        except KeyError:
            raise ValueError(
                f"{self.kind.value}: no entry for colors ({my!r}, {other!r})"
            ) from None

    def fires_exec(self, my: str, other: str) -> bool:
        out = self._entries.get((my, other))
        return out is not None and out.execute_p

    def without_rule(self, name: str) -> "PairProtocolTable":
        rules = getattr(self, "_rules", None)
        if rules is None or all(r.name != name for r in rules):
            raise KeyError(name)
        return PairProtocolTable.from_rules(
            self.kind, self.colors, tuple(r for r in rules if r.name != name)
        )

    def rule_names(self) -> tuple[str, ...]:
        return self._rule_names


def _sim_rs_s_rules() -> tuple[Rule, ...]:
    return (
        Rule(VIEW_PROTOCOL_EXEC_RULE, T,
             lambda c: c in ({T}, {T, S}, {T, SP}), M, execute=True),
        Rule("M->S", M, lambda c: not (c & {SP}) and T in c, S),
        Rule("M->S'", M, lambda c: not (c & {T, SP}) or (T not in c and S in c), SP),
        Rule("S->T", S, lambda c: not (c & {M}) and SP in c, T),
        Rule("S'->T", SP, lambda c: not (c & {S, T}) or (S not in c and M in c), T),
    )


def _ss_sim_rs_s_rules() -> tuple[Rule, ...]:
    # Differences from the plain 4-color protocol: the M->S' guard accepts
    # views where T is a proper subset, and S->T gains two escape guards.
    return (
        Rule(VIEW_PROTOCOL_EXEC_RULE, T,
             lambda c: c in ({T}, {T, S}, {T, SP}), M, execute=True),
        Rule("M->S", M, lambda c: not (c & {SP}) and T in c, S),
        Rule("M->S'", M,
             lambda c: not (c & {T, SP}) or ({T} < c and S in c), SP),
        Rule("S->T", S,
             lambda c: (not (c & {M}) and SP in c) or c == {S} or {T, M, SP} <= c, T),
        Rule("S'->T", SP, lambda c: not (c & {S, T}) or (S not in c and M in c), T),
    )


def _sim_rs_a_rules() -> tuple[Rule, ...]:
    return (
        Rule(VIEW_PROTOCOL_EXEC_RULE, T,
             lambda c: c in ({T}, {T, S}, {T, SP}), M, execute=True),
        Rule("T->W", T, lambda c: not (c & {SP}) and M in c, W),
        Rule("M->W", M, lambda c: c == {M}, W),
        Rule("M->S", M, lambda c: not (c & {T, SP}) and W in c, S),
        Rule("M->S'", M, lambda c: not (c & {T, W}) and S in c, SP),
        Rule("S->T", S, lambda c: not (c & {W, M}) and SP in c, T),
        Rule("S'->T", SP, lambda c: not (c & {W, S}) and M in c, T),
        Rule("W->T", W, lambda c: not (c & {M, SP}), T),
    )


def _ss_sim_rs_a_rules() -> tuple[Rule, ...]:
    return (
        Rule(VIEW_PROTOCOL_EXEC_RULE, T,
             lambda c: c in ({T}, {T, S}, {T, SP}), M, execute=True),
        Rule("T->W", T,
             lambda c: (not (c & {SP}) and M in c) or c == {T, SP, W}, W),
        Rule("M->W", M,
             lambda c: c in ({M}, {M, SP, W}, {T, M, SP, W}) or {T, S, SP} <= c, W),
        Rule("M->S", M, lambda c: not (c & {T, SP}) and W in c, S),
        Rule("M->S'", M, lambda c: not (c & {T, W}) and S in c, SP),
        Rule("S->T", S,
             lambda c: (not (c & {W, M}) and SP in c) or c == {S}, T),
        Rule("S->W", S,
             lambda c: (T not in c and {SP, W} <= c) or c == {T, S, SP, W}, W),
        Rule("S'->T", SP, lambda c: not (c & {W, S}) and M in c, T),
        Rule("S'->W", SP, lambda c: c == {SP, W}, W),
        Rule("W->T", W, lambda c: not (c & {M, SP}), T),
    )


def _sim2_rs_a_rules() -> tuple[Rule, ...]:
    return (
        Rule(VIEW_PROTOCOL_EXEC_RULE, T, lambda c: c <= {T, S}, M, execute=True),
        Rule("M->S", M, lambda c: c <= {T, M}, S),
        Rule("S->T", S, lambda c: c <= {M, S}, T),
    )


@lru_cache(maxsize=None)
def control_table(kind: ProtocolKind):
    """The (cached) transition table for a protocol kind."""
    if kind is ProtocolKind.SIM_RS_S:
        return ViewProtocolTable(kind, _sim_rs_s_rules())
    if kind is ProtocolKind.SS_SIM_RS_S:
        return ViewProtocolTable(kind, _ss_sim_rs_s_rules())
    if kind is ProtocolKind.SIM_RS_A:
        return ViewProtocolTable(kind, _sim_rs_a_rules())
    if kind is ProtocolKind.SS_SIM_RS_A:
        return ViewProtocolTable(kind, _ss_sim_rs_a_rules())
    if kind is ProtocolKind.SIM2_RS_A:
        return PairProtocolTable.from_rules(kind, kind.colors, _sim2_rs_a_rules())
    raise ValueError(kind)


def step_sim_rs_s(my: str, view) -> StepOutcome:
    return control_table(ProtocolKind.SIM_RS_S).step(my, frozenset(view))


def step_ss_sim_rs_s(my: str, view) -> StepOutcome:
    return control_table(ProtocolKind.SS_SIM_RS_S).step(my, frozenset(view))


def step_sim_rs_a(my: str, view) -> StepOutcome:
    return control_table(ProtocolKind.SIM_RS_A).step(my, frozenset(view))


def step_ss_sim_rs_a(my: str, view) -> StepOutcome:
    return control_table(ProtocolKind.SS_SIM_RS_A).step(my, frozenset(view))


def step_sim2_rs_a(my: str, other: str) -> StepOutcome:
    return control_table(ProtocolKind.SIM2_RS_A).step(my, other)


def kind_from_name(name: str) -> ProtocolKind:
    for kind in ProtocolKind:
        if kind.value == name:
            return kind
    raise ValueError(f"unknown protocol kind: {name!r}")
