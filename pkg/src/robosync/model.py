"""Core domain types: lights, configurations, snapshots, and the simulated protocol."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

# Control colors. S' is rendered with an apostrophe everywhere (traces, DOT, CLI).
T = "T"
M = "M"
S = "S"
SP = "S'"
W = "W"
X = "X"
Y = "Y"

# Canonical display order; "sorted" supports are sorted by this rank, not alphabetically.
CANON_ORDER = (T, M, S, SP, W, X, Y)
_RANK = {c: i for i, c in enumerate(CANON_ORDER)}

Point = tuple[float, float]
ColorView = frozenset


def color_rank(color: str) -> int:
    return _RANK[color]


def sort_colors(colors: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(colors, key=_RANK.__getitem__))


def render_support(colors: Iterable[str]) -> str:
    return ",".join(sort_colors(colors))


def parse_support(text: str) -> frozenset:
    return frozenset(text.split(",")) if text else frozenset()


@dataclass(frozen=True)
class ProductLight:
    """A simulator light: the control color times the simulated protocol's own color."""

    control: str
    sim: int = 0


PHASE_IDLE = "idle"
PHASE_LOOKED = "looked"
PHASE_COMPUTED = "computed"
PHASE_MOVING = "moving"


@dataclass
class RobotState:
    pos: Point
    light: ProductLight
    phase: str = PHASE_IDLE


@dataclass
class Configuration:
    """Positions, lights and activity phases of all robots, plus a write version.

    The version increases whenever some light changes value or a move with a
    destination different from the current position begins or ends; it is
    unchanged otherwise.
    """

    robots: list[RobotState]
    version: int = 0

    @property
    def n(self) -> int:
        return len(self.robots)

    def controls(self) -> tuple[str, ...]:
        return tuple(r.light.control for r in self.robots)

    def support(self) -> frozenset:
        return frozenset(r.light.control for r in self.robots)


def color_view(config: Configuration) -> frozenset:
    """The set of control colors present in a configuration (self included)."""
    return config.support()


def make_configuration(
    controls: Sequence[str],
    sims: Sequence[int] | None = None,
    positions: Sequence[Point] | None = None,
) -> Configuration:
    n = len(controls)
    if n < 2:
        raise ValueError("need at least two robots")
    sims = list(sims) if sims is not None else [0] * n
    positions = list(positions) if positions is not None else [(float(i), 0.0) for i in range(n)]
    robots = [
        RobotState(pos=positions[i], light=ProductLight(controls[i], sims[i]))
        for i in range(n)
    ]
    return Configuration(robots=robots)


@dataclass(frozen=True)
class PSnapshot:
    """Input to the simulated protocol: relative positions and sim colors only.

    Control colors never appear here; ``entries`` covers every robot with the
    observer itself at the origin.
    """

    own_sim: int
    entries: tuple[tuple[float, float, int], ...]


@dataclass(frozen=True)
class Decision:
    """Outcome of one Compute: whether the simulated protocol ran, and the writes."""

    execute_p: bool
    next_control: str
    destination: Point
    next_sim: int


class SimulatedProtocol(Protocol):
    k: int

    def decide(self, snapshot: PSnapshot) -> tuple[Point, int]:
        """Return (destination relative to self, next sim color)."""
        ...


@dataclass(frozen=True)
class StayProtocol:
    """Never moves, never changes its sim color."""

    k: int = 1

    def decide(self, snapshot: PSnapshot) -> tuple[Point, int]:
        return (0.0, 0.0), snapshot.own_sim


@dataclass(frozen=True)
class MidpointProtocol:
    """Moves to the centroid of all observed positions (self included)."""

    k: int = 1

    def decide(self, snapshot: PSnapshot) -> tuple[Point, int]:
        xs = [e[0] for e in snapshot.entries]
        ys = [e[1] for e in snapshot.entries]
        return (sum(xs) / len(xs), sum(ys) / len(ys)), snapshot.own_sim


@dataclass(frozen=True)
class ColorCycleProtocol:
    """Keeps its position and increments its sim color modulo k."""

    k: int

    def decide(self, snapshot: PSnapshot) -> tuple[Point, int]:
        return (0.0, 0.0), (snapshot.own_sim + 1) % self.k


_COLOR_CYCLE_RE = re.compile(r"^color_cycle[(:](\d+)\)?$")


def builtin_p(name: str) -> SimulatedProtocol:
    """Look up a simulated-protocol fixture: stay, midpoint, or color_cycle(k)."""
    if name == "stay":
        return StayProtocol()
    if name == "midpoint":
        return MidpointProtocol()
    m = _COLOR_CYCLE_RE.match(name)
    if m:
        k = int(m.group(1))
        if k < 1:
            raise ValueError("color_cycle needs k >= 1")
        return ColorCycleProtocol(k=k)
    raise ValueError(f"unknown simulated protocol fixture: {name!r}")


def p_snapshot_for(config: Configuration, me: int, observed_positions: Sequence[Point]) -> PSnapshot:
    """Build the simulated protocol's view for robot ``me``.

    ``observed_positions`` are the (possibly mid-move) points captured at Look
    time; they are shifted into the observer's frame.
    """
    ox, oy = observed_positions[me]
    entries = tuple(
        (px - ox, py - oy, config.robots[i].light.sim)
        for i, (px, py) in enumerate(observed_positions)
    )
    return PSnapshot(own_sim=config.robots[me].light.sim, entries=entries)
