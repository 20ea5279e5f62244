"""Concrete execution: SSYNCH rounds, ASYNCH event interleavings, traces, segmentation."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import (
    M,
    PHASE_COMPUTED,
    PHASE_IDLE,
    PHASE_LOOKED,
    PHASE_MOVING,
    S,
    SP,
    T,
    Configuration,
    ProductLight,
    PSnapshot,
    RobotState,
    SimulatedProtocol,
    make_configuration,
    p_snapshot_for,
    parse_support,
    render_support,
)
from .protocols import ProtocolKind, control_table

OP_INIT = "init"
OP_ROUND = "round"
OP_LOOK = "look"
OP_COMPUTE = "compute"
OP_MOVE_BEGIN = "move_begin"
OP_MOVE_END = "move_end"


@dataclass(frozen=True, slots=True)
class DecisionRecord:
    robot: int
    exec_p: bool
    frm: str
    to: str


@dataclass(frozen=True, slots=True)
class TraceRecord:
    step: int
    actors: tuple[int, ...]
    op: str
    decisions: tuple[DecisionRecord, ...]
    support: frozenset
    version: int
    look_version: int | None = None
    moving_observed: bool = False


@dataclass
class Trace:
    kind: ProtocolKind
    mode: str  # "ssynch" | "asynch"
    n: int
    k: int
    initial_controls: tuple[str, ...]
    initial_sims: tuple[int, ...]
    initial_positions: tuple[tuple[float, float], ...]
    records: list[TraceRecord] = field(default_factory=list)

    @property
    def initial_support(self) -> frozenset:
        return frozenset(self.initial_controls)


def _table_for(kind: ProtocolKind, table=None):
    return table if table is not None else control_table(kind)


def _decide(table, kind: ProtocolKind, me: int, controls: Sequence[str]):
    if kind.pair_based:
        other = controls[1 - me]
        return table.step(controls[me], other)
    return table.step(controls[me], frozenset(controls))


def run_ssynch(
    kind: ProtocolKind,
    p: SimulatedProtocol,
    init: Configuration,
    schedule: Sequence[Iterable[int]],
    rounds: int | None = None,
    table=None,
) -> Trace:
    """Run `rounds` synchronous rounds; activated robots act on the same snapshot.

    All writes and moves of a round commit atomically at its end.
    """
    table = _table_for(kind, table)
    rounds = len(schedule) if rounds is None else rounds
    if rounds > len(schedule):
        raise ValueError(f"schedule covers {len(schedule)} rounds, need {rounds}")
    n = init.n
    for robot in init.robots:
        if robot.light.control not in kind.colors:
            raise ValueError(f"color {robot.light.control!r} not in {kind.value} color set")
    config = Configuration(
        [RobotState(r.pos, r.light, r.phase) for r in init.robots], init.version
    )
    trace = Trace(
        kind=kind,
        mode="ssynch",
        n=n,
        k=p.k,
        initial_controls=config.controls(),
        initial_sims=tuple(r.light.sim for r in config.robots),
        initial_positions=tuple(r.pos for r in config.robots),
    )
    for step in range(1, rounds + 1):
        activated = sorted(set(schedule[step - 1]))
        if not activated:
            raise ValueError(f"round {step}: empty activation set")
        if activated[0] < 0 or activated[-1] >= n:
            raise ValueError(f"round {step}: robot ids out of range")
        controls = config.controls()
        positions = [r.pos for r in config.robots]
        pre_version = config.version
        decisions = []
        changed = False
        for me in activated:
            outcome = _decide(table, kind, me, controls)
            if outcome.execute_p:
                snap = p_snapshot_for(config, me, positions)
                (dx, dy), next_sim = p.decide(snap)
                dest = (positions[me][0] + dx, positions[me][1] + dy)
            else:
                dest = positions[me]
                next_sim = config.robots[me].light.sim
            decisions.append(
                (me, outcome.execute_p, controls[me], outcome.next_control, dest, next_sim)
            )
        for me, exec_p, frm, to, dest, next_sim in decisions:
            robot = config.robots[me]
            if to != frm or next_sim != robot.light.sim or dest != robot.pos:
                changed = True
            robot.light = ProductLight(to, next_sim)
            robot.pos = dest
        if changed:
            config.version += 1
        trace.records.append(
            TraceRecord(
                step=step,
                actors=tuple(activated),
                op=OP_ROUND,
                decisions=tuple(
                    DecisionRecord(me, exec_p, frm, to)
                    for me, exec_p, frm, to, _, _ in decisions
                ),
                support=config.support(),
                version=config.version,
                look_version=pre_version,
            )
        )
    return trace


class ScriptAsynchAdversary:
    """Replays an explicit robot sequence; each entry advances that robot one event."""

    def __init__(self, robot_sequence: Sequence[int], observe_fraction: float = 1.0):
        self._seq = list(robot_sequence)
        self._pos = 0
        self._fraction = observe_fraction

    def next_robot(self, engine) -> int | None:
        if self._pos >= len(self._seq):
            return None
        robot = self._seq[self._pos]
        self._pos += 1
        return robot

    def observe_fraction(self, mover: int, observer: int) -> float:
        return self._fraction


class RandomAsynchAdversary:
    """Seeded random event chooser, fair by construction.

    Any robot left idle for 3n events is scheduled next, so every robot acts
    at least once in every window of 4n events.
    """

    def __init__(self, seed: int, n: int):
        self._rng = random.Random(seed)
        self._n = n
        self._gap = [0] * n

    def next_robot(self, engine) -> int:
        forced = [i for i in range(self._n) if self._gap[i] >= 3 * self._n]
        robot = forced[0] if forced else self._rng.randrange(self._n)
        for i in range(self._n):
            self._gap[i] += 1
        self._gap[robot] = 0
        return robot

    def observe_fraction(self, mover: int, observer: int) -> float:
        return self._rng.random()


def make_random_ssynch_schedule(seed: int, n: int, rounds: int, window: int = 4) -> list[frozenset]:
    """Seeded random nonempty activation sets; nobody idles longer than `window` rounds."""
    rng = random.Random(seed)
    gap = [0] * n
    schedule = []
    for _ in range(rounds):
        chosen = {i for i in range(n) if rng.random() < 0.5}
        chosen.update(i for i in range(n) if gap[i] >= window)
        if not chosen:
            chosen = {rng.randrange(n)}
        for i in range(n):
            gap[i] = 0 if i in chosen else gap[i] + 1
        schedule.append(frozenset(chosen))
    return schedule


def run_asynch(
    kind: ProtocolKind,
    p: SimulatedProtocol,
    init: Configuration,
    adversary,
    max_events: int,
    table=None,
) -> Trace:
    """Interleave Look / Compute / MoveBegin / MoveEnd events chosen by the adversary.

    Look stores the full snapshot (a robot observed mid-move contributes an
    adversary-chosen point on its segment); Compute applies the step function to
    the stored snapshot and writes the light; MoveEnd lands exactly on the
    computed destination.  Null cycles still traverse all four events.
    """
    table = _table_for(kind, table)
    n = init.n
    for robot in init.robots:
        if robot.light.control not in kind.colors:
            raise ValueError(f"color {robot.light.control!r} not in {kind.value} color set")
    config = Configuration(
        [RobotState(r.pos, r.light, r.phase) for r in init.robots], init.version
    )
    trace = Trace(
        kind=kind,
        mode="asynch",
        n=n,
        k=p.k,
        initial_controls=config.controls(),
        initial_sims=tuple(r.light.sim for r in config.robots),
        initial_positions=tuple(r.pos for r in config.robots),
    )
    pc = [0] * n  # 0 idle->Look, 1 looked->Compute, 2 computed->MoveBegin, 3 moving->MoveEnd
    stored: list[tuple | None] = [None] * n  # (controls, sims, obs_positions, version, moving_seen)
    pending: list[tuple | None] = [None] * n  # (exec_p, frm, to, dest, next_sim, nontrivial)
    for step in range(1, max_events + 1):
        me = adversary.next_robot((config, pc))
        if me is None:
            break
        if not 0 <= me < n:
            raise ValueError(f"adversary chose robot {me} out of range")
        robot = config.robots[me]
        if pc[me] == 0:
            obs = []
            moving_seen = False
            for j, other in enumerate(config.robots):
                if other.phase == PHASE_MOVING and pending[j] is not None and pending[j][5]:
                    frac = adversary.observe_fraction(j, me)
                    ox, oy = other.pos
                    dx, dy = pending[j][3]
                    obs.append((ox + (dx - ox) * frac, oy + (dy - oy) * frac))
                    moving_seen = True
                else:
                    obs.append(other.pos)
            stored[me] = (
                config.controls(),
                tuple(r.light.sim for r in config.robots),
                tuple(obs),
                config.version,
                moving_seen,
            )
            robot.phase = PHASE_LOOKED
            pc[me] = 1
            trace.records.append(
                TraceRecord(step, (me,), OP_LOOK, (), config.support(), config.version,
                            look_version=config.version, moving_observed=moving_seen)
            )
        elif pc[me] == 1:
            controls, sims, obs, look_version, moving_seen = stored[me]
            outcome = _decide(table, kind, me, controls)
            frm = robot.light.control
            if outcome.execute_p:
                # P sees the stored snapshot: positions and sim colors at Look time
                entries = tuple(
                    (px - obs[me][0], py - obs[me][1], sims[j])
                    for j, (px, py) in enumerate(obs)
                )
                (dx, dy), next_sim = p.decide(PSnapshot(own_sim=sims[me], entries=entries))
                dest = (robot.pos[0] + dx, robot.pos[1] + dy)
            else:
                dest = robot.pos
                next_sim = robot.light.sim
            nontrivial = dest != robot.pos
            if outcome.next_control != frm or next_sim != robot.light.sim:
                config.version += 1
            robot.light = robot.light.__class__(outcome.next_control, next_sim)
            robot.phase = PHASE_COMPUTED
            pending[me] = (outcome.execute_p, frm, outcome.next_control, dest, next_sim, nontrivial)
            pc[me] = 2
            trace.records.append(
                TraceRecord(
                    step, (me,), OP_COMPUTE,
                    (DecisionRecord(me, outcome.execute_p, frm, outcome.next_control),),
                    config.support(), config.version,
                    look_version=look_version, moving_observed=moving_seen,
                )
            )
        elif pc[me] == 2:
            if pending[me][5]:
                config.version += 1
            robot.phase = PHASE_MOVING
            pc[me] = 3
            trace.records.append(
                TraceRecord(step, (me,), OP_MOVE_BEGIN, (), config.support(), config.version)
            )
        else:
            nontrivial = pending[me][5]
            robot.pos = pending[me][3]
            if nontrivial:
                config.version += 1
            robot.phase = PHASE_IDLE
            pending[me] = None
            stored[me] = None
            pc[me] = 0
            trace.records.append(
                TraceRecord(step, (me,), OP_MOVE_END, (), config.support(), config.version)
            )
    return trace


# --- segmentation -----------------------------------------------------------

FOUR_COLOR_CUT = frozenset({T, S, SP})
ALL_M = frozenset({M})


def _is_cut(kind: ProtocolKind, support: frozenset) -> bool:
    if kind.pair_based:
        return True  # refined by cs-time detection for asynch traces
    if kind in (ProtocolKind.SIM_RS_A, ProtocolKind.SS_SIM_RS_A):
        return support <= FOUR_COLOR_CUT or support == ALL_M
    return support <= FOUR_COLOR_CUT


@dataclass(frozen=True)
class Stage:
    start: int  # boundary index (0 = initial configuration)
    end: int
    executors: frozenset
    look_versions: tuple[int, ...]
    moving_observed: bool


@dataclass(frozen=True)
class MegaCycle:
    start: int
    end: int
    stages: tuple[Stage, ...]

    def executor_sets(self) -> tuple[frozenset, ...]:
        return tuple(st.executors for st in self.stages)


@dataclass(frozen=True)
class OneFairnessViolation:
    stage_index: int
    accumulated: frozenset
    executors: frozenset


@dataclass
class MegaCycleDecomposition:
    """Support-delimited stages grouped into mega-cycles.

    Stages are windows between cut supports that contain at least one run of
    the simulated protocol.  Completed mega-cycles are maximal runs of stages
    whose executor sets are pairwise disjoint and cover the whole team; a stage
    overlapping the running accumulation is a one-fairness violation and
    restarts the grouping.  ``stages`` always carries every stage in order, so
    the induced sequence loses nothing.
    """

    n: int
    stages: tuple[Stage, ...]
    mega_cycles: tuple[MegaCycle, ...]
    incomplete: tuple[tuple[Stage, ...], ...]
    one_fairness_violations: tuple[OneFairnessViolation, ...]


def _boundaries(trace: Trace, table=None) -> tuple[list[frozenset], list[bool]]:
    """Per-boundary supports and cut flags (boundary i = after i records)."""
    kind = trace.kind
    table = _table_for(kind, table)
    supports = [trace.initial_support]
    for rec in trace.records:
        supports.append(rec.support)
    if trace.mode == "ssynch" or not kind.pair_based:
        cuts = [_is_cut(kind, s) for s in supports]
        return supports, cuts
    # Asynch pair protocol: cuts are the cycle-start times, where every robot is
    # idle or its remaining operations neither write a new color nor move.
    # Replay the per-robot machine state over the records to decide quiescence;
    # a robot that ran P is treated as possibly moving until its MoveEnd.
    n = trace.n
    controls = list(trace.initial_controls)
    pc = [0] * n
    stored_view: list[str | None] = [None] * n
    pending_exec = [False] * n

    def quiescent() -> bool:
        for i in range(n):
            if pc[i] == 0:
                continue
            if pc[i] == 1:
                outcome = table.step(controls[i], stored_view[i])
                if outcome.execute_p or outcome.next_control != controls[i]:
                    return False
            elif pending_exec[i]:
                return False
        return True

    cuts = [quiescent()]
    for rec in trace.records:
        me = rec.actors[0]
        if rec.op == OP_LOOK:
            stored_view[me] = controls[1 - me]
            pc[me] = 1
        elif rec.op == OP_COMPUTE:
            dec = rec.decisions[0]
            controls[me] = dec.to
            pending_exec[me] = dec.exec_p
            stored_view[me] = None
            pc[me] = 2
        elif rec.op == OP_MOVE_BEGIN:
            pc[me] = 3
        else:
            pending_exec[me] = False
            pc[me] = 0
        cuts.append(quiescent())
    return supports, cuts


def _exec_entries(trace: Trace):
    """(record index, robot, look_version, moving_observed) per protocol run."""
    out = []
    for idx, rec in enumerate(trace.records):
        for dec in rec.decisions:
            if dec.exec_p:
                out.append((idx, dec.robot, rec.look_version, rec.moving_observed))
    return out


def segment_trace(trace: Trace, table=None) -> MegaCycleDecomposition:
    """Split a trace into stages and group them into mega-cycles."""
    supports, cuts = _boundaries(trace, table)
    execs = _exec_entries(trace)
    n = trace.n
    full = frozenset(range(n))

    stages: list[Stage] = []
    if execs:
        cut_positions = [i for i, c in enumerate(cuts) if c]
        # window containing record idx spans (last cut <= idx, first cut > idx)
        ei = 0
        for w, start in enumerate(cut_positions):
            end = cut_positions[w + 1] if w + 1 < len(cut_positions) else len(supports) - 1
            if end <= start:
                continue
            members = []
            while ei < len(execs) and start <= execs[ei][0] < end:
                members.append(execs[ei])
                ei += 1
            if members:
                stages.append(
                    Stage(
                        start=start,
                        end=end,
                        executors=frozenset(m[1] for m in members),
                        look_versions=tuple(m[2] for m in members),
                        moving_observed=any(m[3] for m in members),
                    )
                )
            if ei >= len(execs):
                break

    mega_cycles: list[MegaCycle] = []
    incomplete: list[tuple[Stage, ...]] = []
    violations: list[OneFairnessViolation] = []
    acc: set[int] = set()
    acc_stages: list[Stage] = []
    for si, stage in enumerate(stages):
        if acc and acc & stage.executors:
            violations.append(OneFairnessViolation(si, frozenset(acc), stage.executors))
            incomplete.append(tuple(acc_stages))
            acc, acc_stages = set(), []
        acc |= stage.executors
        acc_stages.append(stage)
        if acc == full:
            mega_cycles.append(
                MegaCycle(acc_stages[0].start, acc_stages[-1].end, tuple(acc_stages))
            )
            acc, acc_stages = set(), []
    if acc_stages:
        incomplete.append(tuple(acc_stages))

    return MegaCycleDecomposition(
        n=n,
        stages=tuple(stages),
        mega_cycles=tuple(mega_cycles),
        incomplete=tuple(incomplete),
        one_fairness_violations=tuple(violations),
    )


def induced_sequence(decomp: MegaCycleDecomposition) -> tuple[frozenset, ...]:
    """The simulated protocol's activation sequence: stage executor sets in order."""
    return tuple(st.executors for st in decomp.stages)


def stage_snapshot_consistency(trace: Trace, decomp: MegaCycleDecomposition) -> list[bool]:
    """Per stage: did all executors see the same, settled configuration?"""
    return [
        len(set(st.look_versions)) <= 1 and not st.moving_observed
        for st in decomp.stages
    ]


def scheduled_robots(trace: Trace) -> set[int]:
    """Robots the adversary touched at least once; the post-hoc fairness view."""
    seen: set[int] = set()
    for rec in trace.records:
        seen.update(rec.actors)
    return seen


# --- serialization ----------------------------------------------------------


def _record_obj(trace: Trace, rec: TraceRecord) -> dict:
    return {
        "step": rec.step,
        "kind": trace.kind.value,
        "actors": list(rec.actors),
        "op": rec.op,
        "decisions": [
            {"robot": d.robot, "exec_p": d.exec_p, "from": d.frm, "to": d.to}
            for d in rec.decisions
        ],
        "support": render_support(rec.support),
        "version": rec.version,
    }


def serialize_trace(trace: Trace) -> str:
    """Line-delimited records with fixed field order; first line is the header."""
    header = {
        "step": 0,
        "kind": trace.kind.value,
        "actors": [],
        "op": OP_INIT,
        "decisions": [],
        "support": render_support(trace.initial_support),
        "version": 0,
        "mode": trace.mode,
        "n": trace.n,
        "k": trace.k,
        "controls": list(trace.initial_controls),
        "sims": list(trace.initial_sims),
        "positions": [list(p) for p in trace.initial_positions],
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for rec in trace.records:
        lines.append(json.dumps(_record_obj(trace, rec), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    """Rebuild a trace from its serialized form (enough to re-segment and check)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace")
    header = json.loads(lines[0])
    if header.get("op") != OP_INIT:
        raise ValueError("first line is not a trace header")
    kind = next(k for k in ProtocolKind if k.value == header["kind"])
    trace = Trace(
        kind=kind,
        mode=header["mode"],
        n=header["n"],
        k=header["k"],
        initial_controls=tuple(header["controls"]),
        initial_sims=tuple(header["sims"]),
        initial_positions=tuple(tuple(p) for p in header["positions"]),
    )
    look_version = {i: 0 for i in range(trace.n)}
    for ln in lines[1:]:
        obj = json.loads(ln)
        decisions = tuple(
            DecisionRecord(d["robot"], d["exec_p"], d["from"], d["to"])
            for d in obj["decisions"]
        )
        op = obj["op"]
        lv = None
        if op == OP_ROUND:
            lv = obj["version"]
        elif op == OP_LOOK:
            look_version[obj["actors"][0]] = obj["version"]
            lv = obj["version"]
        elif op == OP_COMPUTE:
            lv = look_version[obj["actors"][0]]
        trace.records.append(
            TraceRecord(
                step=obj["step"],
                actors=tuple(obj["actors"]),
                op=op,
                decisions=decisions,
                support=parse_support(obj["support"]),
                version=obj["version"],
                look_version=lv,
            )
        )
    return trace


def default_initial(kind: ProtocolKind, n: int, preset: str = "all-T") -> Configuration:
    if preset == "all-T":
        controls = [T] * n
    else:
        controls = preset.split(",")
        if len(controls) != n:
            raise ValueError(f"coloring {preset!r} has {len(controls)} entries, need {n}")
    for c in controls:
        if c not in kind.colors:
            raise ValueError(f"color {c!r} not in {kind.value} color set")
    return make_configuration(controls)
