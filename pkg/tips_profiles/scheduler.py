"""
Partitioned static scheduling of segment profiles with bus interference.

Every task runs its profile on one core, starting at its release. Tasks
sharing a core must have disjoint base windows; only inflation of a
predecessor pushes the next task on that core back. Segments on distinct
cores that overlap in time interfere: a segment is charged
``min(max_access, max_access') * bus_access_latency`` cycles per overlapping
foreign segment. In inflate mode the charge stretches the segment and the
layout is recomputed until nothing changes; in budget mode the layout stays
fixed and each task's charges are compared with an interference budget.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .base_model import BaseTipsModel
from .cfg_model import AnalysisConfig, Placement
from .enums import InterferenceMode
from .exceptions import NonConvergenceError, PlacementError
from .pydantic_compat import Field
from .segments import SegmentSequence

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 100


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
class ScheduledSegment(BaseTipsModel):
    task: str
    core: int
    index: int
    base_start: int
    start: int
    dur: int
    base_dur: int
    max_access: int
    inflation: int = 0
    interference: int = 0

    @property
    def end(self) -> int:
        return self.start + self.dur


class TaskOutcome(BaseTipsModel):
    task: str
    core: int
    release: int
    start: int
    finish: int
    d_max: int
    interference: int
    budget: Optional[int] = None
    overrun: bool = False


class Schedule(BaseTipsModel):
    mode: InterferenceMode = InterferenceMode.INFLATE
    bus_access_latency: int
    cores: Dict[int, List[ScheduledSegment]]
    tasks: List[TaskOutcome]
    makespan: int
    interference_total: int
    rounds: int = 0
    overruns: List[str] = Field(default_factory=list)

    def segments(self) -> List[ScheduledSegment]:
        return [seg for core in sorted(self.cores) for seg in self.cores[core]]

    def outcome(self, task: str) -> TaskOutcome:
        for outcome in self.tasks:
            if outcome.task == task:
                return outcome
        raise KeyError(task)


# ------------------------------------------------------------------------------
# Placements
# ------------------------------------------------------------------------------
def default_placements(names: Sequence[str]) -> List[Placement]:
    """One core per task, in name order, all released at 0."""
    return [Placement(task=name, core=core) for core, name in enumerate(sorted(names))]


def resolve_placements(
    profiles: Mapping[str, SegmentSequence],
    placements: Sequence[Placement],
    core_count: Optional[int] = None,
) -> List[Placement]:
    if not profiles:
        raise PlacementError("nothing to schedule")
    if not placements:
        placements = default_placements(list(profiles))
    seen: Dict[str, Placement] = {}
    for placement in placements:
        if placement.task not in profiles:
            raise PlacementError(f"placement for unknown task {placement.task}")
        if placement.task in seen:
            raise PlacementError(f"task {placement.task} placed twice")
        if core_count is not None and placement.core >= core_count:
            raise PlacementError(
                f"task {placement.task} placed on core {placement.core} of {core_count}"
            )
        seen[placement.task] = placement
    missing = sorted(set(profiles) - set(seen))
    if missing:
        raise PlacementError(f"no placement for {', '.join(missing)}")
    ordered = sorted(seen.values(), key=lambda p: (p.core, p.release, p.task))
    for prev, placement in zip(ordered, ordered[1:]):
        if prev.core != placement.core:
            continue
        prev_end = prev.release + profiles[prev.task].d_max
        if placement.release < prev_end:
            raise PlacementError(
                f"tasks {prev.task} and {placement.task} overlap on core {placement.core}:"
                f" {prev.task} runs until {prev_end}, {placement.task} is released at"
                f" {placement.release}"
            )
    return ordered


# ------------------------------------------------------------------------------
# Layout and interference
# ------------------------------------------------------------------------------
Inflations = Dict[str, Tuple[int, ...]]


class _Layout:
    """Static inputs of one scheduling problem."""

    def __init__(self, profiles: Mapping[str, SegmentSequence], placements: Sequence[Placement]):
        self.profiles = profiles
        self.placements = list(placements)
        self.by_core: Dict[int, List[Placement]] = {}
        for placement in self.placements:
            self.by_core.setdefault(placement.core, []).append(placement)
        for queue in self.by_core.values():
            queue.sort(key=lambda p: (p.release, p.task))

    def zero(self) -> Inflations:
        return {p.task: (0,) * len(self.profiles[p.task].segments) for p in self.placements}

    def place(
        self, inflations: Inflations, charges: Optional[Inflations] = None
    ) -> Tuple[Dict[int, List[ScheduledSegment]], Dict[str, Tuple[int, int]]]:
        """Lay every task out; returns segments per core and ``(start, finish)`` per task."""
        cores: Dict[int, List[ScheduledSegment]] = {}
        spans: Dict[str, Tuple[int, int]] = {}
        for core in sorted(self.by_core):
            ready = 0
            laid: List[ScheduledSegment] = []
            for placement in self.by_core[core]:
                profile = self.profiles[placement.task]
                added = inflations[placement.task]
                charged = (charges or inflations)[placement.task]
                # release, unless an inflated predecessor spills past it
                begin = max(placement.release, ready)
                shift = 0
                for index, seg in enumerate(profile.segments):
                    laid.append(
                        ScheduledSegment(
                            task=placement.task,
                            core=core,
                            index=index,
                            base_start=seg.start,
                            start=begin + seg.start + shift,
                            dur=seg.dur + added[index],
                            base_dur=seg.dur,
                            max_access=seg.max_access,
                            inflation=added[index],
                            interference=charged[index],
                        )
                    )
                    shift += added[index]
                ready = begin + profile.d_max + shift
                spans[placement.task] = (begin, ready)
            cores[core] = laid
        return cores, spans


def interference_of(
    seg: ScheduledSegment, cores: Mapping[int, Sequence[ScheduledSegment]], latency: int
) -> int:
    """Charge of ``seg`` against every overlapping segment on another core."""
    total = 0
    for core, laid in cores.items():
        if core == seg.core:
            continue
        for other in laid:
            if other.start < seg.end and seg.start < other.end:
                total += min(seg.max_access, other.max_access) * latency
    return total


def _charges(
    tasks: Sequence[str], cores: Mapping[int, Sequence[ScheduledSegment]], latency: int
) -> Inflations:
    per_task: Dict[str, List[int]] = {task: [] for task in tasks}
    for laid in cores.values():
        for seg in laid:
            per_task.setdefault(seg.task, []).append(interference_of(seg, cores, latency))
    return {task: tuple(values) for task, values in per_task.items()}


# ------------------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------------------
def build_schedule(
    profiles: Mapping[str, SegmentSequence],
    placements: Sequence[Placement],
    config: AnalysisConfig,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    mode: InterferenceMode = InterferenceMode.INFLATE,
    budget: Optional[int] = None,
    core_count: Optional[int] = None,
) -> Schedule:
    """
    Lay out and charge interference for every task.

    Inflate mode iterates: every round recomputes all charges on the current
    layout, then re-lays the tasks with those charges as inflation; it stops
    when a round changes no charge. Raises :class:`NonConvergenceError` after
    ``max_rounds`` rounds without a fixed point.
    """
    mode = InterferenceMode(mode)
    if mode == InterferenceMode.BUDGET and budget is None:
        raise ValueError("budget mode needs a budget")
    latency = config.interference_latency
    layout = _Layout(profiles, resolve_placements(profiles, placements, core_count))
    tasks = [p.task for p in layout.placements]

    inflations = layout.zero()
    rounds = 0
    if mode == InterferenceMode.INFLATE:
        while True:
            if rounds >= max_rounds:
                raise NonConvergenceError(rounds)
            rounds += 1
            cores, _ = layout.place(inflations)
            updated = _charges(tasks, cores, latency)
            if updated == inflations:
                break
            inflations = updated
        cores, spans = layout.place(inflations)
    else:
        cores, _ = layout.place(inflations)
        cores, spans = layout.place(inflations, charges=_charges(tasks, cores, latency))
    logger.debug("Schedule fixed point after %d round(s), mode=%s", rounds, mode)

    outcomes: List[TaskOutcome] = []
    for placement in sorted(layout.placements, key=lambda p: p.task):
        begin, finish = spans[placement.task]
        charged = sum(
            seg.interference for seg in cores[placement.core] if seg.task == placement.task
        )
        overrun = budget is not None and mode == InterferenceMode.BUDGET and charged > budget
        if overrun:
            logger.warning(
                "Task %s needs %d interference cycles, budget is %d",
                placement.task, charged, budget,
            )
        outcomes.append(
            TaskOutcome(
                task=placement.task,
                core=placement.core,
                release=placement.release,
                start=begin,
                finish=finish,
                d_max=profiles[placement.task].d_max,
                interference=charged,
                budget=budget if mode == InterferenceMode.BUDGET else None,
                overrun=overrun,
            )
        )

    makespan = max(outcome.finish for outcome in outcomes)
    return Schedule(
        mode=mode,
        bus_access_latency=latency,
        cores=cores,
        tasks=outcomes,
        makespan=makespan,
        interference_total=sum(outcome.interference for outcome in outcomes),
        rounds=rounds,
        overruns=[outcome.task for outcome in outcomes if outcome.overrun],
    )


class ScheduleViolation(BaseTipsModel):
    task: str
    index: Optional[int] = None
    message: str

    def describe(self) -> str:
        where = self.task if self.index is None else f"{self.task}[{self.index}]"
        return f"{where}: {self.message}"


class ScheduleReport(BaseTipsModel):
    violations: List[ScheduleViolation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_schedule(sch: Schedule) -> ScheduleReport:
    """Re-check layout invariants and recompute every charge on the final layout."""
    violations: List[ScheduleViolation] = []

    def flag(seg: ScheduledSegment, message: str) -> None:
        violations.append(ScheduleViolation(task=seg.task, index=seg.index, message=message))

    for core, laid in sorted(sch.cores.items()):
        ordered = sorted(laid, key=lambda s: (s.start, s.end))
        for prev, seg in zip(ordered, ordered[1:]):
            if seg.start < prev.end:
                flag(seg, f"overlaps {prev.task}[{prev.index}] on core {core}")
        for seg in laid:
            if seg.core != core:
                flag(seg, f"listed on core {core} but assigned to core {seg.core}")
            if seg.dur != seg.base_dur + seg.inflation:
                flag(seg, f"dur {seg.dur} != base {seg.base_dur} + inflation {seg.inflation}")
            expected = interference_of(seg, sch.cores, sch.bus_access_latency)
            if seg.interference != expected:
                flag(seg, f"interference {seg.interference}, overlaps give {expected}")
            if sch.mode == InterferenceMode.INFLATE and seg.inflation != expected:
                flag(seg, f"inflation {seg.inflation}, overlaps give {expected}")
            if sch.mode == InterferenceMode.BUDGET and seg.inflation != 0:
                flag(seg, "inflated in budget mode")

    by_task: Dict[str, List[ScheduledSegment]] = {}
    for seg in sch.segments():
        by_task.setdefault(seg.task, []).append(seg)
    for outcome in sch.tasks:
        laid = sorted(by_task.get(outcome.task, []), key=lambda s: s.index)
        if laid and laid[0].start < outcome.release:
            flag(laid[0], f"starts at {laid[0].start} before release {outcome.release}")
        for prev, seg in zip(laid, laid[1:]):
            expected = seg.base_start - prev.base_start + prev.inflation
            if seg.start - prev.start != expected:
                flag(seg, f"shifted by {seg.start - prev.start}, expected {expected}")
    return ScheduleReport(violations=violations)


def export_schedule(sch: Schedule) -> Dict:
    return {
        "mode": str(sch.mode),
        "makespan": sch.makespan,
        "interference_total": sch.interference_total,
        "rounds": sch.rounds,
        "overruns": list(sch.overruns),
        "cores": {
            str(core): [
                {"task": s.task, "start": s.start, "dur": s.dur, "inflation": s.inflation}
                for s in sch.cores[core]
            ]
            for core in sorted(sch.cores)
        },
    }
