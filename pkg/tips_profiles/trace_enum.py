"""
Worst-case timed trace enumeration over a TIPsGraph.

A depth-first working list extends partial traces one edge at a time. Each
entry owns its trace and its loop-context stack; the stack holds one
``(loop head, iterations so far)`` pair per active loop, innermost on top.

Edge classification for the context stack:

* leaving loops (source inside, destination outside) pops one counter per
  loop, innermost first, and drops the trace if a counter is below
  ``min_iter``;
* an edge into a loop head from inside the same loop is a return arc: the
  counter is advanced, or the trace dropped once ``max_iter`` returns have
  already been taken;
* any other edge into a loop head enters that loop and pushes a 0 counter.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .base_model import BaseTipsModel
from .cfg_model import AnalysisConfig, TaskCFG
from .exceptions import TraceExplosionError
from .pydantic_compat import Field
from .tipsgraph import END, START, TgEdge, TipsGraph

logger = logging.getLogger(__name__)

Elements = Tuple[Tuple[str, int], ...]


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
class TraceElement(BaseTipsModel):
    tip: str
    date: int = Field(..., ge=0)
    mu: int = Field(0, ge=0)


class Trace(BaseTipsModel):
    id: str
    elements: List[TraceElement]

    @property
    def end_date(self) -> int:
        return self.elements[-1].date

    @property
    def signature(self) -> Tuple[str, ...]:
        return tuple(e.tip for e in self.elements)

    def total_accesses(self) -> int:
        return sum(e.mu for e in self.elements)


class TraceSet(BaseTipsModel):
    task: str
    access_time: int
    d_max: int
    traces: List[Trace]

    def trace(self, trace_id: str) -> Trace:
        for trace in self.traces:
            if trace.id == trace_id:
                return trace
        raise KeyError(trace_id)


class LoopContextStack:
    """
    Immutable stack of ``(loop head, iterations so far)`` frames.

    Operations return new stacks so sibling working-list entries never share
    mutable state.
    """

    __slots__ = ("frames",)

    def __init__(self, frames: Iterable[Tuple[str, int]] = ()):
        self.frames: Tuple[Tuple[str, int], ...] = tuple(frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LoopContextStack) and self.frames == other.frames

    def __hash__(self) -> int:
        return hash(self.frames)

    def __repr__(self) -> str:
        return f"LoopContextStack({list(self.frames)!r})"

    def top(self) -> Tuple[str, int]:
        if not self.frames:
            raise RuntimeError("loop context is empty")
        return self.frames[-1]

    def push(self, head: str) -> "LoopContextStack":
        return LoopContextStack(self.frames + ((head, 0),))

    def pop(self) -> Tuple[Tuple[str, int], "LoopContextStack"]:
        return self.top(), LoopContextStack(self.frames[:-1])

    def bump(self) -> "LoopContextStack":
        head, iteration = self.top()
        return LoopContextStack(self.frames[:-1] + ((head, iteration + 1),))


class _TgIndex:
    """Adjacency, loop membership and bounds of a TIPsGraph, for the hot loop."""

    def __init__(self, tg: TipsGraph):
        self.successors: Dict[str, List[TgEdge]] = {tip.id: [] for tip in tg.tips}
        for edge in tg.edges:
            self.successors[edge.src].append(edge)
        for edges in self.successors.values():
            edges.sort(key=lambda e: e.dst)
        self.mu = {tip.id: tip.mu for tip in tg.tips}
        self.loops_of = {tip.id: tg.loops_of(tip.id) for tip in tg.tips}
        self.bounds = {h: (m.min_iter, m.max_iter) for h, m in tg.loop_meta.items()}

    def advance(self, edge: TgEdge, context: LoopContextStack) -> Optional[LoopContextStack]:
        """Context after ``edge``; ``None`` when the trace must be dropped."""
        src_loops = self.loops_of[edge.src]
        dst_loops = self.loops_of[edge.dst]
        for head in reversed(src_loops):
            if head in dst_loops:
                continue
            (top, iteration), context = context.pop()
            if top != head:
                raise RuntimeError(f"loop context out of order: expected {head}, found {top}")
            if iteration < self.bounds[head][0]:
                return None
        if edge.dst not in self.bounds:
            return context
        if edge.dst not in src_loops:
            return context.push(edge.dst)
        top, iteration = context.top()
        if top != edge.dst:
            raise RuntimeError(f"return arc to {edge.dst} while inside {top}")
        if iteration == self.bounds[edge.dst][1]:
            return None
        return context.bump()


# ------------------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------------------
def enumerate_traces(tg: TipsGraph, config: AnalysisConfig) -> TraceSet:
    """
    Enumerate every worst-case timed trace of ``tg``.

    Raises :class:`TraceExplosionError` once more than ``config.max_traces``
    traces are pending or completed.
    """
    index = _TgIndex(tg)
    limit = config.max_traces
    completed: Dict[Elements, None] = {}

    start: Elements = ((START, 0),)
    worklist: List[Tuple[Elements, TgEdge, LoopContextStack]] = [
        (start, edge, LoopContextStack()) for edge in reversed(index.successors[START])
    ]
    while worklist:
        trace, edge, context = worklist.pop()
        context = index.advance(edge, context)
        if context is None:
            continue
        extended = trace + ((edge.dst, trace[-1][1] + edge.w),)
        if edge.dst == END:
            completed[extended] = None
            if len(completed) > limit:
                raise TraceExplosionError(f"{tg.task}: too many traces", limit)
            continue
        for following in reversed(index.successors[edge.dst]):
            worklist.append((extended, following, context))
        if len(worklist) > limit:
            raise TraceExplosionError(f"{tg.task}: too many traces under construction", limit)

    ordered = sorted(completed)
    traces = [
        Trace(
            id=f"tr{k}",
            elements=[TraceElement(tip=t, date=d, mu=index.mu[t]) for t, d in elements],
        )
        for k, elements in enumerate(ordered)
    ]
    d_max = max((t.end_date for t in traces), default=0)
    logger.debug("Enumerated %d trace(s) for %s, d_max=%d", len(traces), tg.task, d_max)
    return TraceSet(task=tg.task, access_time=config.access_time, d_max=d_max, traces=traces)


def dump_traces_text(ts: TraceSet) -> str:
    lines = []
    for n, trace in enumerate(ts.traces):
        body = " ".join(f"({e.tip},{e.date})" for e in trace.elements)
        lines.append(f"trace {n}: {body}")
    return "\n".join(lines) + "\n"


def trace_window_access_bound(ts: TraceSet, window: int, access_time: Optional[int] = None) -> int:
    """
    Most accesses any single trace can issue within ``window`` cycles.

    An access of element ``(t, d)`` occupies ``[d, d + mu * access_time)``;
    a placement ``[a, a + window)`` counts the ``mu`` of every element whose
    occupancy overlaps it. Finer than the segment-level bound because it
    never mixes accesses of different traces.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    access_time = access_time or ts.access_time
    best = 0
    for trace in ts.traces:
        accesses = [
            (e.date, e.date + e.mu * access_time, e.mu) for e in trace.elements if e.mu > 0
        ]
        for start, _, _ in accesses:
            for a in (start, start - window + 1):
                total = sum(mu for s, e, mu in accesses if s < a + window and a < e)
                best = max(best, total)
    return best


# ------------------------------------------------------------------------------
# Conservativeness oracle
# ------------------------------------------------------------------------------
class DateViolation(BaseTipsModel):
    trace: Optional[str] = None
    position: int = 0
    tip: str
    concrete: int
    abstract: Optional[int] = None

    def describe(self) -> str:
        if self.trace is None:
            return f"concrete path through {self.tip} has no matching trace"
        return (
            f"{self.trace}[{self.position}] {self.tip}: concrete date {self.concrete}"
            f" > worst-case date {self.abstract}"
        )


class ConservativenessReport(BaseTipsModel):
    task: str
    paths_checked: int
    violations: List[DateViolation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_conservativeness(
    cfg: TaskCFG,
    ts: TraceSet,
    max_paths: int = 100_000,
) -> ConservativenessReport:
    """
    Replay every concrete path of ``cfg`` against the enumerated traces.

    Concrete paths respect every loop's ``[min_iter, max_iter]`` bounds and are
    matched to the trace with the same TIP sequence; each concrete date must
    not exceed the trace's worst-case date.
    """
    from .unrolling import ConcreteWalker

    by_signature = {trace.signature: trace for trace in ts.traces}
    walker = ConcreteWalker(cfg, ts.access_time, max_paths=max_paths)
    violations: List[DateViolation] = []
    checked = 0
    for occurrences in walker.task_paths():
        checked += 1
        signature = tuple(tip for tip, _ in occurrences)
        trace = by_signature.get(signature)
        if trace is None:
            tip, date = occurrences[-1]
            violations.append(DateViolation(tip=" ".join(signature[1:-1]) or tip, concrete=date))
            continue
        violations.extend(_compare_dates(trace, occurrences))
    return ConservativenessReport(task=ts.task, paths_checked=checked, violations=violations)


def _compare_dates(trace: Trace, occurrences: Sequence[Tuple[str, int]]) -> List[DateViolation]:
    found = []
    for position, (element, (tip, concrete)) in enumerate(zip(trace.elements, occurrences)):
        if concrete > element.date:
            found.append(
                DateViolation(
                    trace=trace.id,
                    position=position,
                    tip=tip,
                    concrete=concrete,
                    abstract=element.date,
                )
            )
    return found
