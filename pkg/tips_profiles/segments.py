"""
Temporal segment profiles of a task.

A segment is a half-open window ``[start, start + dur)`` with, per trace, a
worst-case number of bus accesses issued inside it. A task profile is a
partition of ``[0, d_max)`` into such segments, obtained by segmenting every
trace, intersecting the segmentations and fusing short segments.
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple

from .base_model import BaseTipsModel
from .cfg_model import AnalysisConfig
from .exceptions import HorizonMismatchError, NegativeGapError
from .pydantic_compat import Field
from .trace_enum import Trace, TraceSet

logger = logging.getLogger(__name__)

AccessMap = Dict[str, int]


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
class Segment(BaseTipsModel):
    start: int = Field(..., ge=0)
    dur: int = Field(..., gt=0)
    mu: AccessMap

    @property
    def end(self) -> int:
        return self.start + self.dur

    @property
    def max_access(self) -> int:
        return max(self.mu.values(), default=0)

    def overlaps(self, start: int, end: int) -> bool:
        return self.start < end and start < self.end


class SegmentSequence(BaseTipsModel):
    task: str = ""
    d_max: int = Field(..., ge=0)
    segments: List[Segment]

    def boundaries(self) -> List[int]:
        points = {0, self.d_max}
        for seg in self.segments:
            points.update((seg.start, seg.end))
        return sorted(points)

    def totals(self) -> AccessMap:
        """Sum of each trace's access counts over the whole sequence."""
        totals: AccessMap = {}
        for seg in self.segments:
            for key, count in seg.mu.items():
                totals[key] = totals.get(key, 0) + count
        return dict(sorted(totals.items()))


def _segment(start: int, dur: int, mu: AccessMap) -> Segment:
    return Segment(start=start, dur=dur, mu=dict(sorted(mu.items())))


def merge_maps(a: AccessMap, b: AccessMap) -> AccessMap:
    """Key-wise union; a key present on both sides keeps the larger count."""
    merged = dict(a)
    for key, count in b.items():
        merged[key] = max(merged.get(key, 0), count)
    return merged


# ------------------------------------------------------------------------------
# Intersection
# ------------------------------------------------------------------------------
def segment_intersect(a: Segment, b: Segment) -> Optional[Segment]:
    """Common window of ``a`` and ``b`` carrying both access maps, or ``None``."""
    if a.start >= b.end or b.start >= a.end:
        return None
    mu = merge_maps(a.mu, b.mu)
    if a.start >= b.start and b.end >= a.end:
        return _segment(a.start, a.dur, mu)
    if a.start >= b.start:
        return _segment(a.start, b.end - a.start, mu)
    if b.end <= a.end:
        return _segment(b.start, b.dur, mu)
    return _segment(b.start, a.end - b.start, mu)


def sequence_intersection(p: SegmentSequence, q: SegmentSequence) -> SegmentSequence:
    """
    Common refinement of two partitions of ``[0, d_max)``.

    Forward scan over both sequences: the current pair is intersected, then
    whichever segment ends first is consumed (both when they end together).
    """
    if p.d_max != q.d_max:
        raise HorizonMismatchError(f"cannot intersect horizons {p.d_max} and {q.d_max}")
    out: List[Segment] = []
    i = j = 0
    while i < len(p.segments) and j < len(q.segments):
        a, b = p.segments[i], q.segments[j]
        common = segment_intersect(a, b)
        if common is not None:
            out.append(common)
        if a.end <= b.end:
            i += 1
        if b.end <= a.end:
            j += 1
    return SegmentSequence(task=p.task or q.task, d_max=p.d_max, segments=out)


# ------------------------------------------------------------------------------
# Per-trace segmentation and fusion
# ------------------------------------------------------------------------------
def segments_of_trace(tr: Trace, d_max: int, config: AnalysisConfig, task: str = "") -> SegmentSequence:
    """
    Alternate access and gap segments along one trace.

    Element ``k`` issues its accesses in ``[d_k, d_k + mu_k * access_time)``;
    the gap up to ``d_{k+1}`` carries no access. The last gap reaches
    ``d_max``. Zero-duration segments are not kept.
    """
    if d_max < tr.end_date:
        raise ValueError(f"{tr.id}: d_max {d_max} before trace end {tr.end_date}")
    segments: List[Segment] = []

    def emit(start: int, dur: int, count: int) -> None:
        if dur > 0:
            segments.append(_segment(start, dur, {tr.id: count}))

    emit(0, tr.elements[0].date, 0)
    elements = tr.elements
    for k in range(len(elements) - 1):
        current, following = elements[k], elements[k + 1]
        access_end = current.date + current.mu * config.access_time
        if following.date < access_end:
            raise NegativeGapError(
                f"{tr.id}: {following.tip} at {following.date} inside access window of"
                f" {current.tip} ending at {access_end}"
            )
        emit(current.date, access_end - current.date, current.mu)
        emit(access_end, following.date - access_end, 0)
    last = elements[-1]
    emit(last.date, d_max - last.date, 0)
    return SegmentSequence(task=task, d_max=d_max, segments=segments)


def fusion(s: SegmentSequence, delta: int) -> SegmentSequence:
    """
    Greedy left-to-right fusion of short segments.

    Zero-access segments at least ``delta`` long are kept as they are; any
    other run of consecutive segments is merged until it reaches ``delta``
    cycles or runs into a kept segment. Merged access maps are summed per
    trace.
    """

    def preserved(seg: Segment) -> bool:
        return seg.max_access == 0 and seg.dur >= delta

    out: List[Segment] = []
    run: List[Segment] = []

    def flush() -> None:
        if not run:
            return
        mu: AccessMap = {}
        for seg in run:
            for key, count in seg.mu.items():
                mu[key] = mu.get(key, 0) + count
        out.append(_segment(run[0].start, run[-1].end - run[0].start, mu))
        run.clear()

    for seg in s.segments:
        if preserved(seg):
            flush()
            out.append(seg)
            continue
        run.append(seg)
        if run[-1].end - run[0].start >= delta:
            flush()
    flush()
    return SegmentSequence(task=s.task, d_max=s.d_max, segments=out)


def segments_for_task(ts: TraceSet, config: AnalysisConfig) -> SegmentSequence:
    """Profile of a task: intersect every trace's segmentation, then fuse with ``config.delta``."""
    if not ts.traces:
        raise ValueError(f"{ts.task}: no traces to segment")
    first, *rest = ts.traces
    profile = segments_of_trace(first, ts.d_max, config, task=ts.task)
    for trace in rest:
        profile = sequence_intersection(profile, segments_of_trace(trace, ts.d_max, config))
    fused = fusion(profile, config.delta)
    logger.debug(
        "Segments for %s: %d refined, %d after fusion (delta=%d)",
        ts.task, len(profile.segments), len(fused.segments), config.delta,
    )
    return fused


# ------------------------------------------------------------------------------
# Window bounds
# ------------------------------------------------------------------------------
def window_access_bound(s: SegmentSequence, window: int) -> int:
    """
    Accesses any ``window``-cycle interval of the profile can contain.

    Each segment overlapping a placement ``[a, a + window)`` contributes its
    ``max_access``. The overlap set only grows when the right edge reaches a
    segment start, so those placements (plus both ends of the horizon) are
    the only ones evaluated.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if window > s.d_max:
        logger.warning("%s: window %d clamped to d_max %d", s.task, window, s.d_max)
        window = s.d_max
    if not s.segments:
        return 0
    latest = s.d_max - window
    candidates = {0, latest}
    for seg in s.segments:
        candidates.add(min(max(seg.start - window + 1, 0), latest))
        candidates.add(min(seg.start, latest))
    best = 0
    for a in sorted(candidates):
        total = sum(seg.max_access for seg in s.segments if seg.overlaps(a, a + window))
        best = max(best, total)
    return best


def access_curve(s: SegmentSequence, windows: Iterable[int]) -> List[Tuple[int, int]]:
    """Staircase arrival curve: ``(window, bound)`` for each requested window size."""
    return [(w, window_access_bound(s, w)) for w in sorted(set(windows))]


# ------------------------------------------------------------------------------
# Checks and export
# ------------------------------------------------------------------------------
def check_partition(seq: SegmentSequence) -> List[str]:
    problems: List[str] = []
    if not seq.segments:
        if seq.d_max > 0:
            problems.append("empty sequence over a non-empty horizon")
        return problems
    if seq.segments[0].start != 0:
        problems.append(f"first segment starts at {seq.segments[0].start}")
    for prev, seg in zip(seq.segments, seq.segments[1:]):
        if seg.start < prev.end:
            problems.append(f"segment at {seg.start} overlaps segment ending at {prev.end}")
    if seq.segments[-1].end != seq.d_max:
        problems.append(f"last segment ends at {seq.segments[-1].end}, not {seq.d_max}")
    for seg in seq.segments:
        if not seg.mu:
            problems.append(f"segment at {seg.start} has no access map")
    return problems


class ReplayViolation(BaseTipsModel):
    trace: str
    start: int
    end: int
    claimed: int
    observed: int

    def describe(self) -> str:
        return (
            f"{self.trace} issues {self.observed} access(es) in [{self.start}, {self.end})"
            f" but the segment claims {self.claimed}"
        )


class ReplayReport(BaseTipsModel):
    task: str
    partition_problems: List[str] = Field(default_factory=list)
    violations: List[ReplayViolation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.partition_problems and not self.violations


def replay_traces(
    seq: SegmentSequence, ts: TraceSet, access_time: Optional[int] = None
) -> ReplayReport:
    """
    Replay every trace against a profile.

    For each segment the access windows of a trace overlapping it must not
    carry more accesses than the segment's count for that trace.
    """
    access_time = access_time or ts.access_time
    violations: List[ReplayViolation] = []
    for trace in ts.traces:
        windows = [
            (e.date, e.date + e.mu * access_time, e.mu) for e in trace.elements if e.mu > 0
        ]
        for seg in seq.segments:
            observed = sum(mu for start, end, mu in windows if seg.overlaps(start, end))
            claimed = seg.mu.get(trace.id, 0)
            if observed > claimed:
                violations.append(
                    ReplayViolation(
                        trace=trace.id,
                        start=seg.start,
                        end=seg.end,
                        claimed=claimed,
                        observed=observed,
                    )
                )
    return ReplayReport(
        task=seq.task, partition_problems=check_partition(seq), violations=violations
    )


def export_profile(seq: SegmentSequence) -> Dict:
    return {
        "task": seq.task,
        "d_max": seq.d_max,
        "segments": [
            {
                "start": seg.start,
                "dur": seg.dur,
                "mu": dict(seg.mu),
                "max_access": seg.max_access,
            }
            for seg in seq.segments
        ],
    }


def profile_from_export(data: Dict) -> SegmentSequence:
    return SegmentSequence(
        task=data["task"],
        d_max=data["d_max"],
        segments=[
            _segment(item["start"], item["dur"], item["mu"]) for item in data["segments"]
        ],
    )
