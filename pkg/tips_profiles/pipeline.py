"""
Stage-by-stage analysis of a task system and its JSON artifacts.

Every stage command reads either a task-system document or an artifact
written by an earlier stage and resumes from what the artifact already
holds. Artifacts are canonical JSON documents::

    {"kind": <stage>, "provenance": {...}, "system": {...}, "tasks": {...}}
"""

import asyncio
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .base_model import BaseTipsModel, canonical_json
from .cfg_model import AnalysisConfig, TaskCFG, TaskSystem, load_task_system, validate_system
from .enums import InterferenceMode, Stage
from .exceptions import DocumentParseError
from .pydantic_compat import (
    Field,
    PydanticValidationError,
    model_copy_compat,
    model_validate_compat,
)
from .scheduler import DEFAULT_MAX_ROUNDS, Schedule, ScheduleReport, build_schedule, verify_schedule
from .segments import ReplayReport, SegmentSequence, replay_traces, segments_for_task
from .tipsgraph import TipsGraph, WeightReport, build_tipsgraph, verify_property1
from .trace_enum import ConservativenessReport, TraceSet, check_conservativeness, enumerate_traces

logger = logging.getLogger(__name__)


def digest(payload: Any) -> str:
    """sha256 of the canonical JSON form of ``payload``."""
    if isinstance(payload, BaseTipsModel):
        payload = payload.to_dict()
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


# ------------------------------------------------------------------------------
# Artifacts
# ------------------------------------------------------------------------------
class TaskArtifacts(BaseTipsModel):
    task: str
    tipsgraph: Optional[TipsGraph] = None
    traces: Optional[TraceSet] = None
    segments: Optional[SegmentSequence] = None

    def reached(self) -> Optional[Stage]:
        for stage, value in (
            (Stage.SEGMENTS, self.segments),
            (Stage.TRACES, self.traces),
            (Stage.TIPSGRAPH, self.tipsgraph),
        ):
            if value is not None:
                return stage
        return None


class Provenance(BaseTipsModel):
    source_digest: str
    input_digest: str
    digest: str = ""
    config: AnalysisConfig


class PipelineArtifacts(BaseTipsModel):
    kind: Stage
    provenance: Provenance
    system: TaskSystem
    tasks: Dict[str, TaskArtifacts] = Field(default_factory=dict)
    schedule: Optional[Schedule] = None

    def content_digest(self) -> str:
        payload = self.to_dict()
        payload.pop("provenance")
        return digest(payload)

    def profiles(self) -> Dict[str, SegmentSequence]:
        return {
            name: artifacts.segments
            for name, artifacts in sorted(self.tasks.items())
            if artifacts.segments is not None
        }


def load_input(source: Union[str, Path, Mapping]) -> Tuple[TaskSystem, Optional[PipelineArtifacts], str]:
    """
    Read a task-system document or a stage artifact.

    Returns the task system, the artifact (``None`` for a plain document)
    and the digest of what was read.
    """
    if isinstance(source, Mapping):
        data: Any = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DocumentParseError(f"cannot read {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DocumentParseError(f"malformed document {source}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise DocumentParseError("document root must be an object")

    if "kind" not in data:
        system = load_task_system(data)
        return system, None, digest(system)
    try:
        artifacts = model_validate_compat(PipelineArtifacts, data)
    except PydanticValidationError as exc:
        raise DocumentParseError(f"artifact does not match the artifact format: {exc}") from exc
    validate_system(artifacts.system)
    if artifacts.provenance.digest and artifacts.provenance.digest != artifacts.content_digest():
        raise DocumentParseError(f"artifact digest mismatch for stage {artifacts.kind}")
    return artifacts.system, artifacts, artifacts.provenance.digest


# ------------------------------------------------------------------------------
# Analysis
# ------------------------------------------------------------------------------
def analyze_task(
    cfg: TaskCFG,
    config: AnalysisConfig,
    until: Stage = Stage.SEGMENTS,
    previous: Optional[TaskArtifacts] = None,
) -> TaskArtifacts:
    """
    Run tipsgraph, traces and segments for one task, stopping after ``until``.

    Stages already present in ``previous`` are reused rather than recomputed.
    """
    until = Stage(until)
    tg = previous.tipsgraph if previous else None
    ts = previous.traces if previous else None
    seq = previous.segments if previous else None

    if tg is None:
        tg = build_tipsgraph(cfg, config)
    if until.rank >= Stage.TRACES.rank and ts is None:
        ts = enumerate_traces(tg, config)
    if until.rank >= Stage.SEGMENTS.rank and seq is None:
        seq = segments_for_task(ts, config)

    return TaskArtifacts(
        task=cfg.name,
        tipsgraph=tg,
        traces=ts if until.rank >= Stage.TRACES.rank else None,
        segments=seq if until.rank >= Stage.SEGMENTS.rank else None,
    )


async def analyze_system(
    system: TaskSystem,
    until: Stage = Stage.SEGMENTS,
    jobs: int = 1,
    previous: Optional[Mapping[str, TaskArtifacts]] = None,
    config: Optional[AnalysisConfig] = None,
) -> Dict[str, TaskArtifacts]:
    """
    Analyze every task concurrently, at most ``jobs`` at a time.

    Results are keyed and ordered by task name whatever the completion order.
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    config = config or system.config
    task_stage = Stage.SEGMENTS if Stage(until) == Stage.SCHEDULE else Stage(until)
    previous = previous or {}
    semaphore = asyncio.Semaphore(jobs)

    async def run_one(cfg: TaskCFG) -> TaskArtifacts:
        async with semaphore:
            result = await asyncio.to_thread(
                analyze_task, cfg, config, task_stage, previous.get(cfg.name)
            )
        logger.info("Analyzed %s up to %s", cfg.name, task_stage)
        return result

    ordered = sorted(system.tasks, key=lambda t: t.name)
    results = await asyncio.gather(*(run_one(cfg) for cfg in ordered))
    return {artifacts.task: artifacts for artifacts in results}


async def run_pipeline(
    source: Union[str, Path, Mapping],
    until: Stage,
    jobs: int = 1,
    overrides: Optional[Dict[str, Any]] = None,
    mode: InterferenceMode = InterferenceMode.INFLATE,
    budget: Optional[int] = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> PipelineArtifacts:
    """
    Load ``source`` and run the pipeline up to ``until``.

    ``overrides`` replace fields of the document's :class:`AnalysisConfig`;
    an artifact produced under another configuration is recomputed from
    scratch.
    """
    until = Stage(until)
    system, earlier, input_digest = load_input(source)
    config = earlier.provenance.config if earlier else system.config
    if overrides:
        try:
            config = AnalysisConfig.from_dict({**config.to_dict(), **overrides})
        except PydanticValidationError as exc:
            raise DocumentParseError(f"invalid configuration override {overrides}: {exc}") from exc

    previous: Optional[Dict[str, TaskArtifacts]] = None
    if earlier is not None:
        if earlier.provenance.config == config:
            previous = dict(earlier.tasks)
        else:
            logger.info("Configuration changed since stage %s; recomputing", earlier.kind)

    tasks = await analyze_system(system, until, jobs, previous=previous, config=config)
    schedule = None
    if until == Stage.SCHEDULE:
        profiles = {name: artifacts.segments for name, artifacts in tasks.items()}
        schedule = build_schedule(
            profiles,
            system.placements,
            config,
            max_rounds=max_rounds,
            mode=mode,
            budget=budget,
        )

    source_digest = earlier.provenance.source_digest if earlier else input_digest
    artifacts = PipelineArtifacts(
        kind=until,
        provenance=Provenance(
            source_digest=source_digest, input_digest=input_digest, config=config
        ),
        system=system,
        tasks=tasks,
        schedule=schedule,
    )
    provenance = artifacts.provenance.to_dict()
    provenance["digest"] = artifacts.content_digest()
    return model_copy_compat(artifacts, update={"provenance": Provenance.from_dict(provenance)})


# ------------------------------------------------------------------------------
# Verification
# ------------------------------------------------------------------------------
class TaskVerification(BaseTipsModel):
    task: str
    weights: WeightReport
    conservativeness: ConservativenessReport
    replay: ReplayReport

    @property
    def ok(self) -> bool:
        return self.weights.ok and self.conservativeness.ok and self.replay.ok


class VerificationReport(BaseTipsModel):
    tasks: List[TaskVerification] = Field(default_factory=list)
    schedule: Optional[ScheduleReport] = None

    @property
    def ok(self) -> bool:
        schedule_ok = self.schedule is None or self.schedule.ok
        return schedule_ok and all(task.ok for task in self.tasks)

    def problems(self) -> List[str]:
        found: List[str] = []
        for task in self.tasks:
            found += [f"{task.task}: {v.describe()}" for v in task.weights.violations]
            found += [f"{task.task}: {v.describe()}" for v in task.conservativeness.violations]
            found += [f"{task.task}: {p}" for p in task.replay.partition_problems]
            found += [f"{task.task}: {v.describe()}" for v in task.replay.violations]
        if self.schedule is not None:
            found += [v.describe() for v in self.schedule.violations]
        return found


def verify_artifacts(
    artifacts: PipelineArtifacts, unroll_limit: int = 3, max_paths: int = 100_000
) -> VerificationReport:
    """Run every oracle over a schedule-stage artifact."""
    checked: List[TaskVerification] = []
    for name, task_artifacts in sorted(artifacts.tasks.items()):
        cfg = artifacts.system.task(name)
        checked.append(
            TaskVerification(
                task=name,
                weights=verify_property1(
                    cfg, task_artifacts.tipsgraph, unroll_limit=unroll_limit, max_paths=max_paths
                ),
                conservativeness=check_conservativeness(
                    cfg, task_artifacts.traces, max_paths=max_paths
                ),
                replay=replay_traces(task_artifacts.segments, task_artifacts.traces),
            )
        )
    schedule = verify_schedule(artifacts.schedule) if artifacts.schedule is not None else None
    return VerificationReport(tasks=checked, schedule=schedule)
