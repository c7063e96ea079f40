# tips_profiles/__init__.py
from .base_model import BaseTipsModel
from .cfg_model import (
    AnalysisConfig,
    BasicBlock,
    Instruction,
    LoopInfo,
    Placement,
    TaskCFG,
    TaskSystem,
    dump_task_system,
    load_task_system,
    load_task_system_file,
)
from .enums import InterferenceMode, MemClass, RenderFormat, Stage, TipKind
from .exceptions import (
    DocumentParseError,
    HorizonMismatchError,
    NegativeGapError,
    NonConvergenceError,
    PlacementError,
    TaskValidationError,
    TipsError,
    TraceExplosionError,
    UnreachableTipError,
)
from .pipeline import PipelineArtifacts, TaskArtifacts, analyze_system, analyze_task, digest
from .scheduler import (
    Schedule,
    ScheduledSegment,
    TaskOutcome,
    build_schedule,
    export_schedule,
    verify_schedule,
)
from .segments import (
    Segment,
    SegmentSequence,
    access_curve,
    check_partition,
    export_profile,
    fusion,
    replay_traces,
    segment_intersect,
    segments_for_task,
    segments_of_trace,
    sequence_intersection,
    window_access_bound,
)
from .tipsgraph import (
    TgEdge,
    Tip,
    TipsGraph,
    build_tipsgraph,
    export_tipsgraph_text,
    extract_tips,
    verify_property1,
)
from .trace_enum import (
    LoopContextStack,
    Trace,
    TraceElement,
    TraceSet,
    check_conservativeness,
    dump_traces_text,
    enumerate_traces,
    trace_window_access_bound,
)

__all__ = [
    "BaseTipsModel",
    "AnalysisConfig",
    "BasicBlock",
    "Instruction",
    "LoopInfo",
    "Placement",
    "TaskCFG",
    "TaskSystem",
    "dump_task_system",
    "load_task_system",
    "load_task_system_file",
    "InterferenceMode",
    "MemClass",
    "RenderFormat",
    "Stage",
    "TipKind",
    "DocumentParseError",
    "HorizonMismatchError",
    "NegativeGapError",
    "NonConvergenceError",
    "PlacementError",
    "TaskValidationError",
    "TipsError",
    "TraceExplosionError",
    "UnreachableTipError",
    "PipelineArtifacts",
    "TaskArtifacts",
    "analyze_system",
    "analyze_task",
    "digest",
    "Schedule",
    "ScheduledSegment",
    "TaskOutcome",
    "build_schedule",
    "export_schedule",
    "verify_schedule",
    "Segment",
    "SegmentSequence",
    "access_curve",
    "check_partition",
    "export_profile",
    "fusion",
    "replay_traces",
    "segment_intersect",
    "segments_for_task",
    "segments_of_trace",
    "sequence_intersection",
    "window_access_bound",
    "TgEdge",
    "Tip",
    "TipsGraph",
    "build_tipsgraph",
    "export_tipsgraph_text",
    "extract_tips",
    "verify_property1",
    "LoopContextStack",
    "Trace",
    "TraceElement",
    "TraceSet",
    "check_conservativeness",
    "dump_traces_text",
    "enumerate_traces",
    "trace_window_access_bound",
]
