"""
Command-line front end.

    tips-profiles <command> <input> [--out PATH] [--jobs N] [--delta D]
                  [--max-traces N] [--mode inflate|budget] [--budget CYCLES]
                  [--render text|svg] [--svg PATH] [--windows W,...]
                  [--unroll-limit N]

``<input>`` is a task-system document or an artifact written by an earlier
stage command. Log verbosity comes from ``TIPS_LOG_LEVEL``.
"""

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .base_model import canonical_json
from .enums import InterferenceMode, RenderFormat, Stage
from .exceptions import (
    DocumentParseError,
    HorizonMismatchError,
    NegativeGapError,
    NonConvergenceError,
    PlacementError,
    TaskValidationError,
    TraceExplosionError,
    UnreachableTipError,
)
from .pipeline import PipelineArtifacts, run_pipeline, verify_artifacts
from .rendering import (
    render_svg_timeline,
    render_text_timeline,
    rows_from_profiles,
    rows_from_schedule,
)
from .scheduler import export_schedule
from .segments import access_curve, export_profile
from .tipsgraph import export_tipsgraph_text
from .trace_enum import dump_traces_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_EXPLOSION = 4
EXIT_NON_CONVERGENCE = 5
EXIT_VERIFICATION = 6
EXIT_BUDGET_OVERRUN = 7

COMMANDS = ("tipsgraph", "traces", "segments", "schedule", "report", "verify")

# Most specific first; every class is a TipsError.
_EXIT_CODES = (
    (DocumentParseError, EXIT_PARSE),
    (TraceExplosionError, EXIT_EXPLOSION),
    (NonConvergenceError, EXIT_NON_CONVERGENCE),
    (TaskValidationError, EXIT_VALIDATION),
    (UnreachableTipError, EXIT_VALIDATION),
    (PlacementError, EXIT_VALIDATION),
    (NegativeGapError, EXIT_VALIDATION),
    (HorizonMismatchError, EXIT_VALIDATION),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tips-profiles",
        description="Bus-access profiles and interference-aware schedules from annotated CFGs.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", help="Task-system document or stage artifact (JSON).")
    parser.add_argument("--out", help="Write the output here instead of stdout.")
    parser.add_argument("--jobs", type=int, default=1, help="Tasks analyzed in parallel.")
    parser.add_argument("--delta", type=int, help="Override the fusion threshold.")
    parser.add_argument("--max-traces", type=int, help="Override the trace explosion limit.")
    parser.add_argument(
        "--mode",
        choices=[m.value for m in InterferenceMode],
        default=InterferenceMode.INFLATE.value,
    )
    parser.add_argument("--budget", type=int, help="Interference budget per task (budget mode).")
    parser.add_argument("--max-rounds", type=int, default=100, help="Fixed-point round cap.")
    parser.add_argument(
        "--render",
        choices=[r.value for r in RenderFormat],
        help="Print a timeline (text) or write one (svg) for segments/schedule.",
    )
    parser.add_argument("--svg", default="timeline.svg", help="Target of --render svg.")
    parser.add_argument(
        "--windows",
        help="Comma-separated window sizes; adds worst-case access bounds to each profile.",
    )
    parser.add_argument(
        "--unroll-limit", type=int, default=3, help="Loop unrolling bound of the verify oracles."
    )
    return parser


def configure_logging() -> None:
    level_name = (os.environ.get("TIPS_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("Wrote %s", out)
    else:
        sys.stdout.write(text)


def _overrides(args: argparse.Namespace) -> Dict[str, int]:
    overrides = {}
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.max_traces is not None:
        overrides["max_traces"] = args.max_traces
    return overrides


def parse_windows(raw: Optional[str]) -> List[int]:
    """``"10,100"`` -> ``[10, 100]``; raises ``ValueError`` on anything but positive integers."""
    if not raw:
        return []
    windows = [int(part) for part in raw.split(",") if part.strip()]
    if not windows or min(windows) <= 0:
        raise ValueError(f"window sizes must be positive integers, got {raw!r}")
    return windows


def export_profiles(artifacts: PipelineArtifacts, windows: Sequence[int] = ()) -> Dict[str, Dict]:
    """Profile export per task, with an access curve when ``windows`` are given."""
    exported: Dict[str, Dict] = {}
    for name, seq in artifacts.profiles().items():
        profile = export_profile(seq)
        if windows:
            profile["access_curve"] = [
                {"window": w, "bound": bound} for w, bound in access_curve(seq, windows)
            ]
        exported[name] = profile
    return exported


def _render(artifacts: PipelineArtifacts, fmt: Optional[str], svg_path: str) -> Optional[str]:
    if fmt is None:
        return None
    if artifacts.schedule is not None:
        rows = rows_from_schedule(artifacts.schedule)
        horizon = artifacts.schedule.makespan
    else:
        profiles = artifacts.profiles()
        rows = rows_from_profiles(profiles)
        horizon = max((p.d_max for p in profiles.values()), default=0)
    if RenderFormat(fmt) == RenderFormat.SVG:
        render_svg_timeline(rows, horizon, path=svg_path)
        return None
    return render_text_timeline(rows, horizon)


def format_report(artifacts: PipelineArtifacts, windows: Sequence[int] = ()) -> str:
    parts: List[str] = []
    for name, task in sorted(artifacts.tasks.items()):
        parts.append(f"== {name} ==")
        if task.tipsgraph is not None:
            parts.append(export_tipsgraph_text(task.tipsgraph).rstrip("\n"))
        if task.traces is not None:
            parts.append(f"d_max {task.traces.d_max}")
            parts.append(dump_traces_text(task.traces).rstrip("\n"))
        if task.segments is not None:
            parts += [
                f"segment {s.start} {s.dur} {s.max_access}" for s in task.segments.segments
            ]
            parts += [
                f"window {w} bound {bound}" for w, bound in access_curve(task.segments, windows)
            ]
    if artifacts.schedule is not None:
        sch = artifacts.schedule
        parts.append("== schedule ==")
        parts.append(
            f"mode {sch.mode} makespan {sch.makespan} interference {sch.interference_total}"
            f" rounds {sch.rounds}"
        )
        for outcome in sch.tasks:
            parts.append(
                f"task {outcome.task} core {outcome.core} start {outcome.start}"
                f" finish {outcome.finish} interference {outcome.interference}"
                + (" OVERRUN" if outcome.overrun else "")
            )
        parts.append(render_text_timeline(rows_from_schedule(sch), sch.makespan).rstrip("\n"))
    return "\n".join(parts) + "\n"


async def _run(args: argparse.Namespace) -> int:
    until = Stage.SCHEDULE if args.command in ("report", "verify") else Stage(args.command)
    artifacts = await run_pipeline(
        args.input,
        until,
        jobs=args.jobs,
        overrides=_overrides(args),
        mode=InterferenceMode(args.mode),
        budget=args.budget,
        max_rounds=args.max_rounds,
    )
    overrun = artifacts.schedule is not None and bool(artifacts.schedule.overruns)

    if args.command == "verify":
        report = verify_artifacts(artifacts, unroll_limit=args.unroll_limit)
        if args.out:
            _emit(report.to_json() + "\n", args.out)
        for problem in report.problems():
            sys.stderr.write(problem + "\n")
        if not report.ok:
            return EXIT_VERIFICATION
    elif args.command == "report":
        _emit(format_report(artifacts, args.windows), args.out)
    else:
        timeline = _render(artifacts, args.render, args.svg)
        if timeline is not None:
            sys.stdout.write(timeline)
        if args.out or timeline is None:
            payload = artifacts.to_dict()
            if artifacts.profiles():
                payload["profiles"] = export_profiles(artifacts, args.windows)
            if artifacts.schedule is not None:
                payload["export"] = export_schedule(artifacts.schedule)
            _emit(canonical_json(payload) + "\n", args.out)

    if overrun:
        logger.warning("Budget overrun: %s", ", ".join(artifacts.schedule.overruns))
        return EXIT_BUDGET_OVERRUN
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one command and return its exit status."""
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        sys.stderr.write("--jobs must be at least 1\n")
        return EXIT_PARSE
    if args.mode == InterferenceMode.BUDGET.value and args.budget is None:
        sys.stderr.write("--mode budget needs --budget\n")
        return EXIT_PARSE
    try:
        args.windows = parse_windows(args.windows)
    except ValueError as exc:
        sys.stderr.write(f"--windows: {exc}\n")
        return EXIT_PARSE
    try:
        return asyncio.run(_run(args))
    except tuple(cls for cls, _ in _EXIT_CODES) as exc:
        code = next(c for cls, c in _EXIT_CODES if isinstance(exc, cls))
        logger.error("%s", exc)
        sys.stderr.write(f"error: {exc}\n")
        return code


def main() -> None:
    configure_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
