"""
Timeline rendering shared by segment profiles and schedules.

Rows are horizontal bars over ``[0, horizon)``; each bar is a segment and is
marked by whether it may issue bus accesses.
"""

import logging
from pathlib import Path
from typing import List, Mapping, Optional, Union

import svgwrite

from .base_model import BaseTipsModel
from .pydantic_compat import Field
from .scheduler import Schedule
from .segments import SegmentSequence

logger = logging.getLogger(__name__)

ROW_HEIGHT = 24
LABEL_WIDTH = 120
PLOT_WIDTH = 800
MARGIN = 10


class TimelineBar(BaseTipsModel):
    start: int
    dur: int
    max_access: int = 0
    inflation: int = 0


class TimelineRow(BaseTipsModel):
    label: str
    bars: List[TimelineBar] = Field(default_factory=list)

    @property
    def end(self) -> int:
        return max((b.start + b.dur for b in self.bars), default=0)


def rows_from_profiles(profiles: Mapping[str, SegmentSequence]) -> List[TimelineRow]:
    return [
        TimelineRow(
            label=name,
            bars=[
                TimelineBar(start=s.start, dur=s.dur, max_access=s.max_access)
                for s in profiles[name].segments
            ],
        )
        for name in sorted(profiles)
    ]


def rows_from_schedule(sch: Schedule) -> List[TimelineRow]:
    return [
        TimelineRow(
            label=f"core {core}",
            bars=[
                TimelineBar(
                    start=s.start, dur=s.dur, max_access=s.max_access, inflation=s.inflation
                )
                for s in sch.cores[core]
            ],
        )
        for core in sorted(sch.cores)
    ]


def _horizon(rows: List[TimelineRow], horizon: Optional[int]) -> int:
    return max(horizon or 0, max((row.end for row in rows), default=0), 1)


def render_text_timeline(
    rows: List[TimelineRow], horizon: Optional[int] = None, width: int = 72
) -> str:
    """
    One line per row: ``#`` where a bar may access the bus, ``.`` elsewhere
    inside a bar, blank outside any bar.
    """
    horizon = _horizon(rows, horizon)
    label_width = max((len(row.label) for row in rows), default=0)
    lines = [f"{''.ljust(label_width)} |0{str(horizon).rjust(width - 1)}|"]
    for row in rows:
        cells = [" "] * width
        for bar in row.bars:
            first = bar.start * width // horizon
            last = max(first + 1, -(-(bar.start + bar.dur) * width // horizon))
            mark = "#" if bar.max_access > 0 else "."
            for k in range(first, min(last, width)):
                # Access marks win over idle marks sharing a cell.
                if cells[k] != "#":
                    cells[k] = mark
        lines.append(f"{row.label.ljust(label_width)} |{''.join(cells)}|")
    return "\n".join(lines) + "\n"


def _fill(max_access: int, peak: int) -> str:
    if max_access == 0:
        return "rgb(230,230,230)"
    shade = int(200 - 160 * max_access / max(peak, 1))
    return f"rgb(255,{shade},{shade})"


def render_svg_timeline(
    rows: List[TimelineRow],
    horizon: Optional[int] = None,
    path: Optional[Union[str, Path]] = None,
) -> str:
    """
    Draw ``rows`` as horizontal bars; redder bars may issue more accesses.

    Writes the drawing to ``path`` when given and returns the SVG text.
    """
    horizon = _horizon(rows, horizon)
    peak = max((bar.max_access for row in rows for bar in row.bars), default=0)
    width = LABEL_WIDTH + PLOT_WIDTH + 2 * MARGIN
    height = (len(rows) + 1) * ROW_HEIGHT + 2 * MARGIN
    drawing = svgwrite.Drawing(str(path or "timeline.svg"), profile="tiny", size=(width, height))
    scale = PLOT_WIDTH / horizon

    axis_y = MARGIN + len(rows) * ROW_HEIGHT + 4
    x0 = MARGIN + LABEL_WIDTH
    drawing.add(drawing.line((x0, axis_y), (x0 + PLOT_WIDTH, axis_y), stroke="black", stroke_width=1))
    drawing.add(drawing.text("0", insert=(x0, axis_y + 14), font_size="10px", font_family="Helvetica"))
    drawing.add(
        drawing.text(
            str(horizon),
            insert=(x0 + PLOT_WIDTH, axis_y + 14),
            font_size="10px",
            font_family="Helvetica",
            text_anchor="end",
        )
    )

    for n, row in enumerate(rows):
        y = MARGIN + n * ROW_HEIGHT
        drawing.add(
            drawing.text(
                row.label,
                insert=(MARGIN, y + ROW_HEIGHT * 0.65),
                font_size="11px",
                font_family="Helvetica",
            )
        )
        for bar in row.bars:
            drawing.add(
                drawing.rect(
                    insert=(x0 + bar.start * scale, y + 2),
                    size=(max(bar.dur * scale, 0.5), ROW_HEIGHT - 4),
                    fill=_fill(bar.max_access, peak),
                    stroke="black",
                    stroke_width=0.5,
                )
            )
            if bar.inflation:
                drawing.add(
                    drawing.rect(
                        insert=(x0 + (bar.start + bar.dur - bar.inflation) * scale, y + 2),
                        size=(max(bar.inflation * scale, 0.5), ROW_HEIGHT - 4),
                        fill="none",
                        stroke="red",
                        stroke_width=1,
                    )
                )

    if path is not None:
        drawing.save()
        logger.info("Timeline written to %s", path)
    return drawing.tostring()
