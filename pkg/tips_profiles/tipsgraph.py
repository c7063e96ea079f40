"""
TIP extraction and TIPsGraph construction.

A TIP is a point of the task where the shared bus may be used (an
instruction whose cache classification is not Always-Hit), plus the fictive
start/end points and one loop-head point per loop that contains accesses.
Edges carry the longest cost of any TIP-free concrete path between two
points: the source's own access latency, then instruction WCETs up to and
including the destination instruction.
"""

import logging
from typing import Dict, List, Optional, Set, Tuple, Union

import networkx as nx

from .base_model import BaseTipsModel
from .cfg_model import (
    LOOP_HEAD_PREFIX,
    AnalysisConfig,
    CfgIndex,
    Edge,
    Instruction,
    TaskCFG,
    block_wcet,
)
from .enums import TipKind
from .exceptions import UnreachableTipError
from .pydantic_compat import Field

logger = logging.getLogger(__name__)

START = "start"
END = "end"

# Loop-walk outcome for "took a back edge of the loop being measured".
_BACK = "<back>"
Outcome = Union[str, Edge]


def head_id(header: str) -> str:
    return f"{LOOP_HEAD_PREFIX}{header}"


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
class Tip(BaseTipsModel):
    id: str
    kind: TipKind
    block: Optional[str] = None
    instr: Optional[str] = None
    mu: int = Field(0, ge=0)


class TgEdge(BaseTipsModel):
    src: str
    dst: str
    w: int = Field(..., ge=0)


class LoopMeta(BaseTipsModel):
    header: str
    min_iter: int
    max_iter: int
    depth: int
    parent: Optional[str] = None
    tips: List[str]
    entry_edges: List[Edge] = Field(default_factory=list)
    return_edges: List[Edge] = Field(default_factory=list)
    exit_edges: List[Edge] = Field(default_factory=list)


class TipsGraph(BaseTipsModel):
    task: str
    access_time: int
    tips: List[Tip]
    edges: List[TgEdge]
    loop_meta: Dict[str, LoopMeta] = Field(default_factory=dict)

    def tip(self, tip_id: str) -> Tip:
        for tip in self.tips:
            if tip.id == tip_id:
                return tip
        raise KeyError(tip_id)

    def successors(self, tip_id: str) -> List[TgEdge]:
        return [edge for edge in self.edges if edge.src == tip_id]

    def edge(self, src: str, dst: str) -> Optional[TgEdge]:
        for edge in self.edges:
            if edge.src == src and edge.dst == dst:
                return edge
        return None

    def loops_of(self, tip_id: str) -> List[str]:
        """LoopHead ids of the loops containing ``tip_id``, outermost first."""
        around = [h for h, meta in self.loop_meta.items() if tip_id in meta.tips]
        return sorted(around, key=lambda h: (self.loop_meta[h].depth, h))

    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(tip.id for tip in self.tips)
        for edge in self.edges:
            graph.add_edge(edge.src, edge.dst, w=edge.w)
        return graph


# ------------------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------------------
def extract_tips(cfg: TaskCFG) -> List[Tuple[str, Instruction]]:
    """Instructions not provably Always-Hit, block by block in program order."""
    return [
        (block.id, instr)
        for block in cfg.blocks
        for instr in block.instructions
        if instr.is_tip
    ]


def build_tipsgraph(cfg: TaskCFG, config: AnalysisConfig) -> TipsGraph:
    index = CfgIndex(cfg)
    tip_loops = {h for h in index.loops if index.loop_has_tips(h)}
    walker = RegionWalker(index, tip_loops)

    tips: List[Tip] = [Tip(id=START, kind=TipKind.START)]
    for block in cfg.blocks:
        if block.id in tip_loops:
            tips.append(Tip(id=head_id(block.id), kind=TipKind.LOOP_HEAD, block=block.id))
        for instr in block.instructions:
            if instr.is_tip:
                tips.append(
                    Tip(
                        id=instr.id,
                        kind=TipKind.ACCESS,
                        block=block.id,
                        instr=instr.id,
                        mu=instr.max_accesses,
                    )
                )
    tips.append(Tip(id=END, kind=TipKind.END))

    weights: Dict[Tuple[str, str], int] = {}
    for tip in tips:
        if tip.kind == TipKind.END:
            continue
        latency = tip.mu * config.access_time
        for dst, cost in walker.from_tip(tip).items():
            weights[(tip.id, dst)] = latency + cost

    edges = [TgEdge(src=s, dst=d, w=w) for (s, d), w in sorted(weights.items())]
    loop_meta = _loop_meta(index, tip_loops, tips, edges)
    tg = TipsGraph(
        task=cfg.name,
        access_time=config.access_time,
        tips=tips,
        edges=edges,
        loop_meta=loop_meta,
    )
    _check_reachability(tg)
    logger.debug(
        "TIPsGraph %s: %d tips, %d edges, %d loop heads",
        cfg.name, len(tips), len(edges), len(loop_meta),
    )
    return tg


def export_tipsgraph_text(tg: TipsGraph) -> str:
    lines = [f"tip {tip.id} {tip.kind} {tip.mu}" for tip in tg.tips]
    lines += [f"edge {e.src} {e.dst} {e.w}" for e in tg.edges]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------------------
# Longest TIP-free paths
# ------------------------------------------------------------------------------
def _merge(into: Dict, key, cost: int) -> None:
    if cost > into.get(key, -1):
        into[key] = cost


class RegionWalker:
    """
    Longest-path search over TIP-free regions of one CFG.

    Every region between two TIPs is a DAG once loops without accesses are
    collapsed: such a loop costs ``max_iter`` times its longest iteration plus
    its longest header-to-exit path. Results are memoised per block.
    """

    def __init__(self, index: CfgIndex, tip_loops: Set[str]):
        self.index = index
        self.tip_loops = tip_loops
        self._entry_memo: Dict[str, Dict[str, int]] = {}
        self._inside_memo: Dict[Tuple[str, str], Dict[Outcome, int]] = {}

    def from_tip(self, tip: Tip) -> Dict[str, int]:
        if tip.kind == TipKind.START:
            return self.from_block_entry(self.index.task.entry)
        if tip.kind == TipKind.LOOP_HEAD:
            return self.from_position(tip.block, 0)
        instructions = self.index.blocks[tip.block].instructions
        position = next(k for k, i in enumerate(instructions) if i.id == tip.instr)
        return self.from_position(tip.block, position + 1)

    def from_block_entry(self, block: str) -> Dict[str, int]:
        if block in self._entry_memo:
            return self._entry_memo[block]
        if block in self.tip_loops:
            result = {head_id(block): 0}
        elif block in self.index.loops:
            result = self._through_loop(block)
        else:
            result = self.from_position(block, 0)
        self._entry_memo[block] = result
        return result

    def from_position(self, block: str, start: int) -> Dict[str, int]:
        cost = 0
        instructions = self.index.blocks[block].instructions
        for instr in instructions[start:]:
            cost += instr.wcet
            if instr.is_tip:
                return {instr.id: cost}
        if block == self.index.task.exit:
            return {END: cost}
        result: Dict[str, int] = {}
        for succ in self.index.successors[block]:
            for dst, tail in self.from_block_entry(succ).items():
                _merge(result, dst, cost + tail)
        return result

    def _through_loop(self, header: str) -> Dict[str, int]:
        result: Dict[str, int] = {}
        for edge, base in self.collapsed_exits(header).items():
            for dst, tail in self.from_block_entry(edge[1]).items():
                _merge(result, dst, base + tail)
        return result

    def collapsed_exits(self, header: str) -> Dict[Edge, int]:
        """Worst cost of running a TIP-free loop to completion, per exit edge."""
        loop = self.index.loops[header]
        outcomes = self._inside(header, header)
        iteration = outcomes.get(_BACK, 0)
        return {
            tuple(edge): loop.max_iter * iteration + outcomes[tuple(edge)]
            for edge in sorted(loop.exit_edges)
            if tuple(edge) in outcomes
        }

    def _inside(self, header: str, block: str) -> Dict[Outcome, int]:
        key = (header, block)
        if key in self._inside_memo:
            return self._inside_memo[key]
        result: Dict[Outcome, int] = {}
        if block != header and block in self.index.loops:
            for edge, base in self.collapsed_exits(block).items():
                self._follow(header, edge, base, result)
        else:
            cost = block_wcet(self.index.blocks[block])
            for succ in self.index.successors[block]:
                self._follow(header, (block, succ), cost, result)
        self._inside_memo[key] = result
        return result

    def _follow(self, header: str, edge: Edge, base: int, result: Dict[Outcome, int]) -> None:
        src, dst = edge
        if dst == header and self.index.is_back_edge(src, dst):
            _merge(result, _BACK, base)
        elif dst not in self.index.members[header]:
            _merge(result, edge, base)
        else:
            for outcome, tail in self._inside(header, dst).items():
                _merge(result, outcome, base + tail)


# ------------------------------------------------------------------------------
# Loop metadata and structural checks
# ------------------------------------------------------------------------------
def _loop_meta(
    index: CfgIndex, tip_loops: Set[str], tips: List[Tip], edges: List[TgEdge]
) -> Dict[str, LoopMeta]:
    meta: Dict[str, LoopMeta] = {}
    for header in sorted(tip_loops):
        loop = index.loops[header]
        members = index.members[header]
        inside = {t.id for t in tips if t.block is not None and t.block in members}
        hid = head_id(header)
        enclosing = [h for h in index.enclosing[header] if h != header and h in tip_loops]
        meta[hid] = LoopMeta(
            header=header,
            min_iter=loop.min_iter,
            max_iter=loop.max_iter,
            depth=index.depth(header),
            parent=head_id(enclosing[-1]) if enclosing else None,
            tips=[t.id for t in tips if t.id in inside],
            entry_edges=[(e.src, e.dst) for e in edges if e.dst == hid and e.src not in inside],
            return_edges=[(e.src, e.dst) for e in edges if e.dst == hid and e.src in inside],
            exit_edges=[(e.src, e.dst) for e in edges if e.src in inside and e.dst not in inside],
        )
    return meta


def _check_reachability(tg: TipsGraph) -> None:
    graph = tg.graph()
    forward = nx.descendants(graph, START) | {START}
    backward = nx.ancestors(graph, END) | {END}
    for tip in tg.tips:
        if tip.id not in forward or tip.id not in backward:
            raise UnreachableTipError(f"{tg.task}: tip {tip.id} is not on any start-to-end path")


# ------------------------------------------------------------------------------
# Edge-weight oracle
# ------------------------------------------------------------------------------
class WeightViolation(BaseTipsModel):
    src: str
    dst: str
    path_cost: int
    weight: Optional[int] = None

    def describe(self) -> str:
        if self.weight is None:
            return f"missing edge {self.src}->{self.dst} (path cost {self.path_cost})"
        return f"edge {self.src}->{self.dst}: w={self.weight} < path cost {self.path_cost}"


class WeightReport(BaseTipsModel):
    task: str
    paths_checked: int
    violations: List[WeightViolation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_property1(
    cfg: TaskCFG,
    tg: TipsGraph,
    unroll_limit: int = 3,
    max_paths: int = 100_000,
) -> WeightReport:
    """
    Check every edge weight against brute-force TIP-free path costs.

    Loops are unrolled up to ``min(max_iter, unroll_limit)`` iterations.
    Raises :class:`~tips_profiles.exceptions.TraceExplosionError` past
    ``max_paths`` paths per source tip.
    """
    from .unrolling import ConcreteWalker

    walker = ConcreteWalker(cfg, tg.access_time, max_paths=max_paths, unroll_limit=unroll_limit)
    weights = {(e.src, e.dst): e.w for e in tg.edges}
    worst: Dict[Tuple[str, str], int] = {}
    checked = 0
    for tip in tg.tips:
        for dst, cost in walker.region_paths(tip):
            checked += 1
            key = (tip.id, dst)
            w = weights.get(key)
            if w is None or w < cost:
                _merge(worst, key, cost)

    violations = [
        WeightViolation(src=s, dst=d, path_cost=c, weight=weights.get((s, d)))
        for (s, d), c in sorted(worst.items())
    ]
    for violation in violations:
        logger.debug("Edge weight below path cost on %s: %s", tg.task, violation.describe())
    return WeightReport(task=tg.task, paths_checked=checked, violations=violations)
