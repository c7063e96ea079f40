"""
Annotated task CFGs, analysis configuration and the task-system loader.

The input document is a JSON tree::

    {
      "config": {"access_time": 10, "delta": 20, "max_traces": 1000},
      "tasks": [{"name": ..., "entry": ..., "exit": ..., "blocks": [...],
                 "edges": [[src, dst], ...], "loops": [...]}],
      "placements": [{"task": ..., "core": 0, "release": 0}]
    }

Shape and types are checked by pydantic; structural invariants (reachability,
loop consistency, reducibility) are checked by :func:`validate_task` and
reported as :class:`~tips_profiles.exceptions.TaskValidationError`.
"""

import json
import logging
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from .base_model import BaseTipsModel, canonical_json
from .enums import MemClass
from .exceptions import DocumentParseError, TaskValidationError
from .pydantic_compat import Field, PydanticValidationError, model_validate_compat

logger = logging.getLogger(__name__)

U64_MAX = 2**64 - 1

Edge = Tuple[str, str]

# Tip ids reserved by the TIPsGraph builder.
RESERVED_IDS = ("start", "end")
LOOP_HEAD_PREFIX = "head:"


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
class Instruction(BaseTipsModel):
    id: str
    wcet: int = Field(..., ge=0, le=U64_MAX)
    mem_class: MemClass
    max_accesses: int = Field(0, ge=0, le=U64_MAX)

    @property
    def is_tip(self) -> bool:
        return self.mem_class == MemClass.NOT_CLASSIFIED


class BasicBlock(BaseTipsModel):
    id: str
    instructions: List[Instruction]


class LoopInfo(BaseTipsModel):
    header: str
    members: List[str]
    back_edges: List[Edge]
    exit_edges: List[Edge]
    min_iter: int = Field(0, ge=0, le=U64_MAX)
    max_iter: int = Field(..., ge=1, le=U64_MAX)


class TaskCFG(BaseTipsModel):
    name: str
    entry: str
    exit: str
    blocks: List[BasicBlock]
    edges: List[Edge] = Field(default_factory=list)
    loops: List[LoopInfo] = Field(default_factory=list)

    def block(self, block_id: str) -> BasicBlock:
        for block in self.blocks:
            if block.id == block_id:
                return block
        raise KeyError(block_id)

    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(block.id for block in self.blocks)
        graph.add_edges_from(self.edges)
        return graph


class AnalysisConfig(BaseTipsModel):
    access_time: int = Field(..., gt=0, le=U64_MAX)
    delta: int = Field(0, ge=0, le=U64_MAX)
    max_traces: int = Field(10_000, gt=0)
    bus_access_latency: Optional[int] = Field(None, gt=0, le=U64_MAX)

    @property
    def interference_latency(self) -> int:
        """Cycles charged per conflicting access; falls back to ``access_time``."""
        if self.bus_access_latency is not None:
            return self.bus_access_latency
        return self.access_time


class Placement(BaseTipsModel):
    task: str
    core: int = Field(..., ge=0)
    release: int = Field(0, ge=0, le=U64_MAX)


class TaskSystem(BaseTipsModel):
    config: AnalysisConfig
    tasks: List[TaskCFG]
    placements: List[Placement] = Field(default_factory=list)

    def task(self, name: str) -> TaskCFG:
        for task in self.tasks:
            if task.name == name:
                return task
        raise KeyError(name)


# ------------------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------------------
def block_wcet(block: BasicBlock) -> int:
    return sum(instr.wcet for instr in block.instructions)


def load_task_system(document: Union[str, bytes, Mapping]) -> TaskSystem:
    """
    Parse and validate a task-system document.

    ``document`` may be JSON text or an already decoded mapping.
    Raises :class:`DocumentParseError` for malformed input and
    :class:`TaskValidationError` for invariant violations.
    """
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentParseError(f"malformed document: {exc}") from exc
    else:
        data = document

    if not isinstance(data, Mapping):
        raise DocumentParseError("document root must be an object")

    try:
        system = model_validate_compat(TaskSystem, dict(data))
    except PydanticValidationError as exc:
        raise DocumentParseError(f"document does not match the input format: {exc}") from exc

    validate_system(system)
    logger.debug(
        "Loaded %d task(s): %s", len(system.tasks), ", ".join(t.name for t in system.tasks)
    )
    return system


def load_task_system_file(path: Union[str, Path]) -> TaskSystem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentParseError(f"cannot read {path}: {exc}") from exc
    return load_task_system(text)


def dump_task_system(system: TaskSystem) -> str:
    return canonical_json(system.to_dict())


# ------------------------------------------------------------------------------
# Validation
# ------------------------------------------------------------------------------
def validate_system(system: TaskSystem) -> None:
    if not system.tasks:
        raise TaskValidationError("task system has no tasks", "tasks")

    names: Set[str] = set()
    for task in system.tasks:
        if task.name in names:
            raise TaskValidationError("duplicate task name", task.name)
        names.add(task.name)
        validate_task(task)

    placed: Set[str] = set()
    for placement in system.placements:
        if placement.task not in names:
            raise TaskValidationError("placement names an unknown task", placement.task)
        if placement.task in placed:
            raise TaskValidationError("task placed twice", placement.task)
        placed.add(placement.task)


def validate_task(task: TaskCFG) -> None:
    """Check every TaskCFG / BasicBlock / Instruction / LoopInfo invariant."""

    def fail(invariant: str, entity: str) -> None:
        raise TaskValidationError(invariant, entity, task=task.name)

    # Blocks and instructions
    block_ids: Set[str] = set()
    instr_ids: Set[str] = set()
    for block in task.blocks:
        if block.id in block_ids:
            fail("duplicate block id", block.id)
        block_ids.add(block.id)
        if not block.instructions:
            fail("empty basic block", block.id)
        for instr in block.instructions:
            if instr.id in instr_ids:
                fail("duplicate instruction id", instr.id)
            if instr.id in RESERVED_IDS or instr.id.startswith(LOOP_HEAD_PREFIX):
                fail("reserved instruction id", instr.id)
            instr_ids.add(instr.id)
            if instr.is_tip and instr.max_accesses < 1:
                fail("unclassified access without bus accesses", instr.id)
            if not instr.is_tip and instr.max_accesses != 0:
                fail("classified instruction with bus accesses", instr.id)

    # Edges, entry and exit
    edge_set: Set[Edge] = set()
    for src, dst in task.edges:
        if src not in block_ids or dst not in block_ids:
            fail("unknown edge endpoint", f"{src}->{dst}")
        if (src, dst) in edge_set:
            fail("duplicate edge", f"{src}->{dst}")
        edge_set.add((src, dst))

    if task.entry not in block_ids:
        fail("unknown entry block", task.entry)
    if task.exit not in block_ids:
        fail("unknown exit block", task.exit)

    graph = task.graph()
    if graph.in_degree(task.entry) > 0:
        fail("entry has incoming edge", task.entry)
    if graph.out_degree(task.exit) > 0:
        fail("exit has outgoing edge", task.exit)

    reachable = nx.descendants(graph, task.entry) | {task.entry}
    for block in task.blocks:
        if block.id not in reachable:
            fail("unreachable block", block.id)
    co_reachable = nx.ancestors(graph, task.exit) | {task.exit}
    for block in task.blocks:
        if block.id not in co_reachable:
            fail("exit unreachable from block", block.id)

    # Loops
    headers: Set[str] = set()
    all_back_edges: Set[Edge] = set()
    for loop in task.loops:
        members = set(loop.members)
        if loop.min_iter > loop.max_iter:
            fail("inverted loop bounds", loop.header)
        if loop.header in headers:
            fail("duplicate loop header", loop.header)
        headers.add(loop.header)
        if loop.header not in members:
            fail("loop header outside its members", loop.header)
        for member in sorted(members - block_ids):
            fail("unknown loop member", member)
        if task.entry in members:
            fail("entry block inside loop", loop.header)
        if not loop.back_edges:
            fail("loop without back edge", loop.header)

        for edge in loop.back_edges:
            if tuple(edge) not in edge_set or edge[0] not in members or edge[1] != loop.header:
                fail("invalid back edge", f"{edge[0]}->{edge[1]}")
        actual_back = {(u, v) for u, v in edge_set if v == loop.header and u in members}
        if actual_back != {tuple(e) for e in loop.back_edges}:
            fail("undeclared back edge", loop.header)
        all_back_edges |= actual_back

        for edge in loop.exit_edges:
            if tuple(edge) not in edge_set or edge[0] not in members or edge[1] in members:
                fail("invalid exit edge", f"{edge[0]}->{edge[1]}")
        actual_exit = {(u, v) for u, v in edge_set if u in members and v not in members}
        if actual_exit != {tuple(e) for e in loop.exit_edges}:
            fail("undeclared exit edge", loop.header)

        for u, v in sorted(edge_set):
            if v in members and u not in members and v != loop.header:
                fail("loop entered outside its header", f"{u}->{v}")

        if natural_loop(graph, loop.header, [s for s, _ in actual_back]) != members:
            fail("loop members are not the natural loop", loop.header)

    for first, second in combinations(task.loops, 2):
        a, b = set(first.members), set(second.members)
        if a & b and not (a <= b or b <= a):
            fail("loops are not properly nested", f"{first.header}/{second.header}")

    forward = graph.copy()
    forward.remove_edges_from(all_back_edges)
    if not nx.is_directed_acyclic_graph(forward):
        cycle = nx.find_cycle(forward)
        fail("irreducible cycle", "->".join(u for u, _ in cycle))


def natural_loop(graph: nx.DiGraph, header: str, latches: Iterable[str]) -> Set[str]:
    """Header plus every block reaching a latch without passing through the header."""
    body = graph.subgraph(n for n in graph.nodes if n != header)
    nodes = {header}
    for latch in latches:
        if latch == header:
            continue
        nodes.add(latch)
        nodes |= nx.ancestors(body, latch)
    return nodes


# ------------------------------------------------------------------------------
# Lookup index over a validated CFG
# ------------------------------------------------------------------------------
class CfgIndex:
    """
    Precomputed adjacency and loop-nesting lookups for a validated task.

    Built once per analysis; the pydantic models stay the source of truth.
    """

    def __init__(self, task: TaskCFG):
        self.task = task
        self.blocks: Dict[str, BasicBlock] = {b.id: b for b in task.blocks}
        self.successors: Dict[str, List[str]] = {b.id: [] for b in task.blocks}
        for src, dst in task.edges:
            self.successors[src].append(dst)
        for succs in self.successors.values():
            succs.sort()

        self.loops: Dict[str, LoopInfo] = {loop.header: loop for loop in task.loops}
        self.members: Dict[str, FrozenSet[str]] = {
            loop.header: frozenset(loop.members) for loop in task.loops
        }
        self.back_edges: Dict[str, FrozenSet[Edge]] = {
            loop.header: frozenset(tuple(e) for e in loop.back_edges) for loop in task.loops
        }
        # Loops containing each block, outermost first.
        self.enclosing: Dict[str, List[str]] = {}
        for block_id in self.blocks:
            around = [h for h, members in self.members.items() if block_id in members]
            around.sort(key=lambda h: (-len(self.members[h]), h))
            self.enclosing[block_id] = around

    def block_tips(self, block_id: str) -> List[Tuple[int, Instruction]]:
        return [(k, i) for k, i in enumerate(self.blocks[block_id].instructions) if i.is_tip]

    def loop_has_tips(self, header: str) -> bool:
        return any(self.block_tips(b) for b in self.members[header])

    def is_back_edge(self, src: str, dst: str) -> bool:
        return dst in self.loops and (src, dst) in self.back_edges[dst]

    def depth(self, header: str) -> int:
        return len(self.enclosing[header])
