"""
Brute-force enumeration of concrete CFG paths with loops unrolled.

Used only by the oracles (:func:`~tips_profiles.tipsgraph.verify_property1`
and :func:`~tips_profiles.trace_enum.check_conservativeness`); it shares no
code with the longest-path construction it is checking.
"""

import logging
from typing import Iterator, List, Optional, Set, Tuple

from .cfg_model import CfgIndex, TaskCFG
from .exceptions import TraceExplosionError
from .tipsgraph import END, START, Tip, head_id
from .enums import TipKind

logger = logging.getLogger(__name__)

Counters = Tuple[Tuple[str, int], ...]


class ConcreteWalker:
    """
    Depth-first walk over concrete instruction paths of one task.

    ``tip_loops`` are the headers whose entries are TIP points (loops that
    contain accesses). Loop iteration counters follow the usual convention:
    entering a loop sets its counter to 0, each back edge adds one.
    """

    def __init__(
        self,
        cfg: TaskCFG,
        access_time: int,
        max_paths: int = 100_000,
        unroll_limit: Optional[int] = None,
    ):
        self.index = CfgIndex(cfg)
        self.tip_loops: Set[str] = {h for h in self.index.loops if self.index.loop_has_tips(h)}
        self.access_time = access_time
        self.max_paths = max_paths
        self.unroll_limit = unroll_limit

    def _bound(self, header: str) -> int:
        bound = self.index.loops[header].max_iter
        if self.unroll_limit is not None:
            bound = min(bound, self.unroll_limit)
        return bound

    def _transition(
        self, src: str, dst: str, counters: Counters, enforce_min: bool
    ) -> Optional[Counters]:
        """Counters after traversing ``src -> dst``; ``None`` if the path is pruned."""
        state = dict(counters)
        for header in self.index.enclosing[src]:
            if dst not in self.index.members[header] and header in state:
                if enforce_min and state[header] < self.index.loops[header].min_iter:
                    return None
                del state[header]
        if dst in self.index.loops:
            if self.index.is_back_edge(src, dst):
                count = state.get(dst, 0) + 1
                if count > self._bound(dst):
                    return None
                state[dst] = count
            else:
                state[dst] = 0
        return tuple(sorted(state.items()))

    # --------------------------------------------------------------------------
    # Region paths: from one TIP point to the next
    # --------------------------------------------------------------------------
    def region_paths(self, tip: Tip) -> Iterator[Tuple[str, int]]:
        """Yield ``(next tip id, cost)`` for every TIP-free path leaving ``tip``."""
        if tip.kind == TipKind.END:
            return
        cost = tip.mu * self.access_time
        if tip.kind == TipKind.START:
            stack = [(self.index.task.entry, 0, cost, ())]
        elif tip.kind == TipKind.LOOP_HEAD:
            stack = [(tip.block, 0, cost, ())]
        else:
            instructions = self.index.blocks[tip.block].instructions
            position = next(k for k, i in enumerate(instructions) if i.id == tip.instr)
            stack = [(tip.block, position + 1, cost, ())]

        produced = 0
        while stack:
            block, position, cost, counters = stack.pop()
            stopped = False
            for instr in self.index.blocks[block].instructions[position:]:
                cost += instr.wcet
                if instr.is_tip:
                    stopped = True
                    yield instr.id, cost
                    break
            if not stopped and block == self.index.task.exit:
                stopped = True
                yield END, cost
            if stopped:
                produced += 1
                if produced > self.max_paths:
                    raise TraceExplosionError("too many concrete paths", self.max_paths)
                continue
            for succ in self.index.successors[block]:
                if succ in self.tip_loops:
                    produced += 1
                    yield head_id(succ), cost
                    continue
                following = self._transition(block, succ, counters, enforce_min=False)
                if following is not None:
                    stack.append((succ, 0, cost, following))

    # --------------------------------------------------------------------------
    # Whole-task paths
    # --------------------------------------------------------------------------
    def task_paths(self) -> Iterator[List[Tuple[str, int]]]:
        """
        Yield every complete entry-to-exit path as its TIP occurrences.

        Each occurrence is ``(tip id, concrete date)``: access tips are dated
        when their access starts (after their own WCET), loop heads when
        their header block is entered.
        """
        stack: List[Tuple[str, int, Tuple[Tuple[str, int], ...], Counters]] = [
            (self.index.task.entry, 0, ((START, 0),), ())
        ]
        produced = 0
        while stack:
            block, time, occurrences, counters = stack.pop()
            for instr in self.index.blocks[block].instructions:
                time += instr.wcet
                if instr.is_tip:
                    occurrences = occurrences + ((instr.id, time),)
                    time += instr.max_accesses * self.access_time
            if block == self.index.task.exit:
                produced += 1
                if produced > self.max_paths:
                    raise TraceExplosionError("too many concrete paths", self.max_paths)
                yield list(occurrences + ((END, time),))
                continue
            for succ in reversed(self.index.successors[block]):
                following = self._transition(block, succ, counters, enforce_min=True)
                if following is None:
                    continue
                extended = occurrences
                if succ in self.tip_loops:
                    extended = occurrences + ((head_id(succ), time),)
                stack.append((succ, time, extended, following))
