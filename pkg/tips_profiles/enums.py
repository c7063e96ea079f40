from enum import Enum


class MemClass(str, Enum):
    ALWAYS_HIT = "AlwaysHit"
    NOT_CLASSIFIED = "NotClassified"
    NON_MEMORY = "NonMemory"

    def __str__(self):
        return self.value


class TipKind(str, Enum):
    START = "Start"
    END = "End"
    LOOP_HEAD = "LoopHead"
    ACCESS = "Access"

    def __str__(self):
        return self.value


class InterferenceMode(str, Enum):
    INFLATE = "inflate"
    BUDGET = "budget"

    def __str__(self):
        return self.value


class Stage(str, Enum):
    TIPSGRAPH = "tipsgraph"
    TRACES = "traces"
    SEGMENTS = "segments"
    SCHEDULE = "schedule"

    def __str__(self):
        return self.value

    @property
    def rank(self) -> int:
        return list(Stage).index(self)


class RenderFormat(str, Enum):
    TEXT = "text"
    SVG = "svg"

    def __str__(self):
        return self.value
