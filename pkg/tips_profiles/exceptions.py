"""
Exception hierarchy shared by every pipeline stage.

Each class also derives from the builtin a caller would expect
(``ValueError`` for bad input, ``RuntimeError`` for analysis limits) so
that ``except ValueError`` keeps working for code that does not know
about this package.
"""

from typing import Optional


class TipsError(Exception):
    """Root of every error raised by :mod:`tips_profiles`."""


class DocumentParseError(TipsError, ValueError):
    """The input document is not valid JSON or does not have the expected shape."""


class TaskValidationError(TipsError, ValueError):
    """A loaded task violates a structural invariant."""

    def __init__(self, invariant: str, entity: str, task: Optional[str] = None):
        self.invariant = invariant
        self.entity = entity
        self.task = task
        where = f"{task}/{entity}" if task else entity
        super().__init__(f"{invariant}: {where}")


class UnreachableTipError(TipsError, RuntimeError):
    """A TIP does not lie on any start-to-end path of its TIPsGraph."""


class TraceExplosionError(TipsError, RuntimeError):
    """Path or trace enumeration exceeded its configured limit."""

    def __init__(self, message: str, limit: int):
        self.limit = limit
        super().__init__(f"{message} (limit {limit})")


class NegativeGapError(TipsError, ValueError):
    """A trace date falls inside the access window of the previous element."""


class HorizonMismatchError(TipsError, ValueError):
    """Two segment sequences do not share the same d_max."""


class PlacementError(TipsError, ValueError):
    """Placements do not match the profiles handed to the scheduler."""


class NonConvergenceError(TipsError, RuntimeError):
    """The interference fixed point was not reached within the round cap."""

    def __init__(self, rounds: int):
        self.rounds = rounds
        super().__init__(f"interference inflation did not converge after {rounds} rounds")
