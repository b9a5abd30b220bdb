# Save as: snapslam/errors.py
from typing import List, Optional


class SnapSlamError(Exception):
    """Base class for every error the library raises on purpose."""

    exit_code = 1

    def one_line(self) -> str:
        message = " ".join(str(self).split())
        return f"{type(self).__name__}: {message}"


class ParallelLine(SnapSlamError):
    pass


class DegenerateGeometry(SnapSlamError):
    pass


class LengthMismatch(SnapSlamError):
    pass


class DegenerateEstimate(SnapSlamError):
    pass


class EmptyImage(SnapSlamError):
    pass


class GridError(SnapSlamError):
    exit_code = 2


class GridTooLarge(GridError):
    pass


class EmptyGrid(GridError):
    pass


class UsageError(SnapSlamError):
    exit_code = 2


class ScenarioParseError(SnapSlamError):
    exit_code = 2


class ScenarioValidationError(SnapSlamError):
    """Raised when a scenario parses but breaks one or more invariants.

    `violations` holds (key_path, rule) pairs so callers can point at the
    offending entry of the scenario file.
    """

    exit_code = 2

    def __init__(self, message: str, violations: Optional[List[tuple]] = None):
        super().__init__(message)
        self.violations = list(violations or [])
