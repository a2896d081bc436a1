"""Exception hierarchy shared by the simulator packages."""

from typing import Optional


class WpanSimError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(WpanSimError, ValueError):
    """Invalid parameters, builder misuse or an unusable scenario."""


class ScenarioError(ConfigurationError):
    """A scenario file failed to parse or validate.

    Args:
        message: Human readable diagnostic
        key: Dotted key path the problem refers to, if known
        line: 1-based line of that key in the file, if found
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = ""
        if key:
            location = f" [key '{key}'"
            location += f", line {line}]" if line else "]"
        super().__init__(f"{message}{location}")


class SchedulingError(ConfigurationError):
    """An event was scheduled before the current simulation clock."""


class MacLogicError(WpanSimError):
    """The MAC broke one of its own serialization rules."""


class NoRouteError(WpanSimError):
    """A next hop was requested for a destination outside the network."""


class OutputError(WpanSimError):
    """An output directory or artifact could not be written."""


class EngineFault(WpanSimError):
    """An exception escaped the event loop.

    Args:
        message: What went wrong
        trace_tail: Last trace lines before the fault, oldest first
    """

    def __init__(self, message: str, trace_tail: Optional[list] = None):
        self.trace_tail = list(trace_tail or [])
        super().__init__(message)
