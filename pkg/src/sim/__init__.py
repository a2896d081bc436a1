"""Discrete-event core: clock, event queue, random streams and distributions."""

from .engine import (
    Engine,
    Event,
    EventKind,
    RunSummary,
    SimTime,
    NS_PER_SECOND,
    to_seconds,
    to_ticks,
)
from .random import RandomStream, StreamPurpose, GENERATOR_NAME
from .distributions import Constant, Distribution, Exponential, Uniform, sample

__all__ = [
    "Engine",
    "Event",
    "EventKind",
    "RunSummary",
    "SimTime",
    "NS_PER_SECOND",
    "to_seconds",
    "to_ticks",
    "RandomStream",
    "StreamPurpose",
    "GENERATOR_NAME",
    "Constant",
    "Distribution",
    "Exponential",
    "Uniform",
    "sample",
]
