"""Seeded random streams, one per (node, purpose)."""

from enum import IntEnum
from typing import Sequence, TypeVar

import numpy as np

GENERATOR_NAME = "numpy.random.PCG64"

T = TypeVar("T")


class StreamPurpose(IntEnum):
    INTERARRIVAL = 0
    SIZE = 1
    START = 2
    BACKOFF = 3
    DESTINATION = 4


class RandomStream:
    """Independent PCG64 stream derived from (seed, node, purpose).

    Streams are spawned through numpy's SeedSequence, so identical
    (seed, stream-id) pairs reproduce identical sequences on every platform
    and disjoint stream-ids are statistically independent.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, node: int, purpose: StreamPurpose):
        self.seed = int(seed)
        self.stream_id = (int(node), int(purpose))
        seq = np.random.SeedSequence(entropy=self.seed & (2**64 - 1), spawn_key=self.stream_id)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def random(self) -> float:
        """Uniform on [0, 1)."""
        return float(self._gen.random())

    def uniform(self, low: float, high: float) -> float:
        """Uniform on [low, high)."""
        value = low + (high - low) * float(self._gen.random())
        if value >= high:
            value = float(np.nextafter(high, low))
        return value

    def exponential(self, mean: float) -> float:
        return float(self._gen.exponential(mean))

    def integer_below(self, n: int) -> int:
        """Uniform integer in {0, ..., n-1}."""
        return int(self._gen.integers(0, n))

    def choice(self, items: Sequence[T]) -> T:
        return items[self.integer_below(len(items))]
