"""Frames exchanged over the medium and the drop causes the MAC reports."""

from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import count
from typing import List, Optional

from src.sim.engine import SimTime


class FrameKind(str, Enum):
    DATA = "data"
    ACK = "ack"
    TOKEN = "token"


class DropCause(str, Enum):
    CHANNEL_ACCESS_FAILURE = "ChannelAccessFailure"
    RETRY_EXHAUSTED = "RetryExhausted"
    QUEUE_OVERFLOW = "QueueOverflow"
    TOKEN_STARVATION = "TokenStarvation"
    NO_ROUTE = "NoRoute"


@dataclass(eq=False)
class Frame:
    """A data, ACK or token unit in flight.

    Data frames keep the same `id` on every hop; `next_hop`, `sender` and
    `hop_trace` describe the copy currently held by one node. A `circulating`
    copy has already been delivered and is on its way back to its source.
    """
    id: int
    kind: FrameKind
    source: int
    final_destination: int
    payload_bits: int
    created_at: SimTime
    hop_trace: List[int] = field(default_factory=list)
    ack_for: Optional[int] = None
    next_hop: Optional[int] = None
    sender: Optional[int] = None
    queued_at: SimTime = 0
    circulating: bool = False

    def __post_init__(self) -> None:
        if self.kind is FrameKind.DATA:
            if self.payload_bits <= 0:
                raise ValueError(f"data frame {self.id} needs payload_bits > 0")
            if not self.hop_trace:
                self.hop_trace = [self.source]
            elif self.hop_trace[0] != self.source:
                raise ValueError(f"hop trace of frame {self.id} must start with its source")

    def forwarded(self, by: int, next_hop: int) -> "Frame":
        """Copy of this frame as relayed by `by` towards `next_hop`."""
        return replace(
            self,
            hop_trace=self.hop_trace + [by],
            next_hop=next_hop,
            sender=by,
        )


class FrameIds:
    """Issues unique frame ids within one simulation."""

    def __init__(self) -> None:
        self._ids = count(1)

    def next(self) -> int:
        return next(self._ids)
