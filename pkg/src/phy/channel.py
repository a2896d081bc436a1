"""Logical radio channels at 2.4 GHz / 250 kbps.

Zero propagation delay, perfect sensing and no capture: any overlap on a
channel corrupts every overlapped frame for every receiver.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NewType

from pydantic import BaseModel, ConfigDict, Field

from src.errors import MacLogicError
from src.mac.frames import Frame, FrameKind
from src.sim.engine import NS_PER_SECOND, SimTime

ChannelId = NewType("ChannelId", int)

logger = logging.getLogger("wpansim.phy")


class PhyParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    data_rate: int = Field(default=250_000, gt=0, description="bits per second")
    frequency_band: str = Field(default="2.4 GHz", description="informational only")
    symbol_rate: int = Field(default=62_500, gt=0, description="symbols per second")
    overhead_bits: int = Field(default=152, ge=0, description="PHY+MAC framing per data frame")
    ack_frame_bits: int = Field(default=88, gt=0, description="total bits of an ACK frame")
    max_payload_bits: int = Field(default=1016, ge=8, description="upper clamp for payload sizes")

    def bits_to_ticks(self, bits: int) -> SimTime:
        return int(round(bits * NS_PER_SECOND / self.data_rate))

    def symbols_to_ticks(self, symbols: int) -> SimTime:
        return int(round(symbols * NS_PER_SECOND / self.symbol_rate))


def transmission_duration(frame: Frame, phy: PhyParams) -> SimTime:
    """Air time of a frame: payload plus framing for data, a fixed size for ACK/token."""
    if frame.kind is FrameKind.DATA:
        return phy.bits_to_ticks(frame.payload_bits + phy.overhead_bits)
    return phy.bits_to_ticks(phy.ack_frame_bits)


class ChannelStatus(str, Enum):
    IDLE = "idle"
    BUSY = "busy"


@dataclass(eq=False)
class TransmissionRecord:
    channel: ChannelId
    sender: int
    frame: Frame
    start: SimTime
    end: SimTime
    collided: bool = False

    def overlaps(self, t0: SimTime, t1: SimTime) -> bool:
        """True if [start, end) intersects [t0, t1)."""
        return self.start < t1 and t0 < self.end


class Medium:
    """All logical channels of one scenario.

    Args:
        phy: PHY constants
        lookback: How long finished records stay queryable by carrier_sense
    """

    def __init__(self, phy: PhyParams, lookback: SimTime = 10 * NS_PER_SECOND):
        self.phy = phy
        self.lookback = lookback
        self.records: Dict[ChannelId, List[TransmissionRecord]] = {}
        self._listeners: Dict[ChannelId, List[int]] = {}
        self._on_air: Dict[int, TransmissionRecord] = {}
        self.transmissions = 0
        self.collisions = 0

    def attach(self, node: int, channel: ChannelId) -> None:
        listeners = self._listeners.setdefault(channel, [])
        if node not in listeners:
            listeners.append(node)
        self.records.setdefault(channel, [])

    def channels(self) -> List[ChannelId]:
        return sorted(self._listeners)

    def is_transmitting(self, node: int) -> bool:
        return node in self._on_air

    def on_air(self, node: int) -> TransmissionRecord:
        return self._on_air[node]

    def carrier_sense(self, channel: ChannelId, t: SimTime, duration: SimTime) -> ChannelStatus:
        """Busy iff any transmission on `channel` overlaps [t, t + duration).

        Call at or after t + duration so every overlapping record is known.
        """
        if duration <= 0:
            raise ValueError("carrier sense duration must be > 0")
        t1 = t + duration
        for record in self.records.get(channel, ()):
            if record.start < t1 and t < record.end:
                return ChannelStatus.BUSY
        return ChannelStatus.IDLE

    def busy_at(self, channel: ChannelId, t: SimTime) -> bool:
        """Instantaneous energy check at time t."""
        return any(r.start <= t < r.end for r in self.records.get(channel, ()))

    def begin_transmission(
        self, channel: ChannelId, sender: int, frame: Frame, t: SimTime
    ) -> TransmissionRecord:
        if sender in self._on_air:
            raise MacLogicError(
                f"node {sender} started frame {frame.id} while frame "
                f"{self._on_air[sender].frame.id} is still on air"
            )
        record = TransmissionRecord(
            channel=channel,
            sender=sender,
            frame=frame,
            start=t,
            end=t + transmission_duration(frame, self.phy),
        )
        horizon = t - self.lookback
        kept = []
        for other in self.records.setdefault(channel, []):
            if other.end <= horizon:
                continue
            if other.end > t:
                if not other.collided:
                    self.collisions += 1
                other.collided = True
                if not record.collided:
                    self.collisions += 1
                record.collided = True
            kept.append(other)
        kept.append(record)
        self.records[channel] = kept
        self._on_air[sender] = record
        self.transmissions += 1
        return record

    def resolve_delivery(self, record: TransmissionRecord) -> Dict[int, bool]:
        """Per listening node (sender excluded): True if the frame arrived intact."""
        self._on_air.pop(record.sender, None)
        intact = not record.collided
        return {
            node: intact
            for node in self._listeners.get(record.channel, ())
            if node != record.sender
        }
