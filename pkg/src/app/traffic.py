"""Application layer: per-role traffic generators and the frame sink."""

import logging
import math
from enum import Enum
from typing import Callable, List, Literal, Optional, Set, Union

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.errors import ConfigurationError
from src.mac.frames import Frame, FrameIds, FrameKind
from src.metrics.collector import MetricsCollector
from src.net.topology import Network, TopologyKind
from src.sim.distributions import Distribution, sample
from src.sim.engine import Engine, Event, EventKind, SimTime, to_ticks
from src.sim.random import RandomStream, StreamPurpose
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.app")

MIN_PACKET_BITS = 8


class DestinationRule(str, Enum):
    PAN_COORD = "PanCoord"
    ALL_COORDINATORS = "AllCoordinators"
    ALL_NODES = "AllNodes"
    IMMEDIATE_NEXT = "ImmediateNext"


class TrafficProfile(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    interarrival: Distribution
    packet_size: Distribution
    start_time: Distribution
    stop_time: Union[float, Literal["infinity"]] = "infinity"
    destination: DestinationRule

    @field_validator("stop_time")
    @classmethod
    def _positive_stop(cls, v):
        if v != "infinity" and v <= 0:
            raise ValueError("stop_time must be > 0 or \"infinity\"")
        return v

    @model_validator(mode="after")
    def _check_rates(self) -> "TrafficProfile":
        if self.interarrival.mean <= 0:
            raise ValueError("interarrival mean must be > 0")
        if self.packet_size.mean <= 0:
            raise ValueError("packet_size mean must be > 0")
        return self

    @property
    def stop_seconds(self) -> float:
        return math.inf if self.stop_time == "infinity" else float(self.stop_time)


def packet_bits(raw: float, max_payload_bits: int, strict: bool = False) -> int:
    """Round a sampled size to whole bits, at least 8, at most `max_payload_bits` unless strict."""
    bits = max(MIN_PACKET_BITS, int(round(raw)))
    return bits if strict else min(bits, max_payload_bits)


def eligible_destinations(node: int, rule: DestinationRule, net: Network) -> List[int]:
    if rule is DestinationRule.PAN_COORD:
        coordinator = net.coordinator_of(node)
        return [] if coordinator is None or coordinator == node else [coordinator]
    if rule is DestinationRule.ALL_COORDINATORS:
        return [c for c in net.coordinators() if c != node]
    if rule is DestinationRule.ALL_NODES:
        pool = net.ids() if net.kind is TopologyKind.RING else net.end_devices()
        return [n for n in pool if n != node]
    if net.kind is not TopologyKind.RING:
        return []
    return [net.successor(node)]


def choose_destination(node: int, rule: DestinationRule, net: Network, s: RandomStream) -> int:
    """Pick a destination; single-candidate rules never consume a draw."""
    candidates = eligible_destinations(node, rule, net)
    if not candidates:
        raise ConfigurationError(
            f"destination rule {rule.value} has no eligible node for node {node} "
            f"in a {net.kind.value} network"
        )
    if len(candidates) == 1 and rule in (DestinationRule.PAN_COORD, DestinationRule.IMMEDIATE_NEXT):
        return candidates[0]
    return s.choice(candidates)


class TrafficGenerator:
    """
    Creates data frames for one node: the first at t0 = sample(start_time), the
    next ones sample(interarrival) apart, while the creation time is before
    stop_time.
    """

    def __init__(
        self,
        node: int,
        profile: TrafficProfile,
        net: Network,
        engine: Engine,
        seed: int,
        originate: Callable[[Frame], None],
        metrics: MetricsCollector,
        frame_ids: FrameIds,
        tracer: TraceWriter,
        max_payload_bits: int,
        strict_sizes: bool = False,
    ):
        self.node = node
        self.profile = profile
        self.net = net
        self.engine = engine
        self.originate = originate
        self.metrics = metrics
        self.frame_ids = frame_ids
        self.tracer = tracer
        self.max_payload_bits = max_payload_bits
        self.strict_sizes = strict_sizes
        self.interarrival_stream = RandomStream(seed, node, StreamPurpose.INTERARRIVAL)
        self.size_stream = RandomStream(seed, node, StreamPurpose.SIZE)
        self.start_stream = RandomStream(seed, node, StreamPurpose.START)
        self.destination_stream = RandomStream(seed, node, StreamPurpose.DESTINATION)
        stop = profile.stop_seconds
        self.stop: Optional[SimTime] = None if math.isinf(stop) else to_ticks(stop)
        self.first_at: Optional[SimTime] = None
        if not eligible_destinations(node, profile.destination, net):
            raise ConfigurationError(
                f"destination rule {profile.destination.value} has no eligible node for node {node} "
                f"in a {net.kind.value} network"
            )

    def _active(self, t: SimTime) -> bool:
        return self.stop is None or t < self.stop

    def start(self) -> None:
        t0 = self.engine.now + to_ticks(sample(self.profile.start_time, self.start_stream))
        self.first_at = t0
        if self._active(t0):
            self.engine.at(t0, EventKind.GENERATOR_TICK, self.node, self._tick)

    def _tick(self, event: Event) -> None:
        now = event.time
        bits = packet_bits(
            sample(self.profile.packet_size, self.size_stream),
            self.max_payload_bits,
            self.strict_sizes,
        )
        destination = choose_destination(
            self.node, self.profile.destination, self.net, self.destination_stream
        )
        frame = Frame(
            id=self.frame_ids.next(),
            kind=FrameKind.DATA,
            source=self.node,
            final_destination=destination,
            payload_bits=bits,
            created_at=now,
            sender=self.node,
        )
        self.metrics.record_sent(self.node, bits, now, frame.id)
        self.tracer.emit(now, self.node, "generate", frame=frame.id, bits=bits, dst=destination)
        self.originate(frame)

        next_at = now + to_ticks(sample(self.profile.interarrival, self.interarrival_stream))
        if self._active(next_at):
            self.engine.at(next_at, EventKind.GENERATOR_TICK, self.node, self._tick)


def start_generator(node: int, profile: TrafficProfile, **kwargs) -> TrafficGenerator:
    generator = TrafficGenerator(node, profile, **kwargs)
    generator.start()
    return generator


class Sink:
    """Terminates frames addressed to one node and reports deliveries."""

    def __init__(self, node: int, metrics: MetricsCollector, tracer: TraceWriter):
        self.node = node
        self.metrics = metrics
        self.tracer = tracer
        self.seen: Set[int] = set()
        self.delivered = 0
        self.duplicates = 0

    def receive(self, frame: Frame, t: SimTime) -> bool:
        if frame.final_destination != self.node:
            raise ValueError(f"frame {frame.id} for node {frame.final_destination} reached sink {self.node}")
        if frame.id in self.seen:
            self.duplicates += 1
            self.metrics.record_sink(self.node, frame.payload_bits, t, frame.id, frame.created_at)
            return False
        self.seen.add(frame.id)
        counted = self.metrics.record_sink(self.node, frame.payload_bits, t, frame.id, frame.created_at)
        self.delivered += int(counted)
        self.tracer.emit(
            t, self.node, "deliver",
            frame=frame.id, bits=frame.payload_bits, hops=len(frame.hop_trace),
            latency=f"{(t - frame.created_at) / 1e9:.9f}",
        )
        return counted
