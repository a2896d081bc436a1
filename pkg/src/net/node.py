"""A node: application, network and MAC layers stacked as in the node model."""

import logging
from dataclasses import replace
from typing import Optional, Set

from src.app.traffic import Sink, TrafficGenerator
from src.errors import NoRouteError
from src.mac.csma import MacLayer, ReceiveAction
from src.mac.frames import DropCause, Frame
from src.metrics.collector import MetricsCollector
from src.net.token import TokenRing
from src.net.topology import Network, NodeSpec, next_hop
from src.sim.engine import SimTime
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.net.node")


class Node:
    """
    Network layer of one node. Originates frames from its generator, accepts
    intact data frames handed up by its MAC, delivers them to the sink or
    relays them store-and-forward through its own MAC queue.

    On a ring whose token strips at the source, frames in transit ride with the
    token: relayed and circulating copies go to the head of the MAC queue, a
    delivered frame is passed on round the ring and its source removes it.
    """

    def __init__(
        self,
        spec: NodeSpec,
        net: Network,
        mac: MacLayer,
        metrics: MetricsCollector,
        tracer: TraceWriter,
    ):
        self.spec = spec
        self.id = spec.id
        self.net = net
        self.mac = mac
        self.metrics = metrics
        self.tracer = tracer
        self.sink = Sink(self.id, metrics, tracer)
        self.generator: Optional[TrafficGenerator] = None
        self.ring: Optional[TokenRing] = None
        self.accepted: Set[int] = set()
        self.circulated: Set[int] = set()
        self.forwarded = 0
        self.repeated = 0
        self.stripped = 0
        self.duplicates = 0
        self.drops = 0
        self.stale_drops = 0
        mac.user = self

    @property
    def circulates(self) -> bool:
        return self.ring is not None and self.ring.circulates

    def originate(self, frame: Frame) -> None:
        self.accepted.add(frame.id)
        self._send(frame, relay=False)

    def on_data(self, frame: Frame, t: SimTime) -> ReceiveAction:
        self.metrics.record_hop_received(self.id, frame.payload_bits, t)
        if frame.circulating:
            return self._on_circulating(frame, t)
        if frame.id in self.accepted:
            return self._duplicate(frame, t)
        self.accepted.add(frame.id)
        self.metrics.transfer_custody(frame.id, self.id)

        if frame.final_destination == self.id:
            self.sink.receive(replace(frame, hop_trace=frame.hop_trace + [self.id]), t)
            if self.circulates:
                self._circulate(frame, t)
            return ReceiveAction.ACK_AND_DELIVER

        self._send(frame, relay=True)
        return ReceiveAction.ACK_AND_FORWARD

    def _duplicate(self, frame: Frame, t: SimTime) -> ReceiveAction:
        self.duplicates += 1
        self.metrics.record_duplicate(self.id, frame.id)
        self.tracer.emit(t, self.id, "duplicate", frame=frame.id, **{"from": frame.sender})
        return ReceiveAction.ACK_DUPLICATE

    def _on_circulating(self, frame: Frame, t: SimTime) -> ReceiveAction:
        if frame.id in self.circulated:
            return self._duplicate(frame, t)
        self.circulated.add(frame.id)
        if frame.source == self.id:
            self.stripped += 1
            self.tracer.emit(t, self.id, "strip", frame=frame.id, hops=len(frame.hop_trace))
            self.ring.strip(self.id)
            return ReceiveAction.ACK_AND_STRIP
        self._circulate(frame, t)
        return ReceiveAction.ACK_AND_FORWARD

    def _circulate(self, frame: Frame, t: SimTime) -> None:
        self.circulated.add(frame.id)
        hop = self.net.successor(self.id)
        outgoing = replace(frame.forwarded(self.id, hop), circulating=True)
        self.repeated += 1
        self.tracer.emit(t, self.id, "repeat", frame=frame.id, to=hop)
        self.mac.enqueue(outgoing, front=True)

    def _send(self, frame: Frame, relay: bool) -> None:
        try:
            hop = next_hop(self.net, self.id, frame)
        except NoRouteError:
            self.on_drop(frame, DropCause.NO_ROUTE, self.mac.engine.now)
            return
        if relay:
            outgoing = frame.forwarded(self.id, hop)
            self.forwarded += 1
            self.tracer.emit(self.mac.engine.now, self.id, "forward", frame=frame.id, to=hop)
        else:
            frame.next_hop = hop
            frame.sender = self.id
            outgoing = frame
        self.mac.enqueue(outgoing, front=relay and self.circulates)

    def on_drop(self, frame: Frame, cause: DropCause, t: SimTime) -> None:
        if self.metrics.record_dropped(self.id, cause, t, frame.id):
            self.drops += 1
            self.tracer.emit(t, self.id, "drop", frame=frame.id, cause=DropCause(cause).value)
        else:
            self.stale_drops += 1
            self.tracer.emit(t, self.id, "stale_drop", frame=frame.id, cause=DropCause(cause).value)
