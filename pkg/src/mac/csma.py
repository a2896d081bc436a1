"""Slotted CSMA/CA with acknowledgements and retransmissions.

One `MacLayer` per node. Backoffs, sensing windows and transmissions start on
slot boundaries of a global epoch at t=0 (slot = unit backoff period).
"""

import logging
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Deque, Dict, Optional, Protocol, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import MacLogicError
from src.mac.frames import DropCause, Frame, FrameIds, FrameKind
from src.phy.channel import ChannelId, ChannelStatus, Medium, TransmissionRecord
from src.sim.engine import Engine, Event, EventKind, SimTime, to_seconds, to_ticks
from src.sim.random import RandomStream
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.mac")


class MacParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    ack_wait_duration: float = Field(default=0.05, gt=0)
    max_retransmissions: int = Field(default=5, ge=0)
    min_backoff_exponent: int = Field(default=3, gt=0)
    max_backoff_exponent: int = Field(default=5, gt=0)
    max_csma_backoffs: int = Field(default=4, ge=0)
    channel_sensing_duration: float = Field(default=0.1, gt=0)
    unit_backoff_period: float = Field(default=3.2e-4, gt=0)
    queue_capacity: int = Field(default=64, ge=1)
    turnaround_time: float = Field(default=1.92e-4, ge=0)
    double_cca: bool = False
    ack_cca: bool = False

    @model_validator(mode="after")
    def _check_exponents(self) -> "MacParams":
        if not 0 < self.min_backoff_exponent <= self.max_backoff_exponent <= 8:
            raise ValueError(
                "backoff exponents need 0 < min_backoff_exponent <= max_backoff_exponent <= 8, "
                f"got {self.min_backoff_exponent} and {self.max_backoff_exponent}"
            )
        return self


class MacState(str, Enum):
    INIT = "Init"
    IDLE = "Idle"
    SCANNING = "Scanning"
    ACTIVE = "Active"


LEGAL_TRANSITIONS = frozenset({
    (MacState.INIT, MacState.IDLE),
    (MacState.IDLE, MacState.SCANNING),
    (MacState.SCANNING, MacState.ACTIVE),
    (MacState.SCANNING, MacState.IDLE),
    (MacState.ACTIVE, MacState.IDLE),
})


class ProcessModel:
    """Tracks the MAC process-model state, time spent per state and transitions.

    ACKs are sent by the receive path and do not move the process model.
    """

    def __init__(self, node: int, tracer: Optional[TraceWriter] = None):
        self.node = node
        self.state = MacState.INIT
        self.since: SimTime = 0
        self.time_in: Dict[MacState, SimTime] = {s: 0 for s in MacState}
        self.transitions: Counter = Counter()
        self.tracer = tracer

    def move(self, to: MacState, t: SimTime) -> None:
        if (self.state, to) not in LEGAL_TRANSITIONS:
            raise MacLogicError(
                f"node {self.node}: illegal MAC transition {self.state.value} -> {to.value}"
            )
        self.time_in[self.state] += t - self.since
        self.transitions[(self.state, to)] += 1
        if self.tracer is not None:
            self.tracer.emit(t, self.node, "state", **{"from": self.state.value, "to": to.value})
        self.state = to
        self.since = t

    def seconds_in_states(self, t: SimTime) -> Dict[str, float]:
        totals = dict(self.time_in)
        totals[self.state] += t - self.since
        return {state.value: to_seconds(ticks) for state, ticks in totals.items()}


@dataclass
class TxAttempt:
    frame: Frame
    backoff_exponent: int
    csma_backoffs: int = 0
    retransmissions: int = 0
    sense_start: SimTime = 0
    cca_left: int = 1
    awaiting_ack: bool = False
    ack_timer: Optional[Event] = None


class EnqueueResult(str, Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


class TxOutcome(str, Enum):
    ACKED = "Acked"
    RETRY_SCHEDULED = "RetryScheduled"
    DROPPED = "Dropped"


class ReceiveAction(str, Enum):
    IGNORE = "ignore"
    ACK_AND_DELIVER = "ack-and-deliver"
    ACK_AND_FORWARD = "ack-and-forward"
    ACK_AND_STRIP = "ack-and-strip"
    ACK_DUPLICATE = "ack-duplicate"
    ACK_MATCHED = "ack-matched"
    STRAY_ACK = "stray-ack"
    TOKEN = "token"


class MacUser(Protocol):
    """What the MAC needs from the network layer above it."""

    def on_data(self, frame: Frame, t: SimTime) -> ReceiveAction: ...

    def on_drop(self, frame: Frame, cause: DropCause, t: SimTime) -> None: ...


class AccessControl:
    """Medium access policy on top of CSMA/CA. The default lets every node contend."""

    def may_send_data(self, node: int) -> bool:
        return True

    def on_enqueue(self, node: int) -> None:
        pass

    def exchange_done(self, node: int) -> None:
        pass

    def token_received(self, node: int, frame: Frame) -> None:
        pass

    def token_sent(self, node: int, delivered: bool) -> None:
        pass


Deliver = Callable[[TransmissionRecord, Dict[int, bool]], None]


class MacLayer:
    """
    IEEE 802.15.4 slotted CSMA/CA for one node.

    Args:
        node: Node id
        params: MAC constants
        engine: Shared event engine
        medium: Shared radio medium
        backoff_stream: Random stream for backoff draws
        channel_for: Maps a frame about to be sent to the channel it goes out on
        deliver: Hands a finished transmission to every listening node
        frame_ids: Id source for ACK and token frames
        tracer: Event trace
    """

    def __init__(
        self,
        node: int,
        params: MacParams,
        engine: Engine,
        medium: Medium,
        backoff_stream: RandomStream,
        channel_for: Callable[[Frame], ChannelId],
        deliver: Deliver,
        frame_ids: FrameIds,
        tracer: TraceWriter,
    ):
        self.node = node
        self.params = params
        self.engine = engine
        self.medium = medium
        self.backoff_stream = backoff_stream
        self.channel_for = channel_for
        self.deliver = deliver
        self.frame_ids = frame_ids
        self.tracer = tracer
        self.user: Optional[MacUser] = None
        self.access: AccessControl = AccessControl()

        self.slot = to_ticks(params.unit_backoff_period)
        self.sense_ticks = to_ticks(params.channel_sensing_duration)
        self.ack_wait_ticks = to_ticks(params.ack_wait_duration)
        self.turnaround_ticks = to_ticks(params.turnaround_time)

        self.queue: Deque[Frame] = deque()
        self.attempt: Optional[TxAttempt] = None
        self.control: Optional[Frame] = None
        self.process = ProcessModel(node, tracer)

        self.acks_sent = 0
        self.stray_acks = 0
        self.data_transmissions = 0

    # ------------------------------------------------------------------ helpers

    def align_up(self, t: SimTime) -> SimTime:
        slot = self.slot
        return -(-t // slot) * slot

    @property
    def state(self) -> MacState:
        return self.process.state

    def has_data(self) -> bool:
        return bool(self.queue)

    def start(self) -> None:
        self.process.move(MacState.IDLE, self.engine.now)

    # ------------------------------------------------------------------ enqueue

    def enqueue(self, frame: Frame, front: bool = False) -> EnqueueResult:
        """Append a data frame to the FIFO, or put it first with `front`; a full queue drops it (QueueOverflow)."""
        if self.process.state is MacState.INIT:
            raise MacLogicError(f"node {self.node}: enqueue before the MAC left Init")
        now = self.engine.now
        if len(self.queue) >= self.params.queue_capacity:
            self.tracer.emit(now, self.node, "queue_full", frame=frame.id, depth=len(self.queue))
            self._report_drop(frame, DropCause.QUEUE_OVERFLOW)
            return EnqueueResult.DROPPED
        frame.queued_at = now
        if not front:
            self.queue.append(frame)
        elif self.queue and self.attempt is not None and self.queue[0] is self.attempt.frame:
            # never ahead of the frame being sent
            self.queue.insert(1, frame)
        else:
            self.queue.appendleft(frame)
        self.tracer.emit(now, self.node, "enqueue", frame=frame.id, depth=len(self.queue))
        self.access.on_enqueue(self.node)
        self.kick()
        return EnqueueResult.ACCEPTED

    def purge_older_than(self, cutoff: SimTime, cause: DropCause) -> int:
        """Drop queued frames (never the one in progress) enqueued before `cutoff`."""
        in_progress = self.attempt.frame if self.attempt is not None else None
        kept: Deque[Frame] = deque()
        dropped = 0
        for frame in self.queue:
            if frame is not in_progress and frame.queued_at < cutoff:
                self._report_drop(frame, cause)
                dropped += 1
            else:
                kept.append(frame)
        self.queue = kept
        return dropped

    def send_control(self, frame: Frame) -> None:
        """Queue a control frame (the ring token) ahead of any data."""
        self.control = frame
        self.kick()

    def kick(self) -> None:
        """Start the next attempt if the MAC is idle and allowed to send."""
        if self.attempt is not None or self.process.state is not MacState.IDLE:
            return
        if self.control is not None:
            self._start_attempt(self.control)
        elif self.queue and self.access.may_send_data(self.node):
            self._start_attempt(self.queue[0])

    # ------------------------------------------------------------------ CSMA/CA

    def _start_attempt(self, frame: Frame, retransmissions: int = 0) -> None:
        self.attempt = TxAttempt(
            frame=frame,
            backoff_exponent=self.params.min_backoff_exponent,
            retransmissions=retransmissions,
        )
        self._backoff()

    def _backoff(self) -> None:
        attempt = self.attempt
        slots = self.backoff_stream.integer_below(2 ** attempt.backoff_exponent)
        now = self.engine.now
        sense_at = self.align_up(now) + slots * self.slot
        self.tracer.emit(
            now, self.node, "backoff",
            frame=attempt.frame.id, be=attempt.backoff_exponent,
            nb=attempt.csma_backoffs, slots=slots,
        )
        self.engine.at(sense_at, EventKind.TIMER, self.node, self._begin_sensing)

    def _begin_sensing(self, event: Event) -> None:
        attempt = self.attempt
        self.process.move(MacState.SCANNING, event.time)
        attempt.cca_left = 2 if self.params.double_cca else 1
        self._open_sense_window(event.time)

    def _open_sense_window(self, t: SimTime) -> None:
        attempt = self.attempt
        attempt.sense_start = t
        self.tracer.emit(
            t, self.node, "sense",
            frame=attempt.frame.id, channel=self.channel_for(attempt.frame),
            be=attempt.backoff_exponent, nb=attempt.csma_backoffs,
        )
        self.engine.at(t + self.sense_ticks, EventKind.TIMER, self.node, self._sense_done)

    def _sense_done(self, event: Event) -> None:
        attempt = self.attempt
        channel = self.channel_for(attempt.frame)
        status = self.medium.carrier_sense(channel, attempt.sense_start, self.sense_ticks)
        now = event.time
        self.tracer.emit(
            now, self.node, "cca",
            frame=attempt.frame.id, result=status.value,
            be=attempt.backoff_exponent, nb=attempt.csma_backoffs,
        )
        if status is ChannelStatus.IDLE:
            attempt.cca_left -= 1
            if attempt.cca_left > 0:
                self._open_sense_window(self.align_up(now))
                return
            self.process.move(MacState.ACTIVE, now)
            self.engine.at(self.align_up(now), EventKind.TX_START, self.node, self._transmit)
            return

        attempt.csma_backoffs += 1
        attempt.backoff_exponent = min(
            attempt.backoff_exponent + 1, self.params.max_backoff_exponent
        )
        self.process.move(MacState.IDLE, now)
        if attempt.csma_backoffs > self.params.max_csma_backoffs:
            self._finish(TxOutcome.DROPPED, DropCause.CHANNEL_ACCESS_FAILURE)
        else:
            self._backoff()

    def _transmit(self, event: Event) -> None:
        now = event.time
        if self.medium.is_transmitting(self.node):
            # an ACK is on air; go out on the first slot after it
            busy_until = self.medium.on_air(self.node).end
            self.engine.at(self.align_up(busy_until), EventKind.TX_START, self.node, self._transmit)
            return
        attempt = self.attempt
        frame = attempt.frame
        frame.sender = self.node
        channel = self.channel_for(frame)
        record = self.medium.begin_transmission(channel, self.node, frame, now)
        if frame.kind is FrameKind.DATA:
            self.data_transmissions += 1
        self.tracer.emit(
            now, self.node, "tx_start",
            frame=frame.id, type=frame.kind.value, channel=channel, to=frame.next_hop,
            attempt=attempt.retransmissions + 1, end=f"{to_seconds(record.end):.9f}",
        )
        self.engine.at(record.end, EventKind.TX_END, self.node, self._transmit_done, record)

    def _transmit_done(self, event: Event) -> None:
        record: TransmissionRecord = event.payload
        outcomes = self.medium.resolve_delivery(record)
        frame = record.frame
        now = event.time
        self.tracer.emit(
            now, self.node, "tx_end",
            frame=frame.id, type=frame.kind.value, collided=int(record.collided),
        )
        self.process.move(MacState.IDLE, now)
        self.deliver(record, outcomes)

        if frame.kind is FrameKind.TOKEN:
            self.attempt = None
            self.control = None
            self.access.token_sent(self.node, outcomes.get(frame.next_hop, False))
            self.kick()
            return
        self._await_ack()

    # ------------------------------------------------------------------ ACK wait

    def _await_ack(self) -> None:
        attempt = self.attempt
        attempt.awaiting_ack = True
        attempt.ack_timer = self.engine.after(
            self.ack_wait_ticks, EventKind.TIMER, self.node, self._ack_timeout
        )

    def _ack_timeout(self, event: Event) -> TxOutcome:
        attempt = self.attempt
        attempt.awaiting_ack = False
        attempt.ack_timer = None
        attempt.retransmissions += 1
        self.tracer.emit(
            event.time, self.node, "ack_timeout",
            frame=attempt.frame.id, retries=attempt.retransmissions,
        )
        if attempt.retransmissions <= self.params.max_retransmissions:
            attempt.backoff_exponent = self.params.min_backoff_exponent
            attempt.csma_backoffs = 0
            self._backoff()
            return TxOutcome.RETRY_SCHEDULED
        self._finish(TxOutcome.DROPPED, DropCause.RETRY_EXHAUSTED)
        return TxOutcome.DROPPED

    def _on_ack(self, ack: Frame) -> ReceiveAction:
        attempt = self.attempt
        now = self.engine.now
        if (
            attempt is None
            or not attempt.awaiting_ack
            or attempt.frame.kind is not FrameKind.DATA
            or ack.ack_for != attempt.frame.id
        ):
            self.stray_acks += 1
            self.tracer.emit(now, self.node, "stray_ack", ack_for=ack.ack_for)
            return ReceiveAction.STRAY_ACK
        attempt.ack_timer.cancel()
        attempt.awaiting_ack = False
        self.tracer.emit(now, self.node, "ack_rx", frame=attempt.frame.id)
        self._finish(TxOutcome.ACKED)
        return ReceiveAction.ACK_MATCHED

    def _finish(self, outcome: TxOutcome, cause: Optional[DropCause] = None) -> None:
        frame = self.attempt.frame
        self.attempt = None
        if frame.kind is FrameKind.TOKEN:
            # a token that cannot get on air is offered again
            self.control = None
            self.access.token_sent(self.node, False)
            self.kick()
            return
        if self.queue and self.queue[0] is frame:
            self.queue.popleft()
        else:
            self.queue.remove(frame)
        if outcome is TxOutcome.DROPPED:
            self._report_drop(frame, cause)
        self.access.exchange_done(self.node)
        self.kick()

    def _report_drop(self, frame: Frame, cause: DropCause) -> None:
        if self.user is not None:
            self.user.on_drop(frame, cause, self.engine.now)

    # ------------------------------------------------------------------ receive

    def receive(self, frame: Frame, channel: ChannelId) -> ReceiveAction:
        """Handle a frame that arrived intact on `channel`."""
        if frame.next_hop != self.node:
            return ReceiveAction.IGNORE
        if frame.kind is FrameKind.ACK:
            return self._on_ack(frame)
        if frame.kind is FrameKind.TOKEN:
            self.tracer.emit(self.engine.now, self.node, "token_rx", frame=frame.id, **{"from": frame.sender})
            self.access.token_received(self.node, frame)
            return ReceiveAction.TOKEN
        self.tracer.emit(
            self.engine.now, self.node, "rx",
            frame=frame.id, bits=frame.payload_bits, **{"from": frame.sender},
        )
        self._schedule_ack(frame, channel)
        return self.user.on_data(frame, self.engine.now)

    def _schedule_ack(self, data: Frame, channel: ChannelId) -> None:
        now = self.engine.now
        ack = Frame(
            id=self.frame_ids.next(),
            kind=FrameKind.ACK,
            source=self.node,
            final_destination=data.sender,
            payload_bits=0,
            created_at=now,
            ack_for=data.id,
            next_hop=data.sender,
            sender=self.node,
        )
        deadline = now + self.ack_wait_ticks
        self.engine.at(
            self.align_up(now + self.turnaround_ticks), EventKind.TX_START, self.node,
            self._ack_start, (ack, channel, deadline),
        )

    def _ack_start(self, event: Event) -> None:
        ack, channel, deadline = event.payload
        now = event.time
        if self.medium.is_transmitting(self.node):
            busy_until = self.medium.on_air(self.node).end
            self.engine.at(
                self.align_up(busy_until), EventKind.TX_START, self.node, self._ack_start, event.payload
            )
            return
        if self.params.ack_cca and self.medium.busy_at(channel, now):
            if now + self.slot > deadline:
                self.tracer.emit(now, self.node, "ack_abandoned", frame=ack.ack_for)
                return
            self.engine.at(now + self.slot, EventKind.TX_START, self.node, self._ack_start, event.payload)
            return
        record = self.medium.begin_transmission(channel, self.node, ack, now)
        self.acks_sent += 1
        self.tracer.emit(
            now, self.node, "ack_tx",
            frame=ack.ack_for, channel=channel, to=ack.next_hop,
            end=f"{to_seconds(record.end):.9f}",
        )
        self.engine.at(record.end, EventKind.TX_END, self.node, self._ack_done, record)

    def _ack_done(self, event: Event) -> None:
        record: TransmissionRecord = event.payload
        outcomes = self.medium.resolve_delivery(record)
        self.deliver(record, outcomes)
