"""Token-gated access for the ring, layered over slotted CSMA/CA."""

import logging
from typing import Dict, Optional, Set

from pydantic import BaseModel, ConfigDict, Field

from src.mac.csma import AccessControl, MacLayer
from src.mac.frames import DropCause, Frame, FrameIds, FrameKind
from src.net.topology import Network, token_step
from src.sim.engine import Engine, Event, EventKind, to_ticks
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.net.token")


class TokenParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    token_frame: bool = True
    strip_at_source: bool = True
    token_hold_timeout: float = Field(default=0.01, gt=0)
    token_queue_timeout: float = Field(default=2.0, gt=0)


class TokenRing(AccessControl):
    """
    Only the token holder may start a data exchange. After one exchange (acked
    or dropped), or after holding an empty queue for `token_hold_timeout`, the
    holder passes the token to its successor.

    With `token_frame` the token travels as an unacknowledged control frame
    through the holder's CSMA/CA; a token that is not received intact is sent
    again. Otherwise the successor is granted at once.

    With `strip_at_source` a delivered frame keeps travelling round the ring
    and only its source removes it, as on an IEEE 802.5 ring. Each hop of that
    trip is the exchange of the node holding the token, and the grant that
    follows the source's strip only frees the token: the source passes it on
    without sending.
    """

    def __init__(
        self,
        net: Network,
        engine: Engine,
        params: TokenParams,
        frame_ids: FrameIds,
        tracer: TraceWriter,
    ):
        self.net = net
        self.engine = engine
        self.params = params
        self.frame_ids = frame_ids
        self.tracer = tracer
        self.macs: Dict[int, MacLayer] = {}
        self.passing = False
        self.hold_timer: Optional[Event] = None
        self.hold_ticks = to_ticks(params.token_hold_timeout)
        self.queue_ticks = to_ticks(params.token_queue_timeout)
        self.grants = 0
        self.resends = 0
        self.starved = 0
        self.freed = 0
        self.spent: Set[int] = set()

    def attach(self, mac: MacLayer) -> None:
        self.macs[mac.node] = mac
        mac.access = self

    @property
    def circulates(self) -> bool:
        return self.params.strip_at_source

    def strip(self, node: int) -> None:
        """`node` removed its own frame from the ring; its next grant is spent."""
        self.spent.add(node)

    def start(self) -> None:
        holder = self.net.token_holder
        self.engine.at(self.engine.now, EventKind.TOKEN_GRANT, holder, self._grant)

    # AccessControl

    def may_send_data(self, node: int) -> bool:
        return node == self.net.token_holder and not self.passing

    def on_enqueue(self, node: int) -> None:
        if node == self.net.token_holder and self.hold_timer is not None:
            self.hold_timer.cancel()
            self.hold_timer = None

    def exchange_done(self, node: int) -> None:
        if node == self.net.token_holder and not self.passing:
            self._release(node)

    def token_received(self, node: int, frame: Frame) -> None:
        if self.passing and node == self.net.successor(self.net.token_holder):
            self._advance()
        else:
            self.tracer.emit(self.engine.now, node, "token_ignored", frame=frame.id)

    def token_sent(self, node: int, delivered: bool) -> None:
        if not delivered and self.passing and node == self.net.token_holder:
            self.resends += 1
            self._release(node)

    # internals

    def _grant(self, event: Event) -> None:
        node = self.net.token_holder
        now = event.time
        self.passing = False
        self.grants += 1
        self.tracer.emit(now, node, "token", holder=node)
        mac = self.macs[node]
        cutoff = now - self.queue_ticks
        if cutoff > 0:
            self.starved += mac.purge_older_than(cutoff, DropCause.TOKEN_STARVATION)
        if node in self.spent:
            self.spent.discard(node)
            self.freed += 1
            self.tracer.emit(now, node, "token_free", holder=node)
            self._release(node)
            return
        if mac.has_data():
            mac.kick()
        else:
            self.hold_timer = self.engine.after(
                self.hold_ticks, EventKind.TIMER, node, self._hold_expired
            )

    def _hold_expired(self, event: Event) -> None:
        self.hold_timer = None
        self._release(self.net.token_holder)

    def _release(self, node: int) -> None:
        self.passing = True
        successor = self.net.successor(node)
        if not self.params.token_frame:
            self._advance()
            return
        frame = Frame(
            id=self.frame_ids.next(),
            kind=FrameKind.TOKEN,
            source=node,
            final_destination=successor,
            payload_bits=0,
            created_at=self.engine.now,
            next_hop=successor,
            sender=node,
        )
        self.macs[node].send_control(frame)

    def _advance(self) -> None:
        holder = token_step(self.net)
        self.engine.at(self.engine.now, EventKind.TOKEN_GRANT, holder, self._grant)
