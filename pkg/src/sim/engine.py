"""Event queue and simulation clock.

Time is kept in integer nanoseconds so slot arithmetic stays exact over any run
length. Events dispatch in (time, seq) order; seq is issued at scheduling time.
"""

import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional, Tuple

from src.errors import SchedulingError

SimTime = int
NS_PER_SECOND = 1_000_000_000

logger = logging.getLogger("wpansim.engine")


def to_ticks(seconds: float) -> SimTime:
    """Seconds to engine ticks (nanoseconds), rounded to the nearest tick."""
    return int(round(seconds * NS_PER_SECOND))


def to_seconds(ticks: SimTime) -> float:
    return ticks / NS_PER_SECOND


class EventKind(str, Enum):
    TX_START = "tx_start"
    TX_END = "tx_end"
    TIMER = "timer"
    GENERATOR_TICK = "generator_tick"
    TOKEN_GRANT = "token_grant"


@dataclass(eq=False)
class Event:
    """A scheduled callback.

    `target` names the node or channel the event belongs to and only serves
    tracing; `action(event)` does the work.
    """
    time: SimTime
    kind: EventKind
    target: Any
    action: Callable[["Event"], None]
    payload: Any = None
    seq: int = -1
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


@dataclass
class RunSummary:
    clock: SimTime
    dispatched: int
    cancelled: int
    pending: int

    @property
    def clock_seconds(self) -> float:
        return to_seconds(self.clock)


@dataclass
class Engine:
    """Single-threaded discrete-event engine."""
    now: SimTime = 0
    dispatched: int = 0
    skipped: int = 0
    _seq: int = 0
    _heap: List[Tuple[SimTime, int, Event]] = field(default_factory=list)
    on_dispatch: Optional[Callable[[Event], None]] = None

    def schedule(self, event: Event) -> Event:
        """Enqueue an event; the returned event doubles as its cancellation handle."""
        if event.time < self.now:
            raise SchedulingError(
                f"Cannot schedule {event.kind.value} at t={to_seconds(event.time):.9f}s, "
                f"clock is already at t={to_seconds(self.now):.9f}s"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.time, event.seq, event))
        return event

    def at(
        self,
        time: SimTime,
        kind: EventKind,
        target: Any,
        action: Callable[[Event], None],
        payload: Any = None,
    ) -> Event:
        return self.schedule(Event(time, kind, target, action, payload))

    def after(
        self,
        delay: SimTime,
        kind: EventKind,
        target: Any,
        action: Callable[[Event], None],
        payload: Any = None,
    ) -> Event:
        return self.schedule(Event(self.now + delay, kind, target, action, payload))

    @property
    def pending(self) -> int:
        return len(self._heap)

    def run_until(self, t_end: SimTime) -> RunSummary:
        """Dispatch every event with time <= t_end, then park the clock at t_end."""
        if t_end <= 0:
            raise SchedulingError("run_until needs t_end > 0")
        if t_end < self.now:
            raise SchedulingError(
                f"run_until({to_seconds(t_end)}) is before the clock ({to_seconds(self.now)})"
            )
        heap = self._heap
        hook = self.on_dispatch
        while heap and heap[0][0] <= t_end:
            time, _, event = heapq.heappop(heap)
            if event.cancelled:
                self.skipped += 1
                continue
            self.now = time
            self.dispatched += 1
            if hook is not None:
                hook(event)
            event.action(event)
        self.now = t_end
        logger.debug(
            f"run_until t={to_seconds(t_end):.3f}s: {self.dispatched} dispatched, "
            f"{len(heap)} pending"
        )
        return RunSummary(
            clock=self.now,
            dispatched=self.dispatched,
            cancelled=self.skipped,
            pending=len(heap),
        )
