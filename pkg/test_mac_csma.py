"""Tests for slotted CSMA/CA, acknowledgements and the MAC process model."""

import pytest
from pydantic import ValidationError

from src.errors import MacLogicError
from src.evaluator.trace_analyzer import parse_trace_line
from src.mac.csma import EnqueueResult, MacLayer, MacParams, MacState, ProcessModel, ReceiveAction
from src.mac.frames import DropCause, Frame, FrameKind
from src.phy.channel import ChannelId, ChannelStatus
from src.sim.engine import to_ticks
from src.sim.random import RandomStream, StreamPurpose
from src.util.log import TraceWriter

CH = ChannelId(0)
SLOT = 320_000


class RecordingUser:
    def __init__(self):
        self.data = []
        self.drops = []

    def on_data(self, frame, t):
        self.data.append((frame.id, t))
        return ReceiveAction.ACK_AND_DELIVER

    def on_drop(self, frame, cause, t):
        self.drops.append((frame.id, cause, t))


@pytest.fixture
def trace():
    return TraceWriter(tail=100_000)


def build(engine, medium, frame_ids, trace, params=None, nodes=(0, 1), with_mac=(0, 1), seed=1):
    params = params or MacParams()
    macs = {}

    def deliver(record, outcomes):
        for node, intact in outcomes.items():
            if intact and node in macs:
                macs[node].receive(record.frame, record.channel)

    for n in nodes:
        medium.attach(n, CH)
        if n not in with_mac:
            continue
        mac = MacLayer(
            node=n,
            params=params,
            engine=engine,
            medium=medium,
            backoff_stream=RandomStream(seed, n, StreamPurpose.BACKOFF),
            channel_for=lambda frame: CH,
            deliver=deliver,
            frame_ids=frame_ids,
            tracer=trace,
        )
        mac.user = RecordingUser()
        mac.start()
        macs[n] = mac
    return macs


def data(frame_ids, source=1, dest=0, bits=1024):
    return Frame(id=frame_ids.next(), kind=FrameKind.DATA, source=source,
                 final_destination=dest, payload_bits=bits, created_at=0,
                 next_hop=dest, sender=source)


def events(trace, kind=None):
    parsed = [parse_trace_line(line) for line in trace.tail()]
    return [e for e in parsed if kind is None or e[2] == kind]


class TestParams:
    def test_defaults_follow_standard_values(self):
        p = MacParams()
        assert (p.ack_wait_duration, p.max_retransmissions) == (0.05, 5)
        assert (p.min_backoff_exponent, p.max_backoff_exponent, p.max_csma_backoffs) == (3, 5, 4)
        assert p.channel_sensing_duration == 0.1

    @pytest.mark.parametrize("lo,hi", [(6, 5), (0, 5), (3, 9)])
    def test_exponent_bounds(self, lo, hi):
        with pytest.raises(ValidationError):
            MacParams(min_backoff_exponent=lo, max_backoff_exponent=hi)


class TestProcessModel:
    def test_illegal_transition_raises(self):
        pm = ProcessModel(0)
        with pytest.raises(MacLogicError):
            pm.move(MacState.ACTIVE, 0)

    def test_time_accounting_sums_to_clock(self):
        pm = ProcessModel(0)
        pm.move(MacState.IDLE, 10)
        pm.move(MacState.SCANNING, 30)
        pm.move(MacState.ACTIVE, 60)
        seconds = pm.seconds_in_states(100)
        assert sum(seconds.values()) == pytest.approx(100e-9)
        assert seconds["Active"] == pytest.approx(40e-9)


class TestExchange:
    def test_enqueue_before_start_is_rejected(self, engine, medium, frame_ids, trace):
        mac = MacLayer(1, MacParams(), engine, medium, RandomStream(1, 1, StreamPurpose.BACKOFF),
                       lambda f: CH, lambda r, o: None, frame_ids, trace)
        with pytest.raises(MacLogicError):
            mac.enqueue(data(frame_ids))

    def test_acked_exchange(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        frame = data(frame_ids)
        assert macs[1].enqueue(frame) is EnqueueResult.ACCEPTED
        engine.run_until(to_ticks(1.0))
        assert [fid for fid, _ in macs[0].user.data] == [frame.id]
        assert macs[0].acks_sent == 1
        assert len(events(trace, "ack_rx")) == 1
        assert not macs[1].queue
        assert macs[1].user.drops == []
        assert macs[1].state is MacState.IDLE

    def test_starts_are_slot_aligned(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        for _ in range(5):
            macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(5.0))
        starts = [e[0] for e in events(trace) if e[2] in ("sense", "tx_start", "ack_tx")]
        assert starts
        assert all(t % SLOT == 0 for t in starts)

    def test_sensing_lasts_the_configured_window(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(1.0))
        sense = events(trace, "sense")[0][0]
        tx = events(trace, "tx_start")[0][0]
        # 0.1 s is 312.5 slots, so transmission waits for the next boundary
        assert tx - sense == 313 * SLOT

    def test_ack_follows_turnaround_on_slot(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(1.0))
        tx_end = events(trace, "tx_end")[0][0]
        ack = events(trace, "ack_tx")[0][0]
        assert ack >= tx_end + 192_000
        assert ack - (tx_end + 192_000) < SLOT

    def test_queue_overflow_drops(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace, params=MacParams(queue_capacity=2))
        results = [macs[1].enqueue(data(frame_ids)) for _ in range(3)]
        assert results == [EnqueueResult.ACCEPTED, EnqueueResult.ACCEPTED, EnqueueResult.DROPPED]
        assert [cause for _, cause, _ in macs[1].user.drops] == [DropCause.QUEUE_OVERFLOW]


class TestFailures:
    def test_busy_channel_ends_in_access_failure(self, engine, medium, frame_ids, trace, monkeypatch):
        macs = build(engine, medium, frame_ids, trace)
        monkeypatch.setattr(medium, "carrier_sense", lambda *a: ChannelStatus.BUSY)
        macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(2.0))
        backoffs = events(trace, "backoff")
        assert [e[3]["be"] for e in backoffs] == [3, 4, 5, 5, 5]
        assert [e[3]["nb"] for e in backoffs] == [0, 1, 2, 3, 4]
        assert [cause for _, cause, _ in macs[1].user.drops] == [DropCause.CHANNEL_ACCESS_FAILURE]
        assert events(trace, "tx_start") == []

    def test_missing_ack_retries_then_gives_up(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace, with_mac=(1,))
        frame = data(frame_ids)
        macs[1].enqueue(frame)
        engine.run_until(to_ticks(5.0))
        transmissions = [e for e in events(trace, "tx_start") if e[3]["type"] == "data"]
        assert len(transmissions) == 1 + 5
        assert [e[3]["attempt"] for e in transmissions] == [1, 2, 3, 4, 5, 6]
        assert len(events(trace, "ack_timeout")) == 6
        assert macs[1].user.drops == [(frame.id, DropCause.RETRY_EXHAUSTED, macs[1].user.drops[0][2])]
        # every retry restarts with the minimum exponent
        assert {e[3]["be"] for e in events(trace, "backoff")} == {3}

    def test_ack_timeout_fires_after_wait_duration(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace, with_mac=(1,))
        macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(1.0))
        tx_end = events(trace, "tx_end")[0][0]
        timeout = events(trace, "ack_timeout")[0][0]
        assert timeout - tx_end == to_ticks(0.05)


class TestReceive:
    def test_frames_for_others_are_ignored(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        other = data(frame_ids, source=1, dest=7)
        other.next_hop = 7
        assert macs[0].receive(other, CH) is ReceiveAction.IGNORE
        assert macs[0].user.data == []

    def test_unknown_ack_is_stray(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        ack = Frame(id=frame_ids.next(), kind=FrameKind.ACK, source=0, final_destination=1,
                    payload_bits=0, created_at=0, ack_for=12345, next_hop=1, sender=0)
        assert macs[1].receive(ack, CH) is ReceiveAction.STRAY_ACK
        assert macs[1].stray_acks == 1

    def test_duplicate_copy_is_acked_again(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace)
        frame = data(frame_ids)
        macs[0].receive(frame, CH)
        macs[0].receive(frame, CH)
        engine.run_until(to_ticks(0.1))
        assert macs[0].acks_sent == 2


class TestDoubleCca:
    def test_two_sensing_windows_per_attempt(self, engine, medium, frame_ids, trace):
        macs = build(engine, medium, frame_ids, trace, params=MacParams(double_cca=True))
        macs[1].enqueue(data(frame_ids))
        engine.run_until(to_ticks(1.0))
        assert len(events(trace, "sense")) == 2
        assert len(events(trace, "cca")) == 2
        assert len(events(trace, "tx_start")) == 1
