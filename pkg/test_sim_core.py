"""Tests for the event engine, random streams and distributions."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from src.errors import SchedulingError
from src.sim import (
    Constant,
    Engine,
    EventKind,
    Exponential,
    RandomStream,
    StreamPurpose,
    Uniform,
    sample,
    to_seconds,
    to_ticks,
)


def _recorder(log):
    def action(event):
        log.append((event.time, event.payload))
    return action


class TestEngine:
    def test_dispatches_in_time_order(self, engine):
        log = []
        for t, tag in [(30, "c"), (10, "a"), (20, "b")]:
            engine.at(t, EventKind.TIMER, None, _recorder(log), tag)
        engine.run_until(100)
        assert [tag for _, tag in log] == ["a", "b", "c"]

    def test_ties_break_by_schedule_order(self, engine):
        log = []
        engine.at(5, EventKind.TIMER, None, _recorder(log), "A")
        engine.at(5, EventKind.TIMER, None, _recorder(log), "B")
        engine.run_until(10)
        assert [tag for _, tag in log] == ["A", "B"]

    def test_schedule_in_past_is_rejected(self, engine):
        engine.at(100, EventKind.TIMER, None, lambda e: None)
        engine.run_until(100)
        with pytest.raises(SchedulingError):
            engine.at(99, EventKind.TIMER, None, lambda e: None)

    def test_event_scheduled_at_now_runs_in_same_pass(self, engine):
        log = []

        def chain(event):
            log.append(event.time)
            if len(log) < 3:
                engine.at(event.time, EventKind.TIMER, None, chain)

        engine.at(7, EventKind.TIMER, None, chain)
        engine.run_until(7)
        assert log == [7, 7, 7]

    def test_empty_queue_parks_clock_at_end(self, engine):
        summary = engine.run_until(to_ticks(5.0))
        assert summary.dispatched == 0
        assert summary.clock_seconds == 5.0

    def test_events_after_end_stay_pending(self, engine):
        log = []
        engine.at(5, EventKind.TIMER, None, _recorder(log), "in")
        engine.at(15, EventKind.TIMER, None, _recorder(log), "out")
        summary = engine.run_until(10)
        assert [tag for _, tag in log] == ["in"]
        assert summary.pending == 1
        assert engine.now == 10

    @pytest.mark.parametrize("t_end", [0, -5])
    def test_non_positive_end_is_rejected(self, engine, t_end):
        with pytest.raises(SchedulingError):
            engine.run_until(t_end)

    def test_cancelled_events_are_skipped(self, engine):
        log = []
        handle = engine.at(5, EventKind.TIMER, None, _recorder(log), "x")
        handle.cancel()
        summary = engine.run_until(10)
        assert log == []
        assert summary.cancelled == 1

    def test_tick_conversion_is_exact_for_slots(self):
        assert to_ticks(320e-6) == 320_000
        assert to_ticks(0.1) == 100_000_000
        assert to_seconds(to_ticks(620.0)) == 620.0

    def test_million_ticks_land_exactly_on_the_end(self, engine):
        slot = 320_000
        last = []

        def tick(event):
            last[:] = [event.time]
            engine.after(slot, EventKind.TIMER, None, tick)

        engine.at(slot, EventKind.TIMER, None, tick)
        summary = engine.run_until(1_000_000 * slot)
        assert summary.dispatched == 1_000_000
        assert summary.clock == 320_000_000_000
        assert last == [summary.clock]
        assert summary.pending == 1


class TestRandomStreams:
    def test_same_seed_and_stream_reproduce(self):
        a = RandomStream(7, 3, StreamPurpose.BACKOFF)
        b = RandomStream(7, 3, StreamPurpose.BACKOFF)
        assert [a.random() for _ in range(50)] == [b.random() for _ in range(50)]

    def test_distinct_streams_differ(self):
        a = RandomStream(7, 3, StreamPurpose.BACKOFF)
        b = RandomStream(7, 3, StreamPurpose.SIZE)
        c = RandomStream(7, 4, StreamPurpose.BACKOFF)
        first = [a.random() for _ in range(10)]
        assert first != [b.random() for _ in range(10)]
        assert first != [c.random() for _ in range(10)]

    def test_integer_below_range(self):
        s = RandomStream(1, 0, StreamPurpose.BACKOFF)
        draws = {s.integer_below(8) for _ in range(2000)}
        assert draws == set(range(8))

    def test_uniform_stays_below_high(self):
        s = RandomStream(1, 0, StreamPurpose.START)
        values = [s.uniform(20.0, 21.0) for _ in range(10_000)]
        assert min(values) >= 20.0
        assert max(values) < 21.0

    @pytest.mark.parametrize(
        "a, b",
        [
            ((7, 3, StreamPurpose.BACKOFF), (7, 3, StreamPurpose.SIZE)),
            ((7, 3, StreamPurpose.INTERARRIVAL), (7, 4, StreamPurpose.INTERARRIVAL)),
        ],
    )
    def test_streams_are_independent(self, a, b):
        x, y = RandomStream(*a), RandomStream(*b)
        table = np.zeros((10, 10), dtype=int)
        for _ in range(20_000):
            table[int(x.random() * 10), int(y.random() * 10)] += 1
        _, p, _, _ = stats.chi2_contingency(table)
        assert p > 1e-4


class TestDistributions:
    def test_constant_is_exact(self):
        s = RandomStream(1, 0, StreamPurpose.INTERARRIVAL)
        d = Constant(value=1.0)
        assert all(sample(d, s) == 1.0 for _ in range(1000))

    def test_exponential_passes_ks(self):
        s = RandomStream(11, 0, StreamPurpose.INTERARRIVAL)
        values = np.array([sample(Exponential(mean=1.0), s) for _ in range(100_000)])
        result = stats.kstest(values, "expon", args=(0, 1.0))
        assert result.pvalue > 0.001

    def test_uniform_passes_ks(self):
        s = RandomStream(11, 0, StreamPurpose.START)
        values = np.array([sample(Uniform(low=20.0, high=21.0), s) for _ in range(100_000)])
        result = stats.kstest(values, "uniform", args=(20.0, 1.0))
        assert result.pvalue > 0.001

    def test_exponential_mean_is_positive(self):
        with pytest.raises(ValidationError):
            Exponential(mean=0)

    def test_uniform_needs_low_below_high(self):
        with pytest.raises(ValidationError):
            Uniform(low=5.0, high=5.0)

    def test_constant_rejects_negative(self):
        with pytest.raises(ValidationError):
            Constant(value=-1.0)

    def test_str_renders_family(self):
        assert str(Uniform(low=20, high=21)) == "Uniform(20,21)"
        assert str(Exponential(mean=1024)) == "Exponential(1024)"
