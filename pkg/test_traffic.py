"""Tests for traffic profiles, destination rules, generators and the sink."""

from collections import Counter

import numpy as np
import pytest
from pydantic import ValidationError

from src.app import DestinationRule, Sink, TrafficProfile, choose_destination, packet_bits, start_generator
from src.app.traffic import TrafficGenerator
from src.errors import ConfigurationError
from src.mac.frames import Frame, FrameKind
from src.metrics import MetricsCollector
from src.net import build_cluster, build_ring, build_star
from src.sim import Constant, Engine, Exponential, RandomStream, StreamPurpose, Uniform, to_ticks


def profile(interarrival=None, size=None, start=None, stop="infinity", dest=DestinationRule.PAN_COORD):
    return TrafficProfile(
        interarrival=interarrival or Constant(value=1.0),
        packet_size=size or Constant(value=1024),
        start_time=start or Constant(value=20.0),
        stop_time=stop,
        destination=dest,
    )


@pytest.fixture
def harness(engine, frame_ids, tracer):
    """Runs one generator on a star and collects what it originates."""
    def run(prof, until, node=1, net=None, seed=1, strict=False):
        net = net or build_star(14)
        metrics = MetricsCollector(to_ticks(until))
        frames = []
        gen = start_generator(
            node, prof,
            net=net, engine=engine, seed=seed, originate=frames.append, metrics=metrics,
            frame_ids=frame_ids, tracer=tracer, max_payload_bits=1016, strict_sizes=strict,
        )
        engine.run_until(to_ticks(until))
        return gen, frames, metrics
    return run


class TestProfile:
    def test_stop_time_must_be_positive(self):
        with pytest.raises(ValidationError):
            profile(stop=-1.0)

    def test_zero_rate_is_rejected(self):
        with pytest.raises(ValidationError):
            profile(interarrival=Constant(value=0.0))

    def test_parses_from_plain_data(self):
        p = TrafficProfile.model_validate({
            "interarrival": {"kind": "exponential", "mean": 1.0},
            "packet_size": {"kind": "exponential", "mean": 1024},
            "start_time": {"kind": "uniform", "low": 20, "high": 21},
            "destination": "AllCoordinators",
        })
        assert isinstance(p.start_time, Uniform)
        assert p.stop_seconds == float("inf")


class TestPacketBits:
    @pytest.mark.parametrize("raw,strict,expected", [
        (3.2, False, 8),
        (1023.6, False, 1016),
        (1023.6, True, 1024),
        (2000.0, True, 2000),
        (500.4, False, 500),
    ])
    def test_clamp(self, raw, strict, expected):
        assert packet_bits(raw, 1016, strict) == expected


class TestDestinations:
    def test_pan_coord_takes_no_draw(self):
        net = build_star(3)
        s = RandomStream(5, 1, StreamPurpose.DESTINATION)
        assert choose_destination(1, DestinationRule.PAN_COORD, net, s) == 0
        assert s.random() == RandomStream(5, 1, StreamPurpose.DESTINATION).random()

    def test_ring_immediate_next(self):
        net = build_ring(5)
        s = RandomStream(5, 4, StreamPurpose.DESTINATION)
        assert choose_destination(4, DestinationRule.IMMEDIATE_NEXT, net, s) == 0

    def test_all_coordinators_excludes_self(self):
        net = build_cluster(3, 4)
        s = RandomStream(1, 0, StreamPurpose.DESTINATION)
        picks = {choose_destination(0, DestinationRule.ALL_COORDINATORS, net, s) for _ in range(200)}
        assert picks == {1, 2}

    def test_all_nodes_is_uniform_over_end_devices(self):
        net = build_star(14)
        s = RandomStream(3, 0, StreamPurpose.DESTINATION)
        counts = Counter(choose_destination(0, DestinationRule.ALL_NODES, net, s) for _ in range(14_000))
        assert set(counts) == set(range(1, 15))
        assert all(850 < c < 1150 for c in counts.values())

    @pytest.mark.parametrize("node,rule", [
        (0, DestinationRule.PAN_COORD),
        (1, DestinationRule.IMMEDIATE_NEXT),
    ])
    def test_no_eligible_destination(self, node, rule):
        s = RandomStream(1, node, StreamPurpose.DESTINATION)
        with pytest.raises(ConfigurationError):
            choose_destination(node, rule, build_star(3), s)


class TestGenerator:
    def test_constant_profile_with_uniform_start(self, harness):
        gen, frames, _ = harness(profile(start=Uniform(low=20.0, high=21.0)), until=30.0)
        assert to_ticks(20.0) <= gen.first_at < to_ticks(21.0)
        times = [f.created_at for f in frames]
        assert times[0] == gen.first_at
        assert set(np.diff(times)) == {to_ticks(1.0)}
        assert len(frames) in (10, 11)
        assert all(f.payload_bits == 1016 for f in frames)

    def test_strict_sizes_keep_raw_size(self, harness):
        _, frames, _ = harness(profile(), until=25.0, strict=True)
        assert {f.payload_bits for f in frames} == {1024}

    def test_stop_time_is_exclusive(self, harness):
        _, frames, metrics = harness(profile(stop=25.0), until=40.0)
        assert [f.created_at for f in frames] == [to_ticks(t) for t in (20, 21, 22, 23, 24)]
        assert metrics.ledger.created == 5

    def test_exponential_interarrival_mean(self, harness):
        prof = profile(interarrival=Exponential(mean=1.0), start=Constant(value=0.0))
        _, frames, _ = harness(prof, until=20_000.0, seed=9)
        gaps = np.diff([f.created_at for f in frames]) / 1e9
        assert gaps.mean() == pytest.approx(1.0, rel=0.02)

    def test_same_seed_same_frames(self, frame_ids, tracer):
        def draw(seed):
            eng = Engine()
            frames = []
            start_generator(
                1, profile(size=Exponential(mean=1024), start=Exponential(mean=1.0)),
                net=build_star(3), engine=eng, seed=seed, originate=frames.append,
                metrics=MetricsCollector(to_ticks(50.0)), frame_ids=frame_ids, tracer=tracer,
                max_payload_bits=1016,
            )
            eng.run_until(to_ticks(50.0))
            return [(f.created_at, f.payload_bits) for f in frames]

        assert draw(4) == draw(4)
        assert draw(4) != draw(5)

    def test_unreachable_rule_fails_at_construction(self, engine, frame_ids, tracer):
        with pytest.raises(ConfigurationError):
            TrafficGenerator(
                1, profile(dest=DestinationRule.IMMEDIATE_NEXT), build_star(3), engine, 1,
                lambda f: None, MetricsCollector(to_ticks(10.0)), frame_ids, tracer, 1016,
            )


class TestSink:
    def test_counts_each_frame_once(self, tracer):
        metrics = MetricsCollector(to_ticks(100.0))
        metrics.record_sent(1, 1024, to_ticks(1.0), 7)
        sink = Sink(0, metrics, tracer)
        frame = Frame(id=7, kind=FrameKind.DATA, source=1, final_destination=0,
                      payload_bits=1024, created_at=to_ticks(1.0))
        assert sink.receive(frame, to_ticks(2.0)) is True
        assert sink.receive(frame, to_ticks(3.0)) is False
        assert (sink.delivered, sink.duplicates) == (1, 1)
        assert metrics.ledger.delivered == 1

    def test_rejects_frame_for_other_node(self, tracer):
        sink = Sink(0, MetricsCollector(to_ticks(10.0)), tracer)
        frame = Frame(id=1, kind=FrameKind.DATA, source=1, final_destination=2,
                      payload_bits=8, created_at=0)
        with pytest.raises(ValueError):
            sink.receive(frame, 0)
