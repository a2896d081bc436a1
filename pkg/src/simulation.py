"""Builds one simulation instance from a scenario and runs it to completion."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, Optional

from src import __version__
from src.app.traffic import TrafficGenerator
from src.mac.csma import MacLayer
from src.mac.frames import Frame, FrameIds, FrameKind
from src.metrics.collector import MetricsCollector, MetricsReport
from src.net.node import Node
from src.net.token import TokenRing
from src.net.topology import TopologyKind
from src.phy.channel import ChannelId, Medium, TransmissionRecord
from src.scenario import Scenario, scenario_hash
from src.sim.engine import NS_PER_SECOND, Engine, RunSummary, to_ticks
from src.sim.random import GENERATOR_NAME, RandomStream, StreamPurpose
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.simulation")


@dataclass
class RunResult:
    scenario: Scenario
    report: MetricsReport
    run_summary: RunSummary
    metadata: dict
    mac_state_seconds: Dict[int, Dict[str, float]] = field(default_factory=dict)
    mac_transitions: Dict[str, int] = field(default_factory=dict)
    roles: Dict[int, str] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.scenario.name

    @property
    def seed(self) -> int:
        return self.scenario.seed


class Simulation:
    """
    One (scenario, seed) instance: network, medium, per-node stacks and the
    ring token when the topology needs it. Single-threaded; shares nothing.

    Args:
        scenario: Resolved scenario, seed included
        tracer: Event trace; a tail-only tracer is created when omitted
    """

    def __init__(self, scenario: Scenario, tracer: Optional[TraceWriter] = None):
        self.scenario = scenario
        self.tracer = tracer if tracer is not None else TraceWriter()
        self.net = scenario.build_network()
        self.engine = Engine()
        self.t_end = to_ticks(scenario.duration)
        mac_params = scenario.effective_mac
        lookback = to_ticks(mac_params.channel_sensing_duration) + NS_PER_SECOND
        self.medium = Medium(scenario.phy, lookback=lookback)
        self.frame_ids = FrameIds()
        self.roles = {n: self.net.role_of(n).value for n in self.net.ids()}
        self.metrics = MetricsCollector(self.t_end, roles=self.roles)

        self.nodes: Dict[int, Node] = {}
        for node_id in self.net.ids():
            for channel in self.net.channels_of(node_id):
                self.medium.attach(node_id, channel)
            mac = MacLayer(
                node=node_id,
                params=mac_params,
                engine=self.engine,
                medium=self.medium,
                backoff_stream=RandomStream(scenario.seed, node_id, StreamPurpose.BACKOFF),
                channel_for=partial(self._channel_for, node_id),
                deliver=self._deliver,
                frame_ids=self.frame_ids,
                tracer=self.tracer,
            )
            self.nodes[node_id] = Node(self.net.nodes[node_id], self.net, mac, self.metrics, self.tracer)

        self.token: Optional[TokenRing] = None
        if self.net.kind is TopologyKind.RING:
            self.token = TokenRing(self.net, self.engine, scenario.token, self.frame_ids, self.tracer)
            for node in self.nodes.values():
                self.token.attach(node.mac)
                node.ring = self.token

        for node in self.nodes.values():
            profile = scenario.profiles.get(node.spec.role)
            if profile is None:
                continue
            node.generator = TrafficGenerator(
                node.id,
                profile,
                net=self.net,
                engine=self.engine,
                seed=scenario.seed,
                originate=node.originate,
                metrics=self.metrics,
                frame_ids=self.frame_ids,
                tracer=self.tracer,
                max_payload_bits=scenario.phy.max_payload_bits,
                strict_sizes=scenario.flags.strict_sizes,
            )

    def _channel_for(self, node: int, frame: Frame) -> ChannelId:
        return self.net.link_channel(node, frame.next_hop)

    def _deliver(self, record: TransmissionRecord, outcomes: Dict[int, bool]) -> None:
        frame = record.frame
        for listener, intact in outcomes.items():
            if intact:
                if frame.kind is FrameKind.DATA:
                    self.metrics.record_received(listener, frame.payload_bits, record.end)
                self.nodes[listener].mac.receive(frame, record.channel)
            elif listener == frame.next_hop:
                self.tracer.emit(
                    record.end, listener, "rx_collided",
                    frame=frame.id, type=frame.kind.value, **{"from": record.sender},
                )

    def run(self) -> RunResult:
        for node in self.nodes.values():
            node.mac.start()
        if self.token is not None:
            self.token.start()
        for node in self.nodes.values():
            if node.generator is not None:
                node.generator.start()

        summary = self.engine.run_until(self.t_end)
        report = self.metrics.report(self.scenario.bucket_width, self.scenario.warmup)
        report.counters.update(self._counters())

        transitions: Counter = Counter()
        for node in self.nodes.values():
            for (src, dst), n in node.mac.process.transitions.items():
                transitions[f"{src.value}->{dst.value}"] += n

        logger.debug(
            f"{self.scenario.name} seed={self.scenario.seed}: {summary.dispatched} events, "
            f"ledger {report.ledger.as_dict()}"
        )
        return RunResult(
            scenario=self.scenario,
            report=report,
            run_summary=summary,
            metadata=self.metadata(),
            mac_state_seconds={
                n: node.mac.process.seconds_in_states(self.engine.now) for n, node in self.nodes.items()
            },
            mac_transitions=dict(sorted(transitions.items())),
            roles=dict(self.roles),
        )

    def _counters(self) -> Dict[str, int]:
        macs = [node.mac for node in self.nodes.values()]
        counters = {
            "transmissions": self.medium.transmissions,
            "collided_transmissions": self.medium.collisions,
            "data_transmissions": sum(m.data_transmissions for m in macs),
            "acks_sent": sum(m.acks_sent for m in macs),
            "stray_acks": sum(m.stray_acks for m in macs),
            "forwarded": sum(node.forwarded for node in self.nodes.values()),
            "repeated": sum(node.repeated for node in self.nodes.values()),
            "stripped": sum(node.stripped for node in self.nodes.values()),
            "events_dispatched": self.engine.dispatched,
        }
        if self.token is not None:
            counters["token_grants"] = self.token.grants
            counters["token_resends"] = self.token.resends
            counters["token_frees"] = self.token.freed
        return counters

    def metadata(self) -> dict:
        s = self.scenario
        return {
            **artifact_stamp(s),
            "generator": GENERATOR_NAME,
            "version": __version__,
            "duration_s": s.duration,
            "warmup_s": s.warmup,
            "bucket_width_s": s.bucket_width,
            "time_resolution": "1ns",
            "topology": self.net.summary(),
        }


def artifact_stamp(scenario: Scenario) -> Dict[str, object]:
    """Scenario name, hash and seed carried by every artifact of a run."""
    return {
        "scenario": scenario.name,
        "scenario_hash": scenario_hash(scenario),
        "seed": scenario.seed,
    }


def run_scenario(scenario: Scenario, trace_path: Optional[str] = None) -> RunResult:
    """Run one instance; top-level so worker processes can call it."""
    header = artifact_stamp(scenario) if trace_path else None
    with TraceWriter(trace_path, header=header) as tracer:
        return Simulation(scenario, tracer).run()
