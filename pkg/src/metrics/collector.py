"""Accumulators for the four reported metrics and the per-frame custody ledger."""

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.mac.frames import DropCause
from src.sim.engine import SimTime, to_seconds, to_ticks

logger = logging.getLogger("wpansim.metrics")

DELIVERED = "delivered"
DROPPED = "dropped"


@dataclass
class Bucket:
    start_s: float
    width_s: float
    throughput_bps: float
    sent_bps: float
    received_bps: float
    dropped_count: int


@dataclass
class MetricSet:
    throughput_bps: float = 0.0
    sent_bps: float = 0.0
    received_bps: float = 0.0
    hop_received_bps: float = 0.0
    dropped_per_sec: float = 0.0
    dropped_total: int = 0


@dataclass
class FrameLedger:
    """Whole-run frame accounting: created = delivered + dropped + in_flight."""
    created: int = 0
    delivered: int = 0
    dropped: int = 0

    @property
    def in_flight(self) -> int:
        return self.created - self.delivered - self.dropped

    def as_dict(self) -> Dict[str, int]:
        return {
            "created": self.created,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "in_flight": self.in_flight,
        }


@dataclass
class MetricsReport:
    bucket_width: float
    window_start: float
    window_end: float
    buckets: List[Bucket]
    totals: MetricSet
    drop_causes: Dict[str, int]
    per_node: Dict[int, MetricSet]
    per_role: Dict[str, MetricSet]
    ledger: FrameLedger
    counters: Dict[str, int] = field(default_factory=dict)
    latency_mean_s: Optional[float] = None
    latency_max_s: Optional[float] = None

    @property
    def window(self) -> float:
        return self.window_end - self.window_start

    def to_dict(self) -> dict:
        return {
            "bucket_width": self.bucket_width,
            "window": [self.window_start, self.window_end],
            "global": asdict(self.totals),
            "drop_causes": dict(self.drop_causes),
            "per_node": {str(n): asdict(m) for n, m in sorted(self.per_node.items())},
            "per_role": {r: asdict(m) for r, m in sorted(self.per_role.items())},
            "ledger": self.ledger.as_dict(),
            "counters": dict(self.counters),
            "latency": {"mean_s": self.latency_mean_s, "max_s": self.latency_max_s},
        }


class _Series:
    """Append-only (time, node, value) samples."""

    __slots__ = ("t", "node", "value")

    def __init__(self) -> None:
        self.t: List[SimTime] = []
        self.node: List[int] = []
        self.value: List[int] = []

    def add(self, t: SimTime, node: int, value: int) -> None:
        self.t.append(t)
        self.node.append(node)
        self.value.append(value)

    def __len__(self) -> int:
        return len(self.t)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.t, dtype=np.int64),
            np.asarray(self.node, dtype=np.int64),
            np.asarray(self.value, dtype=np.float64),
        )


class MetricsCollector:
    """
    Collects sent, received, sink and drop events during a run and turns them
    into a `MetricsReport` afterwards.

    `received` counts an intact data frame once per MAC that hears it on its
    channel, addressed or not. `hop_received` counts it only at the node it
    was addressed to, relays and duplicates included.

    Every application frame has one custodian: its source until the next hop
    accepts an intact copy. A drop only counts when the custodian reports it for
    a frame that is neither delivered nor dropped yet; other drops are stale.

    Args:
        t_end: Planned end of the run in ticks
        roles: Role name per node id, for the per-role breakdown
    """

    def __init__(self, t_end: SimTime, roles: Optional[Dict[int, str]] = None):
        self.t_end = t_end
        self.roles = dict(roles or {})
        self.sent = _Series()
        self.received = _Series()
        self.hop_received = _Series()
        self.sink = _Series()
        self.drops: List[Tuple[SimTime, int, DropCause, int]] = []
        self.latencies: List[SimTime] = []
        self.ledger = FrameLedger()
        self.duplicates = 0
        self.sink_duplicates = 0
        self.stale_drops = 0
        self._custodian: Dict[int, int] = {}
        self._terminal: Dict[int, str] = {}

    def record_sent(self, node: int, bits: int, t: SimTime, frame_id: int) -> None:
        if bits <= 0:
            raise ValueError(f"sent frame {frame_id} needs bits > 0")
        self.sent.add(t, node, bits)
        self.ledger.created += 1
        self._custodian[frame_id] = node

    def record_received(self, node: int, bits: int, t: SimTime) -> None:
        if bits <= 0:
            raise ValueError("received data needs bits > 0")
        self.received.add(t, node, bits)

    def record_hop_received(self, node: int, bits: int, t: SimTime) -> None:
        if bits <= 0:
            raise ValueError("received data needs bits > 0")
        self.hop_received.add(t, node, bits)

    def transfer_custody(self, frame_id: int, node: int) -> None:
        if frame_id not in self._terminal:
            self._custodian[frame_id] = node

    def record_duplicate(self, node: int, frame_id: int) -> None:
        self.duplicates += 1

    def record_sink(self, node: int, bits: int, t: SimTime, frame_id: int, created_at: SimTime) -> bool:
        """Count an end-to-end delivery; False for a repeated delivery of the same frame."""
        if self._terminal.get(frame_id) == DELIVERED:
            self.sink_duplicates += 1
            return False
        if frame_id in self._terminal:
            # a late copy outran the drop report; the delivery wins
            self.ledger.dropped -= 1
            self.drops = [d for d in self.drops if d[3] != frame_id]
        self._terminal[frame_id] = DELIVERED
        self.ledger.delivered += 1
        self.sink.add(t, node, bits)
        self.latencies.append(t - created_at)
        return True

    def record_dropped(self, node: int, cause: DropCause, t: SimTime, frame_id: int) -> bool:
        """Count a drop if `node` holds custody of a live frame; False for a stale drop."""
        if frame_id in self._terminal or self._custodian.get(frame_id) != node:
            self.stale_drops += 1
            return False
        self._terminal[frame_id] = DROPPED
        self.ledger.dropped += 1
        self.drops.append((t, node, DropCause(cause), frame_id))
        return True

    # ------------------------------------------------------------------ report

    def report(self, bucket_width: float, warmup: float) -> MetricsReport:
        """Per-bucket and global rates over [warmup, t_end); the last bucket may be partial."""
        if bucket_width <= 0:
            raise ConfigurationError(f"bucket width must be > 0, got {bucket_width}")
        start = to_ticks(warmup)
        end = self.t_end
        if start >= end:
            raise ConfigurationError(
                f"warmup {warmup}s must be shorter than the run ({to_seconds(end)}s)"
            )
        width = to_ticks(bucket_width)
        n_buckets = -(-(end - start) // width)
        edges = start + width * np.arange(n_buckets + 1, dtype=np.int64)
        edges[-1] = end
        widths_s = np.diff(edges) / 1e9
        window_s = to_seconds(end - start)

        def bucketed(series: _Series) -> np.ndarray:
            t, _, value = series.arrays()
            keep = (t >= start) & (t < end)
            idx = (t[keep] - start) // width
            return np.bincount(idx, weights=value[keep], minlength=n_buckets)[:n_buckets]

        throughput = bucketed(self.sink) / widths_s
        sent = bucketed(self.sent) / widths_s
        received = bucketed(self.received) / widths_s

        drop_t = np.asarray([d[0] for d in self.drops], dtype=np.int64)
        in_window = [d for d in self.drops if start <= d[0] < end]
        keep = (drop_t >= start) & (drop_t < end)
        drop_counts = np.bincount((drop_t[keep] - start) // width, minlength=n_buckets)[:n_buckets]

        buckets = [
            Bucket(
                start_s=to_seconds(int(edges[i])),
                width_s=float(widths_s[i]),
                throughput_bps=float(throughput[i]),
                sent_bps=float(sent[i]),
                received_bps=float(received[i]),
                dropped_count=int(drop_counts[i]),
            )
            for i in range(n_buckets)
        ]

        causes = Counter(d[2].value for d in in_window)
        totals = self._metric_set(None, start, end, window_s)
        per_node = {n: self._metric_set({n}, start, end, window_s) for n in self._nodes()}
        per_role: Dict[str, MetricSet] = {}
        for role in sorted(set(self.roles.values())):
            members = {n for n, r in self.roles.items() if r == role}
            per_role[role] = self._metric_set(members, start, end, window_s)

        latencies = np.asarray(self.latencies, dtype=np.float64) / 1e9
        return MetricsReport(
            bucket_width=bucket_width,
            window_start=to_seconds(start),
            window_end=to_seconds(end),
            buckets=buckets,
            totals=totals,
            drop_causes={c.value: causes.get(c.value, 0) for c in DropCause},
            per_node=per_node,
            per_role=per_role,
            ledger=FrameLedger(self.ledger.created, self.ledger.delivered, self.ledger.dropped),
            counters={
                "duplicates": self.duplicates,
                "sink_duplicates": self.sink_duplicates,
                "stale_drops": self.stale_drops,
            },
            latency_mean_s=float(latencies.mean()) if latencies.size else None,
            latency_max_s=float(latencies.max()) if latencies.size else None,
        )

    def _nodes(self) -> List[int]:
        nodes = set(self.roles)
        for series in (self.sent, self.received, self.hop_received, self.sink):
            nodes.update(series.node)
        nodes.update(d[1] for d in self.drops)
        return sorted(nodes)

    def _metric_set(self, nodes, start: SimTime, end: SimTime, window_s: float) -> MetricSet:
        def total_bits(series: _Series) -> float:
            t, node, value = series.arrays()
            keep = (t >= start) & (t < end)
            if nodes is not None:
                keep &= np.isin(node, list(nodes))
            return float(value[keep].sum())

        dropped = sum(
            1 for t, n, _, _ in self.drops if start <= t < end and (nodes is None or n in nodes)
        )
        return MetricSet(
            throughput_bps=total_bits(self.sink) / window_s,
            sent_bps=total_bits(self.sent) / window_s,
            received_bps=total_bits(self.received) / window_s,
            hop_received_bps=total_bits(self.hop_received) / window_s,
            dropped_per_sec=dropped / window_s,
            dropped_total=dropped,
        )
