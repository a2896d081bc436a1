"""Batch evaluator for comparing scenarios across seeds."""

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import orjson

from src.errors import OutputError
from src.evaluator.charts import grouped_bar_svg
from src.scenario import Scenario, scenario_hash
from src.simulation import run_scenario
from src.util import format_kbps

logger = logging.getLogger("wpansim.compare")

METRICS = ("throughput_bps", "sent_bps", "received_bps", "hop_received_bps", "dropped_per_sec")
METRIC_TITLES = {
    "throughput_bps": ("Throughput", "bit/s"),
    "sent_bps": ("Traffic sent", "bit/s"),
    "received_bps": ("Traffic received", "bit/s"),
    "hop_received_bps": ("Traffic received at addressed hops", "bit/s"),
    "dropped_per_sec": ("Packets dropped", "packets/s"),
}


@dataclass
class RunRecord:
    """Result of one (scenario, seed) run."""
    scenario: str
    seed: int
    throughput_bps: float = 0.0
    sent_bps: float = 0.0
    received_bps: float = 0.0
    hop_received_bps: float = 0.0
    dropped_per_sec: float = 0.0
    dropped_total: int = 0
    data_transmissions: int = 0
    created: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    time: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class MetricStats:
    scenario: str
    metric: str
    mean: float
    std: Optional[float]
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ComparisonSummary:
    """Summary statistics for a comparison batch."""
    scenarios: List[str]
    seeds: List[int]
    duration: float
    stats: List[MetricStats]
    rankings: Dict[str, List[str]]
    failed_runs: int
    timestamp: str
    hashes: Dict[str, str] = field(default_factory=dict)

    def stat(self, scenario: str, metric: str) -> MetricStats:
        for s in self.stats:
            if s.scenario == scenario and s.metric == metric:
                return s
        raise KeyError((scenario, metric))

    def ranking_line(self, metric: str) -> str:
        return " > ".join(self.rankings.get(metric, []))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenarios": self.scenarios,
            "seeds": self.seeds,
            "duration": self.duration,
            "stats": [s.to_dict() for s in self.stats],
            "rankings": {m: self.ranking_line(m) for m in self.rankings},
            "failed_runs": self.failed_runs,
            "timestamp": self.timestamp,
            "scenario_hashes": dict(self.hashes),
        }


def evaluate_run(scenario: Scenario, seed: int) -> RunRecord:
    """Run one instance and flatten its global metrics; top-level for worker processes."""
    start_time = time.time()
    try:
        result = run_scenario(scenario.with_overrides(seed=seed))
    except Exception as e:
        return RunRecord(scenario.name, seed, time=time.time() - start_time, error=f"{type(e).__name__}: {e}")
    totals = result.report.totals
    ledger = result.report.ledger
    return RunRecord(
        scenario=scenario.name,
        seed=seed,
        throughput_bps=totals.throughput_bps,
        sent_bps=totals.sent_bps,
        received_bps=totals.received_bps,
        hop_received_bps=totals.hop_received_bps,
        dropped_per_sec=totals.dropped_per_sec,
        dropped_total=totals.dropped_total,
        data_transmissions=result.report.counters.get("data_transmissions", 0),
        created=ledger.created,
        delivered=ledger.delivered,
        dropped=ledger.dropped,
        in_flight=ledger.in_flight,
        time=time.time() - start_time,
    )


def common_duration(scenarios: Sequence[Scenario], duration: Optional[float] = None) -> float:
    """The duration every scenario runs with; mismatches fall back to the shortest."""
    if duration is not None:
        return duration
    durations = sorted({s.duration for s in scenarios})
    if len(durations) > 1:
        logger.warning(
            f"Scenario durations differ ({', '.join(f'{d:g}s' for d in durations)}); "
            f"comparing over the common {durations[0]:g}s"
        )
    return durations[0]


class BatchEvaluator:
    """Runs every (scenario, seed) pair and aggregates the metrics per scenario."""

    def __init__(
        self,
        scenarios: Sequence[Scenario],
        seeds: Sequence[int],
        duration: Optional[float] = None,
        parallel: int = 1,
        verbose: bool = True,
    ):
        """
        Initialize batch evaluator.

        Args:
            scenarios: Scenarios to compare, in presentation order
            seeds: Seeds each scenario runs with
            duration: Common run duration; defaults to the shortest scenario duration
            parallel: Number of worker processes (1 = sequential)
            verbose: Print per-run progress
        """
        if not scenarios:
            raise ValueError("compare needs at least one scenario")
        if not seeds:
            raise ValueError("compare needs at least one seed")
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ValueError(f"scenario names must be unique, got {names}")
        self.duration = common_duration(scenarios, duration)
        self.scenarios = [s.with_overrides(duration=self.duration) for s in scenarios]
        self.seeds = list(seeds)
        self.parallel = max(1, parallel)
        self.verbose = verbose
        self.results: List[RunRecord] = []

    def evaluate_batch(self) -> List[RunRecord]:
        jobs = [(s, seed) for s in self.scenarios for seed in self.seeds]
        if self.parallel == 1:
            records = []
            for scenario, seed in jobs:
                record = evaluate_run(scenario, seed)
                self._report_progress(record)
                records.append(record)
        else:
            with ProcessPoolExecutor(max_workers=self.parallel) as pool:
                futures = [pool.submit(evaluate_run, s, seed) for s, seed in jobs]
                records = []
                for future in futures:
                    record = future.result()
                    self._report_progress(record)
                    records.append(record)

        order = {s.name: i for i, s in enumerate(self.scenarios)}
        self.results = sorted(records, key=lambda r: (order[r.scenario], r.seed))
        return self.results

    def _report_progress(self, record: RunRecord) -> None:
        if not self.verbose:
            return
        if record.error:
            print(f"✗ {record.scenario} seed={record.seed} failed: {record.error}")
        else:
            print(
                f"✓ {record.scenario} seed={record.seed} "
                f"throughput={format_kbps(record.throughput_bps)} ({record.time:.1f}s)"
            )

    def generate_summary(self) -> ComparisonSummary:
        stats: List[MetricStats] = []
        for scenario in self.scenarios:
            ok = [r for r in self.results if r.scenario == scenario.name and r.error is None]
            for metric in METRICS:
                values = np.asarray([getattr(r, metric) for r in ok], dtype=np.float64)
                stats.append(
                    MetricStats(
                        scenario=scenario.name,
                        metric=metric,
                        mean=float(values.mean()) if values.size else 0.0,
                        std=float(values.std(ddof=1)) if values.size > 1 else None,
                        n=int(values.size),
                    )
                )
        rankings = {}
        for metric in METRICS:
            per_metric = [s for s in stats if s.metric == metric]
            rankings[metric] = [s.scenario for s in sorted(per_metric, key=lambda s: -s.mean)]
        return ComparisonSummary(
            scenarios=[s.name for s in self.scenarios],
            seeds=self.seeds,
            duration=self.duration,
            stats=stats,
            rankings=rankings,
            failed_runs=sum(1 for r in self.results if r.error),
            timestamp=datetime.now().isoformat(),
            hashes={s.name: scenario_hash(s) for s in self.scenarios},
        )

    def summary_text(self, summary: Optional[ComparisonSummary] = None) -> str:
        summary = summary or self.generate_summary()
        lines = [
            "=" * 80,
            "COMPARISON SUMMARY",
            "=" * 80,
            f"Scenarios:      {', '.join(summary.scenarios)}",
            f"Seeds:          {', '.join(str(s) for s in summary.seeds)}",
            f"Duration:       {summary.duration:g} s",
            f"Failed runs:    {summary.failed_runs}",
            "=" * 80,
            "",
            f"{'Scenario':<16} {'Metric':<18} {'Mean':>14} {'Stddev':>14} {'N':>4}",
            f"{'-' * 16} {'-' * 18} {'-' * 14} {'-' * 14} {'-' * 4}",
        ]
        for s in summary.stats:
            std = f"{s.std:14.3f}" if s.std is not None else f"{'-':>14}"
            lines.append(f"{s.scenario:<16} {s.metric:<18} {s.mean:14.3f} {std} {s.n:>4}")
        lines.append("")
        lines.append("RANKINGS:")
        for metric in METRICS:
            lines.append(f"  {metric:<18} {summary.ranking_line(metric)}")
        lines.append("")
        return "\n".join(lines)

    def print_summary(self) -> None:
        print(self.summary_text())

    def save_results(self, out_dir: str, format: str = "all") -> List[Path]:
        """
        Write comparison artifacts.

        Args:
            out_dir: Output directory, created if needed
            format: csv, summary, svg or all; compare.json is always written
        """
        summary = self.generate_summary()
        out = Path(out_dir)
        written: List[Path] = []
        try:
            out.mkdir(parents=True, exist_ok=True)
            json_path = out / "compare.json"
            json_path.write_bytes(
                orjson.dumps(
                    {"summary": summary.to_dict(), "runs": [r.to_dict() for r in self.results]},
                    option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS,
                )
            )
            written.append(json_path)

            if format in ("csv", "all"):
                csv_path = out / "compare.csv"
                with open(csv_path, "w", newline="") as f:
                    writer = csv.DictWriter(
                        f, fieldnames=["scenario", "metric", "mean", "std", "n", "scenario_hash", "seeds"]
                    )
                    writer.writeheader()
                    seeds = ";".join(str(seed) for seed in summary.seeds)
                    for s in summary.stats:
                        row = s.to_dict()
                        row["std"] = "" if s.std is None else row["std"]
                        row["scenario_hash"] = summary.hashes[s.scenario]
                        row["seeds"] = seeds
                        writer.writerow(row)
                written.append(csv_path)

            if format in ("summary", "all"):
                txt_path = out / "compare-summary.txt"
                txt_path.write_text(self.summary_text(summary), encoding="utf-8")
                written.append(txt_path)

            if format in ("svg", "all"):
                stamp = " ".join(
                    [f"{name}={summary.hashes[name]}" for name in summary.scenarios]
                    + ["seeds=" + ",".join(str(seed) for seed in summary.seeds)]
                )
                for metric in METRICS:
                    title, unit = METRIC_TITLES[metric]
                    per = [summary.stat(name, metric) for name in summary.scenarios]
                    svg_path = out / f"compare-{metric}.svg"
                    svg_path.write_text(
                        grouped_bar_svg(
                            f"{title} (mean ± stddev, {len(summary.seeds)} seed(s))",
                            summary.scenarios,
                            [s.mean for s in per],
                            [s.std for s in per],
                            unit,
                            desc=stamp,
                        ),
                        encoding="utf-8",
                    )
                    written.append(svg_path)
        except OSError as e:
            raise OutputError(f"Cannot write comparison results to {out}: {e}") from e

        if self.verbose:
            print(f"\n{'=' * 80}")
            print(f"Results saved to: {out}")
            print(f"{'=' * 80}")
        return written
