"""Launcher module - runs one scenario and writes its artifacts."""

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import orjson

from src.errors import ConfigurationError, EngineFault, OutputError
from src.evaluator.charts import time_series_svg
from src.scenario import Scenario
from src.simulation import RunResult, Simulation, artifact_stamp
from src.util import format_kbps
from src.util.log import TraceWriter

logger = logging.getLogger("wpansim.launcher")

CSV_HEADER = ["bucket_start_s", "throughput_bps", "sent_bps", "received_bps", "dropped_count"]
FORMATS = ("csv", "summary", "svg", "all")


@dataclass
class RunArtifacts:
    result: RunResult
    files: List[Path] = field(default_factory=list)


def _rate(v: float) -> str:
    return f"{v:.6f}"


def render_csv(result: RunResult) -> str:
    """Bucket rows, the GLOBAL row, then `#` metadata lines."""
    report = result.report
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for b in report.buckets:
        writer.writerow([
            f"{b.start_s:.3f}",
            _rate(b.throughput_bps),
            _rate(b.sent_bps),
            _rate(b.received_bps),
            b.dropped_count,
        ])
    t = report.totals
    writer.writerow(["GLOBAL", _rate(t.throughput_bps), _rate(t.sent_bps), _rate(t.received_bps), t.dropped_total])
    meta = result.metadata
    for key in ("scenario", "seed", "scenario_hash", "generator", "version"):
        buf.write(f"# {key}={meta[key]}\n")
    return buf.getvalue()


def render_summary(result: RunResult) -> str:
    """Human-readable tables of the run."""
    report = result.report
    meta = result.metadata
    t = report.totals
    lines = [
        "=" * 80,
        f"RUN SUMMARY: {meta['scenario']} (seed {meta['seed']})",
        "=" * 80,
        f"Scenario hash:    {meta['scenario_hash']}",
        f"Generator:        {meta['generator']}  version {meta['version']}",
        f"Topology:         {meta['topology']['kind']}, {len(meta['topology']['nodes'])} nodes, "
        f"{len(meta['topology']['channels'])} channel(s)",
        f"Window:           {report.window_start:.3f} s .. {report.window_end:.3f} s "
        f"({report.window:.3f} s), buckets of {report.bucket_width:g} s",
        "=" * 80,
        "",
        "GLOBAL METRICS",
        "-" * 80,
        f"  Throughput:         {format_kbps(t.throughput_bps)}",
        f"  Traffic sent:       {format_kbps(t.sent_bps)}",
        f"  Traffic received:   {format_kbps(t.received_bps)}",
        f"  Addressed-hop rx:   {format_kbps(t.hop_received_bps)}",
        f"  Packets dropped:    {t.dropped_total} ({t.dropped_per_sec:.4f} /s)",
        "",
        "DROP CAUSES",
        "-" * 80,
    ]
    for cause, n in report.drop_causes.items():
        lines.append(f"  {cause:<22}{n}")
    ledger = report.ledger
    lines += [
        "",
        "FRAME LEDGER (whole run)",
        "-" * 80,
        f"  created {ledger.created} = delivered {ledger.delivered} + dropped {ledger.dropped} "
        f"+ in flight {ledger.in_flight}",
        "",
        "COUNTERS",
        "-" * 80,
    ]
    for key, value in report.counters.items():
        lines.append(f"  {key:<24}{value}")
    if report.latency_mean_s is not None:
        lines.append(f"  {'latency_mean_s':<24}{report.latency_mean_s:.6f}")
        lines.append(f"  {'latency_max_s':<24}{report.latency_max_s:.6f}")

    header = f"{'':<16} {'Throughput':>14} {'Sent':>14} {'Received':>14} {'Dropped':>8}"
    rule = f"{'-' * 16} {'-' * 14} {'-' * 14} {'-' * 14} {'-' * 8}"
    lines += ["", "PER ROLE (bit/s)", header.replace("    ", "Role", 1), rule]
    for role, m in report.per_role.items():
        lines.append(
            f"{role:<16} {m.throughput_bps:14.3f} {m.sent_bps:14.3f} {m.received_bps:14.3f} {m.dropped_total:>8}"
        )
    lines += ["", "PER NODE (bit/s)", header.replace("    ", "Node", 1), rule]
    for node, m in report.per_node.items():
        label = f"{node} ({result.roles.get(node, '?')[:3]})"
        lines.append(
            f"{label:<16} {m.throughput_bps:14.3f} {m.sent_bps:14.3f} {m.received_bps:14.3f} {m.dropped_total:>8}"
        )

    state_totals: Dict[str, float] = defaultdict(float)
    for per_state in result.mac_state_seconds.values():
        for state, seconds in per_state.items():
            state_totals[state] += seconds
    lines += ["", "MAC STATE TIME (summed over nodes)", "-" * 80]
    for state, seconds in state_totals.items():
        lines.append(f"  {state:<12}{seconds:14.3f} s")
    lines.append("  transitions: " + ", ".join(f"{k}={v}" for k, v in result.mac_transitions.items()))

    lines += [
        "",
        "TIME SERIES",
        f"{'Start (s)':>10} {'Throughput':>14} {'Sent':>14} {'Received':>14} {'Dropped':>8}",
        f"{'-' * 10} {'-' * 14} {'-' * 14} {'-' * 14} {'-' * 8}",
    ]
    for b in report.buckets:
        lines.append(
            f"{b.start_s:10.3f} {b.throughput_bps:14.3f} {b.sent_bps:14.3f} "
            f"{b.received_bps:14.3f} {b.dropped_count:>8}"
        )
    lines.append("")
    return "\n".join(lines)


def stamp_text(stamp: Dict[str, object]) -> str:
    return " ".join(f"{k}={v}" for k, v in stamp.items())


def render_svg(result: RunResult) -> str:
    buckets = result.report.buckets
    meta = result.metadata
    return time_series_svg(
        f"{result.name} (seed {result.seed})",
        [b.start_s for b in buckets],
        [
            ("Throughput", [b.throughput_bps for b in buckets], "bit/s"),
            ("Traffic sent", [b.sent_bps for b in buckets], "bit/s"),
            ("Traffic received", [b.received_bps for b in buckets], "bit/s"),
            ("Packets dropped", [float(b.dropped_count) for b in buckets], "packets"),
        ],
        desc=stamp_text({k: meta[k] for k in ("scenario", "scenario_hash", "seed")}),
    )


def launch_run(
    scenario: Scenario,
    out_dir: str,
    trace: bool = False,
    format: str = "all",
    verbose: bool = True,
) -> RunArtifacts:
    """Run a scenario and write `<out>/<name>-<seed>.*` artifacts.

    Raises:
        ConfigurationError: The scenario cannot be built
        OutputError: The output directory or a file cannot be written
        EngineFault: An exception escaped the event loop
    """
    if format not in FORMATS:
        raise ConfigurationError(f"unknown format '{format}', expected one of {', '.join(FORMATS)}")
    out = Path(out_dir)
    stem = f"{scenario.name}-{scenario.seed}"
    try:
        out.mkdir(parents=True, exist_ok=True)
        tracer = TraceWriter(
            str(out / f"{stem}-trace.log") if trace else None,
            header=artifact_stamp(scenario) if trace else None,
        )
    except OSError as e:
        raise OutputError(f"Cannot write to output directory {out}: {e}") from e

    if verbose:
        print(f"\n{'=' * 80}")
        print(f"Running scenario: {scenario.name} (seed {scenario.seed}, {scenario.duration:g} s)")
        print(f"{'=' * 80}")

    try:
        sim = Simulation(scenario, tracer)
        try:
            result = sim.run()
        except Exception as e:
            logger.debug("engine fault", exc_info=True)
            raise EngineFault(
                f"{type(e).__name__}: {e} (simulated t={sim.engine.now / 1e9:.9f}s)",
                trace_tail=tracer.tail(),
            ) from e
    finally:
        tracer.close()

    files: List[Path] = []
    try:
        meta_path = out / f"{stem}-meta.json"
        meta_path.write_bytes(
            orjson.dumps(
                {**result.metadata, "report": result.report.to_dict()},
                option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS,
            )
        )
        files.append(meta_path)
        if format in ("csv", "all"):
            csv_path = out / f"{stem}.csv"
            csv_path.write_text(render_csv(result), encoding="utf-8")
            files.append(csv_path)
        if format in ("summary", "all"):
            summary_path = out / f"{stem}-summary.txt"
            summary_path.write_text(render_summary(result), encoding="utf-8")
            files.append(summary_path)
        if format in ("svg", "all"):
            svg_path = out / f"{stem}.svg"
            svg_path.write_text(render_svg(result), encoding="utf-8")
            files.append(svg_path)
    except OSError as e:
        raise OutputError(f"Cannot write results to {out}: {e}") from e
    if trace:
        files.append(out / f"{stem}-trace.log")

    if verbose:
        t = result.report.totals
        print(f"Throughput:       {format_kbps(t.throughput_bps)}")
        print(f"Traffic sent:     {format_kbps(t.sent_bps)}")
        print(f"Traffic received: {format_kbps(t.received_bps)}")
        print(f"Packets dropped:  {t.dropped_total}")
        for path in files:
            print(f"  wrote {path}")
        if trace:
            print(f"  trace holds {tracer.lines_written} events")
        print(f"{'=' * 80}")
    return RunArtifacts(result=result, files=files)
