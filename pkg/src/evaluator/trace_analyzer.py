"""
Trace Analysis Module for wpansim

This module reads the per-event trace written by `wpansim run --trace` and
computes counters and protocol checks over it: event totals, CSMA/CA bounds,
slot alignment, data-transmission overlap per channel and MAC state
transitions.
"""

import logging
import os
import re
from collections import Counter, defaultdict
from typing import Any, Dict, Iterator, List, Optional, Tuple

from src.mac.csma import LEGAL_TRANSITIONS, MacState

logger = logging.getLogger("wpansim.trace")

LINE_RE = re.compile(r"^t=(\S+) node=(\S+) kind=(\S+) detail=(.*)$")

# events that must start on a slot boundary
ALIGNED_KINDS = ("sense", "tx_start", "ack_tx")

LEGAL_STATE_PAIRS = {(a.value, b.value) for a, b in LEGAL_TRANSITIONS}


def _value(raw: str) -> Any:
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_trace_line(line: str) -> Optional[Tuple[int, str, str, Dict[str, Any]]]:
    """Split a trace line into (t in ns, node, kind, detail); None if it is not one."""
    m = LINE_RE.match(line.strip())
    if not m:
        return None
    t_raw, node, kind, detail_raw = m.groups()
    detail: Dict[str, Any] = {}
    if detail_raw != "-":
        for item in detail_raw.split(";"):
            key, _, raw = item.partition(":")
            detail[key] = _value(raw)
    return int(round(float(t_raw) * 1e9)), node, kind, detail


def parse_trace_header(line: str) -> Optional[Dict[str, Any]]:
    """Read a `# key=value ...` header line; None for any other line."""
    if not line.startswith("#"):
        return None
    header: Dict[str, Any] = {}
    for item in line[1:].split():
        key, sep, raw = item.partition("=")
        if sep:
            header[key] = raw
    return header


def read_trace(log_file_path: str) -> Iterator[Tuple[int, str, str, Dict[str, Any]]]:
    """Yield the parsed events of a trace file, skipping header and malformed lines."""
    with open(log_file_path, "r", encoding="utf-8") as f:
        for line in f:
            parsed = parse_trace_line(line)
            if parsed is not None:
                yield parsed


def analyze_trace(log_file_path: str, slot_ns: int = 320_000) -> Dict[str, Any]:
    """
    Analyze a simulation trace file.

    This function computes three groups of metrics:

    0. Header: the `# key=value` line written before the first event, if any

    1. Volume:
       - total_events, event_counts per kind, first/last event time
       - data / ack / token transmissions, deliveries

    2. CSMA/CA checks:
       - backoff exponent range over all backoff and sense events
       - max_csma_backoffs: the largest NB any backoff was drawn with
       - max_transmissions_per_frame: data transmissions of one frame by one sender
       - slot_misaligned: sense/tx/ack starts off the slot grid (1 ns tolerance)
       - illegal_transitions: state changes outside the MAC process model

    3. Medium checks:
       - data_overlaps: data transmissions overlapping an earlier one on the same channel
       - drops per cause, stale drops, collided receptions

    Args:
        log_file_path: Path to the trace file
        slot_ns: Slot length in nanoseconds

    Returns:
        Dictionary containing all computed metrics

    Raises:
        FileNotFoundError: If the trace file doesn't exist
        ValueError: If the trace holds no parsable event
    """
    if not os.path.exists(log_file_path):
        raise FileNotFoundError(f"Trace file not found: {log_file_path}")

    events = []
    header: Dict[str, Any] = {}
    skipped = 0
    with open(log_file_path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            if line.startswith("#"):
                header.update(parse_trace_header(line) or {})
                continue
            parsed = parse_trace_line(line)
            if parsed is None:
                skipped += 1
                continue
            events.append(parsed)
    if skipped:
        logger.warning(f"Skipped {skipped} malformed trace line(s) in {log_file_path}")
    if not events:
        raise ValueError(f"Trace file is empty or contains no valid events: {log_file_path}")

    metrics: Dict[str, Any] = {"header": header}
    kinds = Counter(kind for _, _, kind, _ in events)
    metrics["total_events"] = len(events)
    metrics["event_counts"] = dict(sorted(kinds.items()))
    metrics["first_event_s"] = events[0][0] / 1e9
    metrics["last_event_s"] = events[-1][0] / 1e9

    # ------------------------------------------------------------------ CSMA/CA
    exponents = [d["be"] for _, _, k, d in events if k in ("backoff", "sense") and "be" in d]
    metrics["min_backoff_exponent"] = min(exponents) if exponents else None
    metrics["max_backoff_exponent"] = max(exponents) if exponents else None
    nbs = [d["nb"] for _, _, k, d in events if k == "backoff" and "nb" in d]
    metrics["max_csma_backoffs"] = max(nbs) if nbs else 0

    tx_per_frame: Counter = Counter()
    data_tx: Dict[Any, List[Tuple[int, int]]] = defaultdict(list)
    for t, node, kind, d in events:
        if kind == "tx_start" and d.get("type") == "data":
            tx_per_frame[(node, d.get("frame"))] += 1
            end = int(round(float(d["end"]) * 1e9)) if "end" in d else t
            data_tx[d.get("channel")].append((t, end))
    metrics["data_transmissions"] = sum(tx_per_frame.values())
    metrics["max_transmissions_per_frame"] = max(tx_per_frame.values()) if tx_per_frame else 0
    metrics["max_retransmissions"] = max(0, metrics["max_transmissions_per_frame"] - 1)
    metrics["ack_transmissions"] = kinds.get("ack_tx", 0)
    metrics["token_transmissions"] = sum(
        1 for _, _, k, d in events if k == "tx_start" and d.get("type") == "token"
    )

    misaligned = [t for t, _, k, _ in events if k in ALIGNED_KINDS and t % slot_ns > 1 and slot_ns - t % slot_ns > 1]
    metrics["slot_misaligned"] = len(misaligned)

    illegal = [
        (d.get("from"), d.get("to"))
        for _, _, k, d in events
        if k == "state" and (d.get("from"), d.get("to")) not in LEGAL_STATE_PAIRS
    ]
    metrics["state_transitions"] = kinds.get("state", 0)
    metrics["illegal_transitions"] = len(illegal)

    # ------------------------------------------------------------------ medium
    overlaps = 0
    for spans in data_tx.values():
        busy_until = None
        for start, end in sorted(spans):
            if busy_until is not None and start < busy_until:
                overlaps += 1
            busy_until = end if busy_until is None else max(busy_until, end)
    metrics["data_overlaps"] = overlaps

    causes = Counter(d.get("cause") for _, _, k, d in events if k == "drop")
    metrics["drops"] = sum(causes.values())
    metrics["drop_causes"] = dict(sorted(causes.items()))
    metrics["stale_drops"] = kinds.get("stale_drop", 0)
    metrics["deliveries"] = kinds.get("deliver", 0)
    metrics["collided_receptions"] = kinds.get("rx_collided", 0)
    return metrics


def print_trace_analysis(metrics: Dict[str, Any]) -> None:
    """
    Pretty-print trace analysis metrics.

    Args:
        metrics: Dictionary returned by analyze_trace()
    """
    print("=" * 80)
    print("TRACE ANALYSIS RESULTS")
    print("=" * 80)
    print()

    print("📊 VOLUME")
    print("-" * 80)
    header = metrics.get("header") or {}
    if header:
        print("  Header:                 " + " ".join(f"{k}={v}" for k, v in header.items()))
    print(f"  Total Events:           {metrics.get('total_events', 0)}")
    print(f"  Time Span:              {metrics.get('first_event_s', 0):.3f} s .. {metrics.get('last_event_s', 0):.3f} s")
    print(f"  Data Transmissions:     {metrics.get('data_transmissions', 0)}")
    print(f"  ACK Transmissions:      {metrics.get('ack_transmissions', 0)}")
    print(f"  Token Transmissions:    {metrics.get('token_transmissions', 0)}")
    print(f"  Deliveries:             {metrics.get('deliveries', 0)}")
    print()

    print("📡 CSMA/CA CHECKS")
    print("-" * 80)
    print(f"  Backoff Exponent Range: {metrics.get('min_backoff_exponent')} .. {metrics.get('max_backoff_exponent')}")
    print(f"  Max CSMA Backoffs (NB): {metrics.get('max_csma_backoffs', 0)}")
    print(f"  Max Retransmissions:    {metrics.get('max_retransmissions', 0)}")
    print(f"  Slot Misaligned Starts: {metrics.get('slot_misaligned', 0)}")
    print(f"  Illegal Transitions:    {metrics.get('illegal_transitions', 0)} of {metrics.get('state_transitions', 0)}")
    print()

    print("⚠️  MEDIUM AND LOSSES")
    print("-" * 80)
    print(f"  Data Overlaps:          {metrics.get('data_overlaps', 0)}")
    print(f"  Collided Receptions:    {metrics.get('collided_receptions', 0)}")
    print(f"  Drops:                  {metrics.get('drops', 0)}")
    for cause, n in metrics.get("drop_causes", {}).items():
        print(f"    {cause:<22}{n}")
    print(f"  Stale Drops:            {metrics.get('stale_drops', 0)}")
    print()

    print("🔧 EVENT COUNTS:")
    print("-" * 80)
    for kind, n in metrics.get("event_counts", {}).items():
        print(f"  {kind:<24}{n}")
    print()
    print("=" * 80)
