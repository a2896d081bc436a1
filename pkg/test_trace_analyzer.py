"""Tests for trace parsing and the protocol checks computed from a trace."""

import pytest

from src.evaluator import analyze_trace, print_trace_analysis
from src.evaluator.trace_analyzer import parse_trace_header, parse_trace_line, read_trace
from src.util.log import TraceWriter, format_trace_line

SLOT = 320_000


def write_trace(path, events):
    """Write (t_ns, node, kind, detail-dict) events through the real trace writer."""
    with TraceWriter(str(path)) as tw:
        for t, node, kind, detail in events:
            tw.emit(t, node, kind, **detail)
    return str(path)


def clean_exchange():
    """One acked data exchange from node 1 to node 0 on slot boundaries."""
    return [
        (0, 1, "state", {"from": "Init", "to": "Idle"}),
        (0, 1, "backoff", {"frame": 1, "be": 3, "nb": 0, "slots": 2}),
        (2 * SLOT, 1, "state", {"from": "Idle", "to": "Scanning"}),
        (2 * SLOT, 1, "sense", {"frame": 1, "channel": 0, "be": 3, "nb": 0}),
        (315 * SLOT, 1, "state", {"from": "Scanning", "to": "Active"}),
        (315 * SLOT, 1, "tx_start", {"frame": 1, "type": "data", "channel": 0, "to": 0, "attempt": 1,
                                      "end": f"{(315 * SLOT + 4_704_000) / 1e9:.9f}"}),
        (315 * SLOT + 4_704_000, 1, "tx_end", {"frame": 1, "type": "data", "collided": 0}),
        (331 * SLOT, 0, "ack_tx", {"frame": 1, "channel": 0, "to": 1}),
        (331 * SLOT + 352_000, 1, "ack_rx", {"frame": 1}),
        (331 * SLOT + 352_000, 0, "deliver", {"frame": 1, "bits": 1024}),
    ]


class TestParsing:
    def test_round_trip_through_writer_format(self):
        line = format_trace_line((1_500_000_000, 3, "backoff", (("be", 4), ("nb", 1))))
        assert line == "t=1.500000000 node=3 kind=backoff detail=be:4;nb:1"
        assert parse_trace_line(line) == (1_500_000_000, "3", "backoff", {"be": 4, "nb": 1})

    def test_empty_detail(self):
        assert parse_trace_line("t=0.000000001 node=2 kind=token detail=-") == (1, "2", "token", {})

    def test_garbage_is_none(self):
        assert parse_trace_line("Traceback (most recent call last):") is None


class TestAnalyze:
    def test_clean_exchange(self, tmp_path):
        m = analyze_trace(write_trace(tmp_path / "t.log", clean_exchange()))
        assert m["total_events"] == 10
        assert m["data_transmissions"] == 1
        assert m["ack_transmissions"] == 1
        assert m["deliveries"] == 1
        assert (m["min_backoff_exponent"], m["max_backoff_exponent"]) == (3, 3)
        assert m["slot_misaligned"] == 0
        assert m["illegal_transitions"] == 0
        assert m["data_overlaps"] == 0
        assert m["max_retransmissions"] == 0

    def test_flags_misaligned_start(self, tmp_path):
        events = clean_exchange()
        events[3] = (2 * SLOT + 1000, 1, "sense", {"frame": 1, "channel": 0, "be": 3, "nb": 0})
        m = analyze_trace(write_trace(tmp_path / "t.log", events))
        assert m["slot_misaligned"] == 1

    def test_flags_illegal_transition(self, tmp_path):
        events = clean_exchange() + [(400 * SLOT, 1, "state", {"from": "Idle", "to": "Active"})]
        m = analyze_trace(write_trace(tmp_path / "t.log", events))
        assert m["illegal_transitions"] == 1

    def test_counts_overlaps_per_channel(self, tmp_path):
        def tx(t, node, frame, channel):
            end = f"{(t + 4_704_000) / 1e9:.9f}"
            return (t, node, "tx_start", {"frame": frame, "type": "data", "channel": channel,
                                          "to": 0, "attempt": 1, "end": end})
        events = [tx(0, 1, 1, 0), tx(SLOT, 2, 2, 0), tx(SLOT, 3, 3, 1), tx(100 * SLOT, 4, 4, 0)]
        m = analyze_trace(write_trace(tmp_path / "t.log", events))
        assert m["data_overlaps"] == 1

    def test_retransmissions_and_drops(self, tmp_path):
        events = []
        for attempt in range(1, 4):
            t = attempt * 1000 * SLOT
            events.append((t, 1, "tx_start", {"frame": 9, "type": "data", "channel": 0, "to": 0,
                                              "attempt": attempt, "end": f"{(t + 4_704_000) / 1e9:.9f}"}))
        events.append((5000 * SLOT, 1, "drop", {"frame": 9, "cause": "RetryExhausted"}))
        events.append((5001 * SLOT, 0, "stale_drop", {"frame": 9, "cause": "QueueOverflow"}))
        m = analyze_trace(write_trace(tmp_path / "t.log", events))
        assert m["max_retransmissions"] == 2
        assert m["drop_causes"] == {"RetryExhausted": 1}
        assert m["stale_drops"] == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            analyze_trace(str(tmp_path / "absent.log"))

    def test_no_events(self, tmp_path):
        path = tmp_path / "empty.log"
        path.write_text("not a trace line\n\n")
        with pytest.raises(ValueError):
            analyze_trace(str(path))

    def test_header_line_is_read_not_skipped(self, tmp_path, caplog):
        path = tmp_path / "t.log"
        with TraceWriter(str(path), header={"scenario": "ring", "scenario_hash": "00ab", "seed": 3}) as tw:
            for t, node, kind, detail in clean_exchange():
                tw.emit(t, node, kind, **detail)
        with caplog.at_level("WARNING", logger="wpansim.trace"):
            m = analyze_trace(str(path))
        assert m["header"] == {"scenario": "ring", "scenario_hash": "00ab", "seed": "3"}
        assert m["total_events"] == len(clean_exchange())
        assert "malformed" not in caplog.text

    def test_header_only_trace_has_no_events(self, tmp_path):
        path = tmp_path / "t.log"
        TraceWriter(str(path), header={"seed": 1}).close()
        with pytest.raises(ValueError):
            analyze_trace(str(path))

    def test_read_trace_yields_events_only(self, tmp_path):
        path = tmp_path / "t.log"
        with TraceWriter(str(path), header={"seed": 1}) as tw:
            tw.emit(SLOT, 2, "token", holder=2)
        assert list(read_trace(str(path))) == [(SLOT, "2", "token", {"holder": 2})]
        assert parse_trace_line("# seed=1") is None
        assert parse_trace_header("# seed=1 scenario=star") == {"seed": "1", "scenario": "star"}

    def test_printout(self, tmp_path, capsys):
        print_trace_analysis(analyze_trace(write_trace(tmp_path / "t.log", clean_exchange())))
        out = capsys.readouterr().out
        assert "TRACE ANALYSIS RESULTS" in out
        assert "Slot Misaligned Starts: 0" in out
