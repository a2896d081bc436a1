"""Logging setup and the per-event trace writer."""

import logging
import sys
from collections import deque
from typing import Deque, Dict, List, Optional, Tuple

LOG_FORMAT = "[%(levelname)s] %(message)s"


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Attach a single console handler to the `wpansim` logger hierarchy."""
    logger = logging.getLogger("wpansim")
    logger.setLevel(level.upper())
    if not logger.handlers:
        ch = logging.StreamHandler(sys.stderr)
        ch.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(ch)
    return logger


TraceEvent = Tuple[int, object, str, Tuple[Tuple[str, object], ...]]


def format_trace_line(event: TraceEvent) -> str:
    """Render one trace event as `t=<s> node=<id> kind=<event> detail=<...>`."""
    t, node, kind, detail = event
    detail_str = ";".join(f"{k}:{v}" for k, v in detail) if detail else "-"
    return f"t={t / 1e9:.9f} node={node} kind={kind} detail={detail_str}"


class TraceWriter:
    """
    Records simulation events, keeping a short in-memory tail and optionally
    writing every event to a trace file. A file starts with one `# key=value`
    header line built from `header`.
    """

    def __init__(
        self,
        filepath: Optional[str] = None,
        tail: int = 50,
        header: Optional[Dict[str, object]] = None,
    ):
        self.filepath = filepath
        self.lines_written = 0
        self._tail: Deque[TraceEvent] = deque(maxlen=tail)
        self._file = open(filepath, "w", encoding="utf-8") if filepath else None
        if self._file is not None and header:
            self._file.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        self.logger = logging.getLogger("wpansim.trace")
        if filepath:
            self.logger.debug(f"Trace file: {filepath}")

    def emit(self, t: int, node: object, kind: str, **detail: object) -> None:
        event = (t, node, kind, tuple(detail.items()))
        self._tail.append(event)
        if self._file is not None:
            self._file.write(format_trace_line(event) + "\n")
            self.lines_written += 1

    def tail(self) -> List[str]:
        """Last events, oldest first."""
        return [format_trace_line(e) for e in self._tail]

    def close(self) -> None:
        if self._file is not None:
            self._file.flush()
            self._file.close()
            self._file = None

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
