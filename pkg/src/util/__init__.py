"""Small helpers shared across packages."""
import re
from typing import Optional


def locate_key_line(text: str, dotted_key: str) -> Optional[int]:
    """Find the 1-based line where a dotted TOML key is defined.

    Example:
        locate_key_line(text, "mac.ack_wait_duration") finds `ack_wait_duration = ...`
        inside the `[mac]` table.
    """
    parts = [p for p in dotted_key.split(".") if p and not p.isdigit()]
    if not parts:
        return None
    leaf = parts[-1]
    tables = parts[:-1]
    current_table = ""
    key_re = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
    table_re = re.compile(r"^\s*\[+\s*([^\]]+?)\s*\]+")
    wanted = ".".join(tables)
    fallback = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = table_re.match(line)
        if m:
            current_table = m.group(1)
            if current_table == dotted_key:
                return lineno
            continue
        if key_re.match(line):
            if current_table == wanted:
                return lineno
            if fallback is None:
                fallback = lineno
    return fallback


def format_kbps(bps: float) -> str:
    """Render a bit rate as kbit/s with three decimals."""
    return f"{bps / 1000.0:.3f} kbit/s"
