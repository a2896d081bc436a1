"""Self-contained SVG bar charts for run and comparison outputs."""

from html import escape
from typing import List, Optional, Sequence

WIDTH = 640
HEIGHT = 360
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 50
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948")


def _nice_max(value: float) -> float:
    if value <= 0:
        return 1.0
    magnitude = 10 ** len(str(int(value))) / 10
    for step in (1, 2, 2.5, 5, 10):
        if value <= step * magnitude:
            return step * magnitude
    return value


def _desc(desc: Optional[str]) -> List[str]:
    return [f"<desc>{escape(desc)}</desc>"] if desc else []


def _axes(parts: List[str], x0: float, y0: float, w: float, h: float, y_max: float, unit: str) -> None:
    parts.append(f'<line x1="{x0}" y1="{y0 + h}" x2="{x0 + w}" y2="{y0 + h}" stroke="#333"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + h}" stroke="#333"/>')
    for i in range(5):
        v = y_max * i / 4
        y = y0 + h - h * i / 4
        parts.append(f'<line x1="{x0 - 4}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="#333"/>')
        parts.append(
            f'<text x="{x0 - 6}" y="{y + 4:.1f}" font-size="10" text-anchor="end">{v:.4g}</text>'
        )
    parts.append(
        f'<text x="14" y="{y0 + h / 2:.1f}" font-size="11" text-anchor="middle" '
        f'transform="rotate(-90 14 {y0 + h / 2:.1f})">{escape(unit)}</text>'
    )


def grouped_bar_svg(
    title: str,
    labels: Sequence[str],
    values: Sequence[float],
    errors: Optional[Sequence[Optional[float]]] = None,
    unit: str = "",
    desc: Optional[str] = None,
) -> str:
    """One bar per label, with an optional ± error whisker. `desc` becomes the SVG <desc>."""
    errors = list(errors) if errors is not None else [None] * len(values)
    tops = [v + (e or 0.0) for v, e in zip(values, errors)]
    y_max = _nice_max(max(tops, default=0.0))
    x0, y0 = MARGIN_LEFT, MARGIN_TOP
    w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    slot = w / max(len(values), 1)
    bar = slot * 0.6

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        *_desc(desc),
        f'<text x="{WIDTH / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>',
    ]
    _axes(parts, x0, y0, w, h, y_max, unit)
    for i, (label, value, err) in enumerate(zip(labels, values, errors)):
        bh = h * value / y_max
        bx = x0 + slot * i + (slot - bar) / 2
        parts.append(
            f'<rect x="{bx:.1f}" y="{y0 + h - bh:.1f}" width="{bar:.1f}" height="{bh:.1f}" '
            f'fill="{PALETTE[i % len(PALETTE)]}"><title>{escape(label)}: {value:.4g}</title></rect>'
        )
        if err:
            cx = bx + bar / 2
            hi = y0 + h - h * (value + err) / y_max
            lo = y0 + h - h * max(value - err, 0.0) / y_max
            parts.append(f'<line x1="{cx:.1f}" y1="{hi:.1f}" x2="{cx:.1f}" y2="{lo:.1f}" stroke="#000"/>')
            parts.append(f'<line x1="{cx - 6:.1f}" y1="{hi:.1f}" x2="{cx + 6:.1f}" y2="{hi:.1f}" stroke="#000"/>')
            parts.append(f'<line x1="{cx - 6:.1f}" y1="{lo:.1f}" x2="{cx + 6:.1f}" y2="{lo:.1f}" stroke="#000"/>')
        parts.append(
            f'<text x="{bx + bar / 2:.1f}" y="{y0 + h + 18}" font-size="11" '
            f'text-anchor="middle">{escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def time_series_svg(
    title: str,
    starts: Sequence[float],
    panels: Sequence[tuple],
    desc: Optional[str] = None,
) -> str:
    """Stacked bar panels, one per (name, values, unit), sharing the bucket axis."""
    panel_h = 150
    height = MARGIN_TOP + len(panels) * (panel_h + 40)
    x0 = MARGIN_LEFT
    w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    n = max(len(starts), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">',
        *_desc(desc),
        f'<text x="{WIDTH / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>',
    ]
    for p, (name, values, unit) in enumerate(panels):
        y0 = MARGIN_TOP + p * (panel_h + 40)
        y_max = _nice_max(max(values, default=0.0))
        parts.append(f'<text x="{x0}" y="{y0 - 4}" font-size="12">{escape(name)}</text>')
        _axes(parts, x0, y0, w, panel_h, y_max, unit)
        for i, v in enumerate(values):
            bh = panel_h * v / y_max
            parts.append(
                f'<rect x="{x0 + w * i / n:.1f}" y="{y0 + panel_h - bh:.1f}" '
                f'width="{max(w / n - 1, 0.5):.1f}" height="{bh:.1f}" fill="{PALETTE[p % len(PALETTE)]}"/>'
            )
        if starts:
            parts.append(
                f'<text x="{x0}" y="{y0 + panel_h + 14}" font-size="10">{starts[0]:g} s</text>'
            )
            parts.append(
                f'<text x="{x0 + w}" y="{y0 + panel_h + 14}" font-size="10" '
                f'text-anchor="end">{starts[-1]:g} s</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
