"""Minimal SVG charts for curves and histograms."""

import math
from pathlib import Path
from typing import Callable, Dict, Sequence, Tuple, Union
from xml.sax.saxutils import escape

from src.utils.io.atomic import write_text

WIDTH = 480
HEIGHT = 360
MARGIN = 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2")

Series = Tuple[Sequence[float], Sequence[float]]


def _frame(title: str, x_label: str, y_label: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 8}" text-anchor="middle" font-size="12">{escape(x_label)}</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(y_label)}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>',
    ]


def _scaler(lo: float, hi: float, out_lo: float, out_hi: float) -> Callable[[float], float]:
    span = hi - lo if hi > lo else 1.0
    return lambda v: out_lo + (v - lo) / span * (out_hi - out_lo)


def line_chart(
    series: Dict[str, Series],
    title: str,
    x_label: str,
    y_label: str,
    log_y: bool = False,
) -> str:
    """Render named (x, y) polylines on shared axes."""
    transform = (lambda v: math.log10(max(v, 1e-300))) if log_y else (lambda v: v)
    xs = [float(x) for x_values, _ in series.values() for x in x_values]
    ys = [transform(float(y)) for _, y_values in series.values() for y in y_values]
    sx = _scaler(min(xs, default=0.0), max(xs, default=1.0), MARGIN, WIDTH - MARGIN)
    sy = _scaler(min(ys, default=0.0), max(ys, default=1.0), HEIGHT - MARGIN, MARGIN)

    parts = _frame(title, x_label, y_label)
    for i, (name, (x_values, y_values)) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        points = " ".join(
            f"{sx(float(x)):.2f},{sy(transform(float(y))):.2f}" for x, y in zip(x_values, y_values)
        )
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{points}"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 14 * (i + 1)}" text-anchor="end" '
            f'font-size="11" fill="{colour}">{escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(counts: Dict[int, int], title: str, x_label: str, y_label: str) -> str:
    """Render integer-keyed counts as vertical bars."""
    parts = _frame(title, x_label, y_label)
    if counts:
        keys = sorted(counts)
        lo, hi = keys[0], keys[-1]
        slots = hi - lo + 1
        slot_w = (WIDTH - 2 * MARGIN) / slots
        top = max(counts.values())
        for key in keys:
            bar_h = (HEIGHT - 2 * MARGIN) * counts[key] / top
            x = MARGIN + (key - lo) * slot_w
            parts.append(
                f'<rect x="{x + 1:.2f}" y="{HEIGHT - MARGIN - bar_h:.2f}" width="{max(slot_w - 2, 1):.2f}" '
                f'height="{bar_h:.2f}" fill="{PALETTE[0]}"><title>{key}: {counts[key]}</title></rect>'
            )
        parts.append(f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 14}" font-size="10">{lo}</text>')
        parts.append(
            f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 14}" text-anchor="end" font-size="10">{hi}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(path: Union[str, Path], svg: str) -> None:
    write_text(path, svg)
