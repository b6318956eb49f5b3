"""Static SVG learning-curve plots, written without any external renderer."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING
from xml.sax.saxutils import escape

from mbae.tools import CurveParseError

if TYPE_CHECKING:
    from collections.abc import Sequence

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 180, 30, 60
TICKS = 5
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
REQUIRED_COLUMNS = ("episode", "mean_return", "std_return")


@dataclass
class Curve:
    label: str
    episodes: list[float]
    means: list[float]
    stds: list[float]


def read_curve(path: str | Path) -> Curve:
    """Parse the episode, mean_return and std_return columns of a learning-curve CSV.

    Raises:
        CurveParseError: Naming the file and line of a missing header, short row or non-numeric value.
        FileNotFoundError: If the file does not exist.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            msg = f"{path}:1: empty file"
            raise CurveParseError(msg)
        missing = [name for name in REQUIRED_COLUMNS if name not in header]
        if missing:
            msg = f"{path}:1: missing columns {', '.join(missing)}"
            raise CurveParseError(msg)
        index = [header.index(name) for name in REQUIRED_COLUMNS]

        curve = Curve(path.stem.removesuffix("_aggregate"), [], [], [])
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                msg = f"{path}:{line}: expected {len(header)} fields, got {len(row)}"
                raise CurveParseError(msg)
            try:
                episode, mean, std = (float(row[i]) for i in index)
            except ValueError as e:
                msg = f"{path}:{line}: {e}"
                raise CurveParseError(msg) from e
            curve.episodes.append(episode)
            curve.means.append(mean)
            curve.stds.append(std)
    return curve


def _span(low: float, high: float) -> tuple[float, float]:
    return (low - 1.0, high + 1.0) if high <= low else (low, high)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_svg(curves: Sequence[Curve]) -> str:
    """SVG text: one shaded +/-1 std band and one polyline per curve, with axes and a legend."""
    points = [c for c in curves if c.episodes]
    x_low, x_high = _span(
        min((min(c.episodes) for c in points), default=0.0), max((max(c.episodes) for c in points), default=0.0)
    )
    y_low, y_high = _span(
        min((min(m - s for m, s in zip(c.means, c.stds, strict=True)) for c in points), default=0.0),
        max((max(m + s for m, s in zip(c.means, c.stds, strict=True)) for c in points), default=0.0),
    )
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + (x - x_low) / (x_high - x_low) * plot_w

    def sy(y: float) -> float:
        return TOP + (y_high - y) / (y_high - y_low) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>',
    ]
    for i in range(TICKS + 1):
        x = x_low + (x_high - x_low) * i / TICKS
        y = y_low + (y_high - y_low) * i / TICKS
        parts.append(
            f'<text x="{_fmt(sx(x))}" y="{TOP + plot_h + 18}" font-size="11" text-anchor="middle">{x:g}</text>'
        )
        parts.append(f'<text x="{LEFT - 6}" y="{_fmt(sy(y) + 4)}" font-size="11" text-anchor="end">{y:.3g}</text>')
    parts.append(
        f'<text x="{LEFT + plot_w / 2:g}" y="{HEIGHT - 15}" font-size="13" text-anchor="middle">Episode</text>'
    )
    parts.append(
        f'<text x="18" y="{TOP + plot_h / 2:g}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + plot_h / 2:g})">Mean return</text>'
    )

    for k, curve in enumerate(curves):
        colour = PALETTE[k % len(PALETTE)]
        if curve.episodes:
            rows = list(zip(curve.episodes, curve.means, curve.stds, strict=True))
            upper = [f"{_fmt(sx(x))},{_fmt(sy(m + s))}" for x, m, s in rows]
            lower = [f"{_fmt(sx(x))},{_fmt(sy(m - s))}" for x, m, s in rows]
            band = " ".join(upper + lower[::-1])
            line = " ".join(f"{_fmt(sx(x))},{_fmt(sy(m))}" for x, m, _ in rows)
            parts.append(f'<polygon points="{band}" fill="{colour}" fill-opacity="0.2" stroke="none"/>')
            parts.append(f'<polyline points="{line}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        legend_y = TOP + 10 + 18 * k
        legend_x = LEFT + plot_w + 15
        parts.append(f'<rect x="{legend_x}" y="{legend_y - 8}" width="12" height="12" fill="{colour}"/>')
        parts.append(f'<text x="{legend_x + 18}" y="{legend_y + 2}" font-size="12">{escape(curve.label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_curves(csv_paths: Sequence[str | Path], out_svg: str | Path) -> None:
    """Overlay the learning curves in `csv_paths` into one SVG; identical inputs give identical bytes.

    Raises:
        CurveParseError: If no paths are given or a CSV is malformed.
    """
    if not csv_paths:
        msg = "no learning curves to plot"
        raise CurveParseError(msg)
    curves = [read_curve(path) for path in csv_paths]
    Path(out_svg).write_text(render_svg(curves), encoding="utf-8", newline="\n")
