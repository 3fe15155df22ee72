"""Machine-readable and visual outputs: CSV tables and SVG band plots.

All emitters are pure: identical inputs produce byte-identical text. CSV is
RFC-4180-style with a header row and LF line endings; SVG sticks to a 1.1
subset (polyline, line, text, rect).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

from .campaign import ComparisonResult
from .core.types import TrialRecord
from .stats import Band


def emit_timeseries_csv(trials: Sequence[TrialRecord]) -> str:
    """One row per crash event, plus a (0, 0) anchor row per trial."""
    if not trials:
        raise ValueError("need at least one trial")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["fuzzer", "target", "seed_config", "trial", "time",
                     "cumulative_crashes"])
    ordered = sorted(trials, key=lambda tr: (tr.fuzzer_id, tr.target_id,
                                             tr.seed_config_id, tr.trial_index))
    for tr in ordered:
        key = [tr.fuzzer_id, tr.target_id, tr.seed_config_id, tr.trial_index]
        writer.writerow(key + [f"{0.0:.6f}", 0])
        for count, ev in enumerate(tr.crashes, start=1):
            writer.writerow(key + [f"{ev.at:.6f}", count])
    return out.getvalue()


def emit_comparison_table(rows: Sequence[tuple[str, str, ComparisonResult]]) -> str:
    """Comparison CSV, one row per (target, seed config, time point)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["target", "seed_config", "time", "median_a", "median_b",
                     "p_value", "a12"])
    for target_id, seed_id, res in rows:
        writer.writerow([target_id, seed_id, f"{res.at_time:.6f}",
                         f"{res.median_a:.6g}", f"{res.median_b:.6g}",
                         f"{res.p_value:.6g}", f"{res.a12:.6g}"])
    return out.getvalue()


def format_comparison_text(rows: Sequence[tuple[str, str, ComparisonResult]]) -> str:
    """Human-readable variant: medians with the p-value in parentheses."""
    lines = []
    for target_id, seed_id, res in rows:
        lines.append(
            f"{target_id}, {seed_id}, t={res.at_time:g}: "
            f"A median {res.median_a:g} vs B median {res.median_b:g} "
            f"(p={res.p_value:.4g}, A12={res.a12:.3f})"
        )
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class PlotSeries:
    label: str
    band: Band
    color: str


@dataclass(frozen=True)
class PlotSpec:
    title: str
    series: tuple[PlotSeries, ...]
    width: int = 800
    height: int = 480
    x_label: str = "seconds"
    y_label: str = "crashes"

    def __post_init__(self):
        if not self.series:
            raise ValueError("plot needs at least one series")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("plot dimensions must be positive")
        for s in self.series:
            if not s.band.grid:
                raise ValueError(f"series {s.label!r} has an empty band")


_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 20, 34, 44


def emit_svg_plot(spec: PlotSpec) -> str:
    """Render bands as SVG: solid median, dashed CI bounds and min/max."""
    x_lo = min(s.band.grid[0] for s in spec.series)
    x_hi = max(s.band.grid[-1] for s in spec.series)
    y_hi = max(max(s.band.max) for s in spec.series)
    x_span = (x_hi - x_lo) or 1.0
    y_span = y_hi or 1.0
    inner_w = spec.width - _MARGIN_L - _MARGIN_R
    inner_h = spec.height - _MARGIN_T - _MARGIN_B

    def sx(t: float) -> float:
        return _MARGIN_L + (t - x_lo) / x_span * inner_w

    def sy(v: float) -> float:
        return spec.height - _MARGIN_B - v / y_span * inner_h

    def polyline(xs, ys, color: str, dash: str | None) -> str:
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        return (f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
                f'{dash_attr} points="{pts}" />')

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white" />',
        f'<text x="{spec.width / 2:.2f}" y="20" text-anchor="middle" '
        f'font-size="14">{_escape(spec.title)}</text>',
        # axes
        f'<line x1="{_MARGIN_L}" y1="{spec.height - _MARGIN_B}" '
        f'x2="{spec.width - _MARGIN_R}" y2="{spec.height - _MARGIN_B}" stroke="black" />',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" '
        f'x2="{_MARGIN_L}" y2="{spec.height - _MARGIN_B}" stroke="black" />',
        f'<text x="{spec.width / 2:.2f}" y="{spec.height - 8}" text-anchor="middle" '
        f'font-size="12">{_escape(spec.x_label)}</text>',
        f'<text x="14" y="{spec.height / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {spec.height / 2:.2f})">{_escape(spec.y_label)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * x_span
        yv = frac * y_span
        parts.append(f'<text x="{sx(xv):.2f}" y="{spec.height - _MARGIN_B + 16}" '
                     f'text-anchor="middle" font-size="10">{xv:.6g}</text>')
        parts.append(f'<text x="{_MARGIN_L - 6}" y="{sy(yv) + 3:.2f}" '
                     f'text-anchor="end" font-size="10">{yv:.6g}</text>')
    for i, s in enumerate(spec.series):
        grid = s.band.grid
        parts.append(polyline(grid, s.band.median, s.color, None))
        parts.append(polyline(grid, s.band.ci_lo, s.color, "6 3"))
        parts.append(polyline(grid, s.band.ci_hi, s.color, "6 3"))
        parts.append(polyline(grid, s.band.min, s.color, "2 3"))
        parts.append(polyline(grid, s.band.max, s.color, "2 3"))
        ly = _MARGIN_T + 8 + i * 16
        lx = spec.width - _MARGIN_R - 150
        parts.append(f'<rect x="{lx}" y="{ly - 8}" width="12" height="8" '
                     f'fill="{s.color}" />')
        parts.append(f'<text x="{lx + 16}" y="{ly}" font-size="11">'
                     f'{_escape(s.label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
