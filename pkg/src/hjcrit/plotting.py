"""Static SVG line plots of run CSVs, rendered deterministically.

Fixed canvas (960x600), fixed fonts, no timestamps or generator tags: the
same CSV and column choice always produce byte-identical output, so plots can
be diffed like any other artifact.  When the rescaled_mass column is drawn, a
horizontal reference line marks the predicted amplitude.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .gaussian import critical_constants

__all__ = ["read_csv", "emit_plot"]

WIDTH, HEIGHT = 960, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 75, 25, 25, 55
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def read_csv(path: str | Path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Header and per-column float arrays; empty cells come back as NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, nothing to plot") from None
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows, nothing to plot")
    data: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        data[name] = np.array(
            [float(row[j]) if j < len(row) and row[j] != "" else math.nan for row in rows]
        )
    return header, data


def _nice_step(raw: float) -> float:
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mult * power >= raw:
            return mult * power
    return 10.0 * power


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    step = _nice_step((hi - lo) / (count - 1))
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    v = first
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def emit_plot(
    csv_path: str | Path,
    columns: list[str],
    *,
    log_scale: bool = False,
    out_path: str | Path | None = None,
    dim: int = 1,
) -> Path:
    """Render tau against the chosen columns; returns the SVG path written.

    Rows where a column is empty are skipped for that column.  With
    log_scale the y axis is log10, and any nonpositive sample is an error
    naming the offending row.
    """
    header, data = read_csv(csv_path)
    if "tau" not in header:
        raise ValueError(f"{csv_path}: no tau column to use as the x axis")
    missing = [c for c in columns if c not in header]
    if missing:
        raise ValueError(f"{csv_path}: no such column(s): {', '.join(missing)}")
    if not columns:
        raise ValueError("no columns requested")

    tau = data["tau"]
    series: list[tuple[str, np.ndarray, np.ndarray]] = []
    for col in columns:
        y = data[col]
        keep = ~np.isnan(y) & ~np.isnan(tau)
        if not np.any(keep):
            raise ValueError(f"{csv_path}: column {col} has no data")
        xs, ys = tau[keep], y[keep]
        if log_scale:
            bad = np.nonzero(ys <= 0)[0]
            if bad.size:
                row = int(np.nonzero(keep)[0][bad[0]]) + 2  # 1-based, after header
                raise ValueError(
                    f"{csv_path}: column {col} has nonpositive value "
                    f"{ys[bad[0]]:.6g} on line {row}; log scale impossible"
                )
            ys = np.log10(ys)
        series.append((col, xs, ys))

    x_lo = min(float(xs.min()) for _, xs, _ in series)
    x_hi = max(float(xs.max()) for _, xs, _ in series)
    y_lo = min(float(ys.min()) for _, _, ys in series)
    y_hi = max(float(ys.max()) for _, _, ys in series)

    reference = None
    if "rescaled_mass" in columns:
        amplitude = critical_constants(dim).amplitude
        reference = math.log10(amplitude) if log_scale else amplitude
        y_lo = min(y_lo, reference)
        y_hi = max(y_hi, reference)

    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x: float) -> float:
        return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>',
    ]

    for tick in _ticks(x_lo, x_hi):
        if tick < x_lo - 1e-12 or tick > x_hi + 1e-12:
            continue
        x = px(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{MARGIN_TOP + plot_h}" x2="{x:.2f}" '
            f'y2="{MARGIN_TOP + plot_h + 6}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{MARGIN_TOP + plot_h + 22}" font-family="monospace" '
            f'font-size="13" text-anchor="middle">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        if tick < y_lo - 1e-12 or tick > y_hi + 1e-12:
            continue
        y = py(tick)
        label = f"1e{_fmt(tick)}" if log_scale else _fmt(tick)
        parts.append(
            f'<line x1="{MARGIN_LEFT - 6}" y1="{y:.2f}" x2="{MARGIN_LEFT}" '
            f'y2="{y:.2f}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 10}" y="{y + 4:.2f}" font-family="monospace" '
            f'font-size="13" text-anchor="end">{label}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{HEIGHT - 12}" font-family="monospace" '
        f'font-size="14" text-anchor="middle">tau</text>'
    )

    if reference is not None:
        y = py(reference)
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{y:.2f}" x2="{MARGIN_LEFT + plot_w}" '
            f'y2="{y:.2f}" stroke="#888888" stroke-width="1" stroke-dasharray="6,4"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT + plot_w - 6}" y="{y - 6:.2f}" font-family="monospace" '
            f'font-size="13" text-anchor="end" fill="#555555">amplitude limit</text>'
        )

    for i, (col, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT + plot_w - 6}" y="{MARGIN_TOP + 18 + 18 * i}" '
            f'font-family="monospace" font-size="13" text-anchor="end" '
            f'fill="{color}">{col}</text>'
        )

    parts.append("</svg>")
    if out_path is None:
        out_path = Path(csv_path).with_suffix(".svg")
    out_path = Path(out_path)
    out_path.write_text("\n".join(parts) + "\n", newline="\n")
    return out_path
