"""
Ring Road Wave Simulator - Heatmap Renderer
===========================================
Self-contained SVG heatmaps of a sweep table: delta_I across, delta_S down,
cell colour linear in the metric, a colour scale and a value label in every
cell. Output depends only on the table, so re-rendering is byte-identical.
"""

import html
import logging
import math
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from reports.templates import (
    AXIS_LABEL,
    AXIS_LABEL_VERTICAL,
    CELL,
    LEGEND_SWATCH,
    NAN_FILL,
    SVG_CLOSE,
    SVG_OPEN,
    SVG_STYLE,
    TITLE,
    get_metric_title,
)

logger = logging.getLogger(__name__)

CELL_W = 56
CELL_H = 36
MARGIN_LEFT = 80
MARGIN_TOP = 48
MARGIN_BOTTOM = 56
LEGEND_GAP = 24
LEGEND_W = 18
LEGEND_STEPS = 32

# Sequential palette, low -> high (sampled from viridis)
PALETTE: List[Tuple[int, int, int]] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
]


def value_to_color(fraction: float) -> str:
    """Linear interpolation through PALETTE for fraction in [0, 1]"""
    fraction = min(max(fraction, 0.0), 1.0)
    pos = fraction * (len(PALETTE) - 1)
    lo = min(int(math.floor(pos)), len(PALETTE) - 2)
    t = pos - lo
    rgb = tuple(round(a + (b - a) * t) for a, b in zip(PALETTE[lo], PALETTE[lo + 1]))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _ink(fraction: float) -> str:
    """Label colour readable on the cell fill"""
    return "#000000" if fraction > 0.6 else "#ffffff"


def format_value(value: float) -> str:
    if value is None or not np.isfinite(value):
        return "n/a"
    magnitude = abs(value)
    if magnitude != 0.0 and (magnitude < 0.01 or magnitude >= 1e4):
        return f"{value:.1e}"
    if magnitude >= 100:
        return f"{value:.0f}"
    return f"{value:.2f}"


def _grid(table: Union[pd.DataFrame, "object"], metric: str) -> pd.DataFrame:
    cells = table if isinstance(table, pd.DataFrame) else table.cells
    for column in ("delta_i", "delta_s", metric):
        if column not in cells.columns:
            raise ValueError(f"table has no column '{column}'")
    if cells.empty:
        raise ValueError("table is empty")
    if cells.duplicated(subset=["delta_i", "delta_s"]).any():
        raise ValueError("table has duplicate (delta_i, delta_s) cells")
    n_i = cells["delta_i"].nunique()
    n_s = cells["delta_s"].nunique()
    if len(cells) != n_i * n_s:
        raise ValueError(f"ragged grid: {len(cells)} cells for {n_i} x {n_s} threshold values")
    return cells.pivot(index="delta_s", columns="delta_i", values=metric).sort_index().sort_index(axis=1)


def render_heatmap(table, metric: str) -> str:
    """
    SVG document for one metric of a sweep table (SweepTable or its cells DataFrame).

    Raises ValueError for a missing metric or a grid that is not rectangular.
    """
    grid = _grid(table, metric)
    values = grid.to_numpy(dtype=float)
    finite = values[np.isfinite(values)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = float(finite.max()) if finite.size else 0.0
    span = vmax - vmin

    def fraction(v: float) -> float:
        return 0.0 if span == 0.0 else (v - vmin) / span

    n_rows, n_cols = values.shape
    plot_w = n_cols * CELL_W
    plot_h = n_rows * CELL_H
    legend_x = MARGIN_LEFT + plot_w + LEGEND_GAP
    width = legend_x + LEGEND_W + 70
    height = MARGIN_TOP + plot_h + MARGIN_BOTTOM

    out = [
        SVG_OPEN.format(width=width, height=height),
        SVG_STYLE.format(label_size=12, value_size=11, title_size=14),
        TITLE.format(x=width // 2, y=24, text=html.escape(get_metric_title(metric))),
    ]

    # delta_S grows upward, so the last pivot row is drawn first
    for r in range(n_rows):
        row = n_rows - 1 - r
        y = MARGIN_TOP + r * CELL_H
        out.append(AXIS_LABEL.format(x=MARGIN_LEFT - 6, y=y + CELL_H // 2 + 4, anchor="end",
                                     text=f"{grid.index[row]:g}"))
        for col in range(n_cols):
            v = values[row, col]
            x = MARGIN_LEFT + col * CELL_W
            ok = bool(np.isfinite(v))
            f = fraction(v) if ok else 0.0
            out.append(CELL.format(
                tooltip=f"delta_i={grid.columns[col]:g} delta_s={grid.index[row]:g}: {format_value(v)}",
                x=x, y=y, w=CELL_W, h=CELL_H,
                fill=value_to_color(f) if ok else NAN_FILL,
                tx=x + CELL_W // 2, ty=y + CELL_H // 2 + 4,
                ink=_ink(f) if ok else "#000000",
                text=format_value(v),
            ))

    axis_y = MARGIN_TOP + plot_h
    for col in range(n_cols):
        out.append(AXIS_LABEL.format(x=MARGIN_LEFT + col * CELL_W + CELL_W // 2, y=axis_y + 16,
                                     anchor="middle", text=f"{grid.columns[col]:g}"))
    out.append(AXIS_LABEL.format(x=MARGIN_LEFT + plot_w // 2, y=axis_y + 40, anchor="middle",
                                 text="incentive threshold delta_I [m/s²]"))
    out.append(AXIS_LABEL_VERTICAL.format(x=24, y=MARGIN_TOP + plot_h // 2,
                                          text="safety threshold delta_S [m/s²]"))

    # Colour scale, top = vmax
    swatch_h = plot_h / LEGEND_STEPS
    for s in range(LEGEND_STEPS):
        f = 0.0 if span == 0.0 else 1.0 - s / (LEGEND_STEPS - 1)
        out.append(LEGEND_SWATCH.format(x=legend_x, y=f"{MARGIN_TOP + s * swatch_h:.3f}",
                                        w=LEGEND_W, h=f"{swatch_h:.3f}", fill=value_to_color(f)))
    out.append(AXIS_LABEL.format(x=legend_x + LEGEND_W + 4, y=MARGIN_TOP + 10, anchor="start",
                                 text=format_value(vmax)))
    if span != 0.0:
        out.append(AXIS_LABEL.format(x=legend_x + LEGEND_W + 4, y=MARGIN_TOP + plot_h, anchor="start",
                                     text=format_value(vmin)))

    out.append(SVG_CLOSE)
    logger.debug(f"Rendered {n_rows}x{n_cols} heatmap of {metric}")
    return "\n".join(out) + "\n"
