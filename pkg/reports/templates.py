"""
Ring Road Wave Simulator - SVG Templates
========================================
Fragments the heatmap renderer fills in. Kept as plain format strings so the
output is byte-for-byte reproducible.
"""

from typing import Dict


# =============================================================================
# DOCUMENT
# =============================================================================

SVG_OPEN = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" height="{height}">'

SVG_STYLE = """  <style>
    .label {{ font-family: Arial, sans-serif; font-size: {label_size}px; fill: #222222; }}
    .value {{ font-family: Arial, sans-serif; font-size: {value_size}px; font-feature-settings: "tnum"; }}
    .title {{ font-family: Arial, sans-serif; font-size: {title_size}px; font-weight: bold; fill: #222222; }}
  </style>"""

SVG_CLOSE = "</svg>"


# =============================================================================
# ELEMENTS
# =============================================================================

TITLE = '  <text class="title" x="{x}" y="{y}" text-anchor="middle">{text}</text>'

AXIS_LABEL = '  <text class="label" x="{x}" y="{y}" text-anchor="{anchor}">{text}</text>'

AXIS_LABEL_VERTICAL = '  <text class="label" x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{text}</text>'

CELL = """  <g>
    <title>{tooltip}</title>
    <rect shape-rendering="crispEdges" x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}"/>
    <text class="value" x="{tx}" y="{ty}" text-anchor="middle" fill="{ink}">{text}</text>
  </g>"""

LEGEND_SWATCH = '  <rect shape-rendering="crispEdges" x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}"/>'

# Missing value (every run in the cell failed)
NAN_FILL = "#d9d9d9"


# =============================================================================
# METRIC LABELS
# =============================================================================

METRIC_TITLES: Dict[str, str] = {
    "mean_var": "Mean speed variance over the last window [m²/s²]",
    "std_var": "Std of speed variance across seeds [m²/s²]",
    "mean_speed": "Mean speed over the last window [m/s]",
    "std_speed": "Std of mean speed across seeds [m/s]",
    "mean_lane_changes": "Mean number of lane changes",
    "std_lane_changes": "Std of lane changes across seeds",
    "failures": "Failed runs per cell",
}


def get_metric_title(metric: str) -> str:
    """Heading for a heatmap; unknown metrics fall back to the column name"""
    return METRIC_TITLES.get(metric, metric)
