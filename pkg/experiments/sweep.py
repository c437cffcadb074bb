"""
Ring Road Wave Simulator - Threshold Sweep
==========================================
Grid over the lane-change thresholds (delta_I, delta_S), several seeds per
cell, with or without the AV.

Every run is traceable: runs.csv carries (delta_i, delta_s, i, j,
replicate, seed) so any row can be re-run alone with `cli.py run --seed`.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import List, Optional

import pandas as pd

from experiments.runner import RunJob, run_jobs
from metrics import aggregate_batch
from models import BatchMetrics, CellKey, SweepSpec

logger = logging.getLogger(__name__)

CELL_COLUMNS = list(BatchMetrics.model_fields)
RUN_COLUMNS = [
    "delta_i", "delta_s", "i", "j", "replicate", "seed", "status", "valid",
    "mean_var", "mean_speed", "lane_changes", "av_lane_changes", "velocity_clamps", "message",
]


def cell_seed(base_seed: int, i: int, j: int, replicate: int) -> int:
    """Stable 32-bit seed for grid cell (i, j) and replicate r"""
    digest = hashlib.sha256(f"{base_seed}:{i}:{j}:{replicate}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 32)


@dataclass
class SweepTable:
    """Per-cell aggregates plus the per-run rows they came from"""
    cells: pd.DataFrame
    runs: pd.DataFrame

    def metric_grid(self, metric: str) -> pd.DataFrame:
        """delta_s rows x delta_i columns"""
        if metric not in self.cells.columns:
            raise ValueError(f"unknown metric '{metric}' (expected one of {CELL_COLUMNS})")
        return self.cells.pivot(index="delta_s", columns="delta_i", values=metric)

    def cell(self, delta_i: float, delta_s: float) -> pd.Series:
        hit = self.cells[(self.cells["delta_i"] == delta_i) & (self.cells["delta_s"] == delta_s)]
        if hit.empty:
            raise KeyError(f"no cell at delta_i={delta_i}, delta_s={delta_s}")
        return hit.iloc[0]


def build_jobs(spec: SweepSpec) -> List[RunJob]:
    base = spec.base.model_copy(update={"av_enabled": spec.av_enabled, "metrics_window": spec.window})
    jobs = []
    for i, di in enumerate(spec.delta_i_values()):
        for j, ds in enumerate(spec.delta_s_values()):
            cfg = base.with_thresholds(di, ds)
            for r in range(spec.seeds):
                jobs.append(RunJob(key=(i, j, r), cfg=cfg.with_seed(cell_seed(spec.base_seed, i, j, r))))
    return jobs


def run_sweep(spec: SweepSpec, n_jobs: int = 1, cache=None) -> SweepTable:
    """
    Run the whole grid and aggregate each cell.

    Failed runs never abort the sweep; they show up in runs.csv and in the
    cell's failure count.
    """
    di_values = spec.delta_i_values()
    ds_values = spec.delta_s_values()
    logger.info(
        f"🔄 Sweep {len(di_values)}x{len(ds_values)} cells, {spec.seeds} seeds, "
        f"AV {'on' if spec.av_enabled else 'off'}"
    )
    results = run_jobs(build_jobs(spec), n_jobs=n_jobs, cache=cache)

    run_rows = []
    cell_rows = []
    for i, di in enumerate(di_values):
        for j, ds in enumerate(ds_values):
            runs = [results[(i, j, r)] for r in range(spec.seeds)]
            for r, m in enumerate(runs):
                run_rows.append({
                    "delta_i": di, "delta_s": ds, "i": i, "j": j, "replicate": r, "seed": m.seed,
                    "status": m.status.value, "valid": m.valid,
                    "mean_var": m.mean_last_window_variance, "mean_speed": m.mean_speed_overall,
                    "lane_changes": m.total_lane_changes, "av_lane_changes": m.av_lane_changes,
                    "velocity_clamps": m.velocity_clamps, "message": m.message or "",
                })
            cell_rows.append(aggregate_batch(runs, CellKey(delta_i=di, delta_s=ds)).to_row())

    cells = pd.DataFrame(cell_rows, columns=CELL_COLUMNS)
    failures = int(cells["failures"].sum())
    if failures:
        logger.warning(f"⚠️ {failures} runs failed across the sweep")
    logger.info(f"✅ Sweep done: {len(cells)} cells")
    return SweepTable(cells=cells, runs=pd.DataFrame(run_rows, columns=RUN_COLUMNS))
