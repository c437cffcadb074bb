"""
Ring Road Wave Simulator - Experiment Service
=============================================

WHAT THIS FILE DOES:
- Orchestrates the experiments: build configs → run → persist outputs
- This is what the CLI talks to
- Caches run metrics on disk so repeated sweeps skip finished runs
"""

import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

# Add the project root to Python path (so `python cli.py` works from anywhere)
PROJECT_ROOT = Path(__file__).parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from config import CACHE_DIR, DEFAULT_JOBS, ENABLE_CACHE
from data_io import read_csv, write_csv, write_metrics, write_text
from experiments.collab import run_collab
from experiments.sweep import SweepTable, run_sweep
from models import CollabSpec, ModelParams, RunMetrics, SimConfig, StabilityReport, SweepSpec
from reports.heatmap import render_heatmap
from simulation import RunResult, run
from stability import critical_alpha, stability_eigen

logger = logging.getLogger(__name__)

SWEEP_HEATMAPS = ("mean_var", "mean_speed", "mean_lane_changes")


class RunCache:
    """
    Simple file-based cache of run metrics.

    Runs are deterministic in their config, so the md5 of the config JSON is
    the key. Only metrics are stored; trajectories are always recomputed.
    """

    def __init__(self, cache_dir: str = CACHE_DIR, enabled: bool = ENABLE_CACHE):
        self.cache_dir = Path(cache_dir)
        self.enabled = enabled
        if self.enabled:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _get_cache_key(self, cfg: SimConfig) -> str:
        """Generate cache key from the full run config"""
        return hashlib.md5(f"run_{cfg.model_dump_json()}".encode()).hexdigest()

    def _get_cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, cfg: SimConfig) -> Optional[RunMetrics]:
        """Get cached metrics if present"""
        if not self.enabled:
            return None
        cache_path = self._get_cache_path(self._get_cache_key(cfg))
        if not cache_path.exists():
            return None
        try:
            with open(cache_path, "r", encoding="utf-8") as f:
                data = json.load(f)
            return RunMetrics.model_validate(data["metrics"])
        except Exception as e:
            logger.warning(f"⚠️ Cache read error: {e}")
            return None

    def set(self, cfg: SimConfig, metrics: RunMetrics) -> bool:
        """Save run metrics to cache"""
        if not self.enabled:
            return False
        cache_path = self._get_cache_path(self._get_cache_key(cfg))
        try:
            data = {"seed": cfg.seed, "metrics": metrics.model_dump(mode="json")}
            with open(cache_path, "w", encoding="utf-8") as f:
                json.dump(data, f)
            return True
        except Exception as e:
            logger.warning(f"⚠️ Cache write error: {e}")
            return False

    def clear(self) -> int:
        """Remove every cached entry"""
        count = 0
        if self.cache_dir.exists():
            for cache_file in self.cache_dir.glob("*.json"):
                cache_file.unlink()
                count += 1
        logger.info(f"Cleared {count} cache entries")
        return count


class ExperimentService:
    """
    Main service that runs experiments and writes their outputs.

    This is what cli.py talks to.
    """

    def __init__(self, cache: Optional[RunCache] = None, jobs: int = DEFAULT_JOBS):
        self.cache = cache or RunCache()
        self.jobs = jobs
        logger.info(f"✅ ExperimentService initialized ({self.jobs} workers, cache {'on' if self.cache.enabled else 'off'})")

    # SINGLE RUNS

    def run_single(
        self,
        cfg: SimConfig,
        traj_path: Optional[str] = None,
        events_path: Optional[str] = None,
        metrics_path: Optional[str] = None,
    ) -> RunResult:
        """
        Run one configuration and write whichever outputs were requested.

        Args:
            cfg: Validated run configuration (seed included)
            traj_path: Trajectory CSV (t, lane, vid, class, x, v, a)
            events_path: Event log CSV
            metrics_path: RunMetrics JSON
        """
        result = run(cfg)
        if traj_path:
            write_csv(result.trajectory, traj_path)
        if events_path:
            write_csv(result.events, events_path)
        if metrics_path:
            write_metrics(result.metrics, metrics_path)
        return result

    # BATCH EXPERIMENTS

    def sweep(self, spec: SweepSpec, out_dir: str, jobs: Optional[int] = None) -> SweepTable:
        """Run a threshold sweep; writes cells.csv, runs.csv and one SVG per headline metric"""
        table = run_sweep(spec, n_jobs=jobs or self.jobs, cache=self.cache)
        out = Path(out_dir)
        write_csv(table.cells, out / "cells.csv")
        write_csv(table.runs, out / "runs.csv")
        for metric in SWEEP_HEATMAPS:
            write_text(render_heatmap(table, metric), out / f"{metric}.svg")
        logger.info(f"✅ Sweep outputs in {out}")
        return table

    def collab(self, spec: CollabSpec, out_dir: str, jobs: Optional[int] = None) -> pd.DataFrame:
        """Run the collaborative-proportion experiment; writes collab.csv"""
        table = run_collab(spec, n_jobs=jobs or self.jobs, cache=self.cache)
        write_csv(table, Path(out_dir) / "collab.csv")
        return table

    # ANALYSIS

    def stability(self, params: ModelParams, n: int, length: float, with_critical: bool = False) -> Dict:
        """Stability report, optionally with the alpha at which flow turns stable"""
        report: StabilityReport = stability_eigen(params, n, length)
        out = {"report": report, "critical_alpha": None}
        if with_critical:
            try:
                out["critical_alpha"] = critical_alpha(params.beta, n, length, params)
            except ValueError as e:
                logger.warning(f"⚠️ No stability boundary found: {e}")
        return out

    def heatmap(self, table_path: str, metric: str, out_path: str) -> Path:
        """Render a saved cells.csv to SVG"""
        cells = read_csv(table_path)
        return write_text(render_heatmap(cells, metric), out_path)

    # CACHE MANAGEMENT

    def clear_cache(self) -> int:
        return self.cache.clear()


# SINGLETON INSTANCE

_service_instance: Optional[ExperimentService] = None


def get_experiment_service() -> ExperimentService:
    """
    Get the global service instance.

    Usage:
        from experiment_service import get_experiment_service
        service = get_experiment_service()
    """
    global _service_instance
    if _service_instance is None:
        _service_instance = ExperimentService()
    return _service_instance


# TESTING

if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)

    service = ExperimentService(jobs=1)
    info = service.stability(ModelParams(), n=24, length=240.0, with_critical=True)
    print(info["report"].summary())
    print(f"critical alpha: {info['critical_alpha']}")
