"""
Ring Road Wave Simulator - Metrics
==================================
Spatial speed variance, windowed run summaries and seed-averaged cell
statistics.
"""

import logging
from typing import TYPE_CHECKING, List, Sequence

import numpy as np

from models import BatchMetrics, CellKey, EventKind, RunMetrics, RunStatus

if TYPE_CHECKING:
    from ring import LaneState, RoadState
    from simulation import RunResult

logger = logging.getLogger(__name__)

LANE_CHANGE_KINDS = (EventKind.LANE_CHANGE.value, EventKind.LC_VARIANCE.value)


def lane_speed_variance(lane: "LaneState") -> float:
    """Population variance of the lane's speeds (0 for an empty lane)"""
    if lane.n == 0:
        return 0.0
    return float(np.var(lane.vel))


def road_speed_variances(road: "RoadState") -> np.ndarray:
    return np.array([lane_speed_variance(lane) for lane in road.lanes])


def lane_mean_speeds(road: "RoadState") -> np.ndarray:
    """Mean speed per lane; an empty lane reports 0"""
    return np.array([float(np.mean(lane.vel)) if lane.n else 0.0 for lane in road.lanes])


def window_samples(window: float, dt: float) -> int:
    """Number of per-step samples covering the last `window` seconds"""
    return max(1, int(round(window / dt)))


def count_lane_changes(result: "RunResult") -> int:
    if result.events.empty:
        return 0
    return int(result.events["kind"].isin(LANE_CHANGE_KINDS).sum())


def aggregate_run(result: "RunResult", window: float) -> RunMetrics:
    """
    Summarise one run over its last `window` seconds.

    Variances are time-averaged per lane, then averaged across lanes.
    Runs that did not complete come back flagged invalid.
    """
    cfg = result.config
    events = result.events
    total_lc = count_lane_changes(result)
    av_lc = 0 if events.empty else int((events["kind"] == EventKind.LC_VARIANCE.value).sum())

    if result.status != RunStatus.COMPLETED:
        return RunMetrics(
            seed=cfg.seed,
            status=result.status,
            valid=False,
            message=result.message,
            window=window,
            total_lane_changes=total_lc,
            av_lane_changes=av_lc,
            velocity_clamps=result.velocity_clamps,
        )
    if window > cfg.t_f:
        raise ValueError(f"window {window} s is longer than the run ({cfg.t_f} s)")

    # Index 0 holds the initial state; per-step samples follow
    n = window_samples(window, cfg.dt)
    var_tail = result.variance[1:][-n:]
    speed_tail = result.mean_speed[1:][-n:]
    overall_tail = result.overall_speed[1:][-n:]

    lane_var = var_tail.mean(axis=0)
    stride = cfg.sample_stride
    return RunMetrics(
        seed=cfg.seed,
        status=result.status,
        valid=True,
        message=result.message,
        window=window,
        mean_last_window_variance=float(lane_var.mean()),
        lane_window_variance=[float(v) for v in lane_var],
        mean_speed=[float(v) for v in speed_tail.mean(axis=0)],
        mean_speed_overall=float(overall_tail.mean()),
        total_lane_changes=total_lc,
        av_lane_changes=av_lc,
        velocity_clamps=result.velocity_clamps,
        series_times=[float(t) for t in result.times[::stride]],
        variance_series=result.variance[::stride].tolist(),
    )


def _mean_std(values: Sequence[float]):
    if not len(values):
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=0))


def aggregate_batch(runs: List[RunMetrics], key: CellKey) -> BatchMetrics:
    """
    Seed-averaged mean and population std of each run scalar.

    Invalid runs are counted as failures and left out of the statistics.
    """
    if not runs:
        raise ValueError(f"no runs to aggregate for {key}")
    valid = sorted((r for r in runs if r.valid), key=lambda r: r.seed)
    failures = len(runs) - len(valid)
    if failures:
        logger.warning(
            f"⚠️ Cell delta_i={key.delta_i} delta_s={key.delta_s} p={key.collab_fraction}: "
            f"{failures} of {len(runs)} runs excluded"
        )

    mean_var, std_var = _mean_std([r.mean_last_window_variance for r in valid])
    mean_speed, std_speed = _mean_std([r.mean_speed_overall for r in valid])
    mean_lc, std_lc = _mean_std([r.total_lane_changes for r in valid])
    return BatchMetrics(
        delta_i=key.delta_i,
        delta_s=key.delta_s,
        collab_fraction=key.collab_fraction,
        seeds=len(runs),
        failures=failures,
        mean_var=mean_var,
        std_var=std_var,
        mean_speed=mean_speed,
        std_speed=std_speed,
        mean_lane_changes=mean_lc,
        std_lane_changes=std_lc,
    )
