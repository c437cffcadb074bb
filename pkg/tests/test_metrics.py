"""
Tests for run summaries and seed aggregation.
"""

import math

import numpy as np
import pandas as pd
import pytest

from conftest import make_lane, make_road
from metrics import aggregate_batch, aggregate_run, lane_speed_variance, road_speed_variances
from models import CellKey, EventKind, RunEvent, RunMetrics, RunStatus, SimConfig
from simulation import RunResult, events_frame

KEY = CellKey(delta_i=1.0, delta_s=2.0)


def test_lane_speed_variance():
    assert lane_speed_variance(make_lane(0, 240.0, [0.0, 100.0], speeds=[0.0, 2.0])) == 1.0
    assert lane_speed_variance(make_lane(0, 240.0, [10.0, 50.0, 90.0], speeds=[4.0] * 3)) == 0.0
    assert lane_speed_variance(make_lane(0, 240.0, [10.0], speeds=[7.0])) == 0.0
    assert lane_speed_variance(make_lane(0, 240.0, [])) == 0.0


def test_road_speed_variances_per_lane():
    road = make_road(make_lane(0, 240.0, [0.0, 100.0], speeds=[0.0, 2.0]),
                     make_lane(1, 240.0, [], start_id=5))
    assert list(road_speed_variances(road)) == [1.0, 0.0]


def fake_result(status=RunStatus.COMPLETED, events=None):
    """200 steps on two lanes; the last 100 samples hold variances (1, 3)"""
    cfg = SimConfig(lane_lengths=[100.0, 100.0], n_per_lane=[8], t_f=4.0, metrics_window=2.0, seed=7)
    variance = np.empty((201, 2))
    variance[0] = [99.0, 99.0]
    variance[1:101] = [10.0, 10.0]
    variance[101:] = [1.0, 3.0]
    speed = np.full((201, 2), 5.0)
    speed[101:] = [4.0, 6.0]
    return RunResult(
        config=cfg,
        status=status,
        message=None if status == RunStatus.COMPLETED else "boom",
        trajectory=pd.DataFrame(),
        events=events if events is not None else events_frame([]),
        times=np.arange(201) * 0.02,
        variance=variance,
        mean_speed=speed,
        overall_speed=speed.mean(axis=1),
    )


def test_aggregate_run_uses_the_last_window():
    m = aggregate_run(fake_result(), 2.0)
    assert m.valid
    assert m.lane_window_variance == [1.0, 3.0]
    assert m.mean_last_window_variance == pytest.approx(2.0)
    assert m.mean_speed == [4.0, 6.0]
    assert m.mean_speed_overall == pytest.approx(5.0)
    # sampled every 50 steps, initial state included
    assert len(m.series_times) == 5
    assert m.variance_series[0] == [99.0, 99.0]


def test_aggregate_run_whole_run_window_skips_initial_sample():
    m = aggregate_run(fake_result(), 4.0)
    assert m.mean_last_window_variance == pytest.approx((10.0 * 2 + 2.0 * 2) / 4)


def test_aggregate_run_rejects_long_window():
    with pytest.raises(ValueError):
        aggregate_run(fake_result(), 5.0)


def test_aggregate_run_counts_lane_changes():
    events = events_frame([
        RunEvent(t=0.0, kind=EventKind.RAMP, vid=0, value=2.0),
        RunEvent(t=1.0, kind=EventKind.LANE_CHANGE, vid=3, from_lane=0, to_lane=1),
        RunEvent(t=2.0, kind=EventKind.LC_VARIANCE, vid=0, from_lane=1, to_lane=0, value=0.7),
        RunEvent(t=3.0, kind=EventKind.OVERRIDE, vid=0, value=1.0),
    ])
    m = aggregate_run(fake_result(events=events), 2.0)
    assert m.total_lane_changes == 2
    assert m.av_lane_changes == 1


def test_failed_run_is_invalid():
    m = aggregate_run(fake_result(status=RunStatus.COLLISION_ERROR), 2.0)
    assert not m.valid
    assert m.status == RunStatus.COLLISION_ERROR
    assert m.message == "boom"


def run_metrics(seed, var, speed=5.0, lc=0, valid=True):
    return RunMetrics(seed=seed, window=2.0, valid=valid, mean_last_window_variance=var,
                      mean_speed_overall=speed, total_lane_changes=lc,
                      status=RunStatus.COMPLETED if valid else RunStatus.COLLISION_ERROR)


def test_aggregate_batch_single_seed():
    b = aggregate_batch([run_metrics(1, 0.8, lc=4)], KEY)
    assert b.mean_var == 0.8
    assert b.std_var == 0.0
    assert b.mean_lane_changes == 4.0
    assert (b.seeds, b.failures) == (1, 0)


def test_aggregate_batch_population_std():
    b = aggregate_batch([run_metrics(1, 1.0), run_metrics(2, 3.0)], KEY)
    assert b.mean_var == 2.0
    assert b.std_var == 1.0


def test_aggregate_batch_excludes_invalid_runs():
    runs = [run_metrics(1, 1.0), run_metrics(2, 3.0), run_metrics(3, 0.0, valid=False)]
    b = aggregate_batch(runs, KEY)
    assert b.seeds == 3
    assert b.failures == 1
    assert b.mean_var == 2.0


def test_aggregate_batch_all_invalid_gives_nan():
    b = aggregate_batch([run_metrics(1, 0.0, valid=False)], KEY)
    assert b.failures == 1
    assert math.isnan(b.mean_var)
    assert math.isnan(b.std_speed)


def test_aggregate_batch_is_order_independent():
    rng = np.random.default_rng(3)
    runs = [run_metrics(s, float(v), speed=float(w)) for s, v, w in
            zip(range(20), rng.uniform(0, 2, 20), rng.uniform(3, 6, 20))]
    first = aggregate_batch(runs, KEY)
    for _ in range(5):
        shuffled = [runs[i] for i in rng.permutation(len(runs))]
        assert aggregate_batch(shuffled, KEY) == first


def test_aggregate_batch_rejects_empty():
    with pytest.raises(ValueError):
        aggregate_batch([], KEY)
