"""
Tests for the threshold sweep, the collaborative experiment and the job runner.
"""

import pandas as pd
import pytest

import experiments.runner as runner
from experiment_service import ExperimentService, RunCache, get_experiment_service
from experiments.collab import build_jobs as build_collab_jobs
from experiments.collab import run_collab
from experiments.sweep import build_jobs, cell_seed, run_sweep
from models import CollabSpec, ModelParams, SimConfig, SweepSpec
from simulation import run


def sweep_spec(base, **kwargs):
    values = dict(di_min=1.0, di_max=1.0, di_steps=1, ds_min=2.0, ds_max=2.0, ds_steps=1,
                  seeds=2, base=base, window=base.metrics_window)
    values.update(kwargs)
    return SweepSpec(**values)


def collab_base(**kwargs):
    return SimConfig(lane_lengths=[258.0], n_per_lane=[25], t_f=4.0, metrics_window=2.0, **kwargs)


def test_cell_seed_is_stable_and_distinct():
    assert cell_seed(1, 0, 0, 0) == cell_seed(1, 0, 0, 0)
    seeds = {cell_seed(1, i, j, r) for i in range(4) for j in range(4) for r in range(4)}
    assert len(seeds) == 64
    assert all(0 <= s < 2 ** 32 for s in seeds)
    assert cell_seed(1, 0, 0, 0) != cell_seed(2, 0, 0, 0)


def test_single_cell_matches_direct_runs(small_config):
    spec = sweep_spec(small_config)
    table = run_sweep(spec)

    direct = []
    for r in range(2):
        cfg = small_config.with_thresholds(1.0, 2.0).with_seed(cell_seed(spec.base_seed, 0, 0, r))
        direct.append(run(cfg).metrics.mean_last_window_variance)

    assert list(table.runs["mean_var"]) == direct
    assert table.cells.loc[0, "mean_var"] == pytest.approx(sum(direct) / 2)
    assert table.cells.loc[0, "seeds"] == 2
    assert list(table.runs["seed"]) == [cell_seed(spec.base_seed, 0, 0, r) for r in range(2)]


def test_jobs_carry_thresholds_and_av_flag(small_config):
    spec = sweep_spec(small_config, di_min=0.6, di_max=3.0, di_steps=3, av_enabled=True, seeds=1)
    jobs = build_jobs(spec)
    assert [job.key for job in jobs] == [(0, 0, 0), (1, 0, 0), (2, 0, 0)]
    assert [job.cfg.lc.delta_i for job in jobs] == [0.6, 1.8, 3.0]
    assert all(job.cfg.av_enabled for job in jobs)
    assert all(job.cfg.lc.delta_s == 2.0 for job in jobs)


def test_parallel_matches_serial(small_config):
    spec = sweep_spec(small_config, di_min=1.0, di_max=2.0, di_steps=2)
    serial = run_sweep(spec, n_jobs=1)
    parallel = run_sweep(spec, n_jobs=2)
    pd.testing.assert_frame_equal(serial.cells, parallel.cells)
    pd.testing.assert_frame_equal(serial.runs, parallel.runs)


def test_cache_serves_repeated_runs(small_config, tmp_path, monkeypatch):
    cache = RunCache(cache_dir=str(tmp_path), enabled=True)
    spec = sweep_spec(small_config)
    first = run_sweep(spec, cache=cache)
    assert len(list(tmp_path.glob("*.json"))) == 2

    def fail(job):
        raise AssertionError("cache miss")

    monkeypatch.setattr(runner, "execute_job", fail)
    second = run_sweep(spec, cache=cache)
    pd.testing.assert_frame_equal(first.cells, second.cells)
    assert cache.clear() == 2


def test_disabled_cache_stores_nothing(small_config, tmp_path):
    cache = RunCache(cache_dir=str(tmp_path / "off"), enabled=False)
    metrics = run(small_config).metrics
    assert cache.set(small_config, metrics) is False
    assert cache.get(small_config) is None
    assert not (tmp_path / "off").exists()


def test_service_singleton_and_cache_clearing(small_config, tmp_path):
    assert get_experiment_service() is get_experiment_service()

    service = ExperimentService(cache=RunCache(cache_dir=str(tmp_path), enabled=True), jobs=1)
    service.sweep(sweep_spec(small_config, seeds=1), str(tmp_path / "out"))
    assert (tmp_path / "out" / "cells.csv").is_file()
    assert service.clear_cache() == 1
    assert service.clear_cache() == 0


def test_metric_grid(small_config):
    table = run_sweep(sweep_spec(small_config, ds_min=0.5, ds_max=5.0, ds_steps=2, seeds=1))
    grid = table.metric_grid("mean_var")
    assert grid.shape == (2, 1)
    assert list(grid.index) == [0.5, 5.0]
    with pytest.raises(ValueError):
        table.metric_grid("no_such_metric")


@pytest.mark.parametrize("kwargs", [
    dict(di_steps=1, di_min=1.0, di_max=2.0),
    dict(di_min=0.1, di_max=1.0, di_steps=2),
    dict(ds_min=3.0, ds_max=2.0, ds_steps=2),
    dict(seeds=0),
])
def test_sweep_spec_validation(small_config, kwargs):
    with pytest.raises(ValueError):
        sweep_spec(small_config, **kwargs)


def test_sweep_spec_rejects_long_window(small_config):
    with pytest.raises(ValueError):
        sweep_spec(small_config, window=10.0)


def test_collab_sorted_by_proportion():
    spec = CollabSpec(counts=[25, 0, 5], seeds=1, base=collab_base(), window=2.0)
    table = run_collab(spec)
    assert list(table["count"]) == [0, 5, 25]
    assert list(table["p"]) == [0.0, 0.2, 1.0]
    assert (table["failures"] == 0).all()


def test_collab_uses_common_seeds():
    spec = CollabSpec(counts=[0, 5, 12], seeds=3, base=collab_base(), window=2.0)
    jobs = build_collab_jobs(spec)
    by_count = {}
    for job in jobs:
        by_count.setdefault(job.key[0], []).append(job.cfg.seed)
    assert by_count[0] == by_count[1] == by_count[2]
    assert len(set(by_count[0])) == 3


def test_collab_requires_unstable_humans():
    spec = CollabSpec(counts=[0, 5], seeds=1, base=collab_base(model=ModelParams(alpha=4.0, beta=0.0)), window=2.0)
    with pytest.raises(ValueError):
        run_collab(spec)


def test_collab_requires_stable_collaborators():
    spec = CollabSpec(counts=[0, 5], seeds=1, base=collab_base(alpha_s=0.5, beta_s=20.0), window=2.0)
    with pytest.raises(ValueError):
        run_collab(spec)


def test_collab_rejects_bad_counts():
    with pytest.raises(ValueError):
        CollabSpec(counts=[26], seeds=1, base=collab_base(), window=2.0)
