"""
Ring Road Wave Simulator - Collaborative Drivers Experiment
==========================================================
Single-lane ring with a growing share of collaborative drivers, whose
(alpha_S, beta_S) make uniform flow stable while the remaining drivers keep
the unstable (alpha, beta).

Every proportion uses the same replicate seeds, so the curve compares
identical initial perturbations.
"""

import logging
from typing import List

import pandas as pd

from experiments.runner import RunJob, run_jobs
from experiments.sweep import cell_seed
from metrics import aggregate_batch
from models import CellKey, CollabSpec
from stability import collaborative_check, stability_eigen

logger = logging.getLogger(__name__)

COLLAB_COLUMNS = ["count", "p", "seeds", "failures", "mean_var", "std_var", "mean_speed", "std_speed"]


def check_preconditions(spec: CollabSpec) -> None:
    """Raise ValueError unless the human weights are unstable and the collaborative ones stable"""
    cfg = spec.base
    n, length = spec.n, cfg.lane_lengths[0]
    human = stability_eigen(cfg.model, n, length)
    if not human.eigen_unstable:
        raise ValueError(
            f"human weights alpha={cfg.model.alpha}, beta={cfg.model.beta} give stable flow "
            f"(max real part {human.eigen_max_real:.3e}); nothing to stabilise"
        )
    collab = collaborative_check(cfg.alpha_s, cfg.beta_s, cfg.model, n, length)
    if collab.eigen_unstable:
        raise ValueError(
            f"collaborative weights alpha_s={cfg.alpha_s}, beta_s={cfg.beta_s} are unstable "
            f"(max real part {collab.eigen_max_real:.3e})"
        )


def build_jobs(spec: CollabSpec) -> List[RunJob]:
    base = spec.base.model_copy(update={"av_enabled": False, "metrics_window": spec.window})
    jobs = []
    for c, count in enumerate(spec.counts):
        cfg = base.model_copy(update={"collab_fraction": spec.fraction(count)})
        for r in range(spec.seeds):
            jobs.append(RunJob(key=(c, r), cfg=cfg.with_seed(cell_seed(spec.base_seed, 0, 0, r))))
    return jobs


def run_collab(spec: CollabSpec, n_jobs: int = 1, cache=None) -> pd.DataFrame:
    """One seed-averaged variance per collaborative proportion, sorted by p"""
    if spec.check_stability:
        check_preconditions(spec)
    logger.info(f"🔄 Collaborative experiment: {len(spec.counts)} proportions, {spec.seeds} seeds")
    results = run_jobs(build_jobs(spec), n_jobs=n_jobs, cache=cache)

    rows = []
    for c, count in enumerate(spec.counts):
        runs = [results[(c, r)] for r in range(spec.seeds)]
        p = spec.fraction(count)
        batch = aggregate_batch(runs, CellKey(delta_i=spec.base.lc.delta_i, delta_s=spec.base.lc.delta_s,
                                              collab_fraction=p))
        rows.append({
            "count": count, "p": p, "seeds": batch.seeds, "failures": batch.failures,
            "mean_var": batch.mean_var, "std_var": batch.std_var,
            "mean_speed": batch.mean_speed, "std_speed": batch.std_speed,
        })
    table = pd.DataFrame(rows, columns=COLLAB_COLUMNS).sort_values(["p", "count"], kind="mergesort")
    logger.info("✅ Collaborative experiment done")
    return table.reset_index(drop=True)
