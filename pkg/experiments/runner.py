"""
Ring Road Wave Simulator - Parallel Job Runner
==============================================
Executes independent (configuration, seed) runs on a process pool and hands
the metrics back in key order, so serial and parallel execution produce the
same tables.
"""

import logging
import multiprocessing as mp
from typing import TYPE_CHECKING, Dict, Hashable, List, NamedTuple, Optional, Tuple

from models import RunMetrics, SimConfig
from simulation import run

if TYPE_CHECKING:
    from experiment_service import RunCache

logger = logging.getLogger(__name__)


class RunJob(NamedTuple):
    key: Tuple[Hashable, ...]   # sort key, e.g. (i, j, replicate)
    cfg: SimConfig


def execute_job(job: RunJob) -> Tuple[Tuple[Hashable, ...], RunMetrics]:
    """Worker entry point: one run, metrics only"""
    result = run(job.cfg)
    return job.key, result.metrics


def run_jobs(jobs: List[RunJob], n_jobs: int = 1, cache: Optional["RunCache"] = None) -> Dict[tuple, RunMetrics]:
    """
    Run every job and return {key: metrics} sorted by key.

    Cached metrics are reused; the remaining jobs go to a pool of n_jobs
    workers (imap_unordered, chunksize 1) or run inline when n_jobs <= 1.
    """
    results: Dict[tuple, RunMetrics] = {}
    pending: List[RunJob] = []
    for job in jobs:
        hit = cache.get(job.cfg) if cache is not None else None
        if hit is not None:
            results[job.key] = hit
        else:
            pending.append(job)

    total = len(pending)
    if jobs and total < len(jobs):
        logger.info(f"📦 {len(jobs) - total} of {len(jobs)} runs served from cache")
    report_every = max(1, total // 10)

    def collect(key, metrics, done):
        results[key] = metrics
        if cache is not None:
            cache.set(by_key[key].cfg, metrics)
        if done % report_every == 0 or done == total:
            logger.info(f"🔄 {done}/{total} runs finished")

    by_key = {job.key: job for job in pending}
    if n_jobs <= 1 or total <= 1:
        for done, job in enumerate(pending, start=1):
            key, metrics = execute_job(job)
            collect(key, metrics, done)
    else:
        workers = min(n_jobs, total)
        logger.info(f"🔄 Running {total} jobs on {workers} workers")
        with mp.Pool(processes=workers) as pool:
            for done, (key, metrics) in enumerate(pool.imap_unordered(execute_job, pending, chunksize=1), start=1):
                collect(key, metrics, done)

    return dict(sorted(results.items()))
