"""
Ring Road Wave Simulator - Command Line
=======================================
Subcommands:

    run        one simulation, optional trajectory / event / metrics files
    sweep      (delta_I, delta_S) grid with seeds, writes CSV tables + SVG heatmaps
    collab     collaborative-proportion experiment on a single lane
    stability  linear stability report for a single-lane ring
    heatmap    re-render a saved cells.csv

Examples:
    python cli.py run --config configs/three_lane_ring.env --seed 3 --events events.csv
    python cli.py sweep --config configs/three_lane_ring.env --preset quick --av on --out outputs/av
    python cli.py stability --alpha 0.5 --beta 20 --n 24 --length 240
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

# Add the project root to Python path
PROJECT_ROOT = Path(__file__).parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from config import DEFAULT_JOBS, LOG_LEVEL, OUTPUT_DIR, MODEL_DEFAULTS, PRESETS, get_preset
from data_io import load_sim_config
from experiment_service import ExperimentService
from models import CollabSpec, ModelParams, RunStatus, SimConfig, SweepSpec, default_collab_base

logger = logging.getLogger(__name__)


# =============================================================================
# ARGUMENT HELPERS
# =============================================================================

def parse_range(text: str) -> Tuple[float, float, int]:
    """'0.6:3:13' -> (0.6, 3.0, 13)"""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX:STEPS, got '{text}'")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad range '{text}': {e}") from e


def parse_counts(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad count list '{text}': {e}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringroad", description="Multi-lane ring-road traffic simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--traj", default=None, help="trajectory CSV")
    p.add_argument("--events", default=None, help="event log CSV")
    p.add_argument("--metrics", default=None, help="metrics JSON")

    p = sub.add_parser("sweep", help="threshold sweep")
    p.add_argument("--config", default=None)
    p.add_argument("--di", type=parse_range, default=None, help="MIN:MAX:STEPS for delta_I")
    p.add_argument("--ds", type=parse_range, default=None, help="MIN:MAX:STEPS for delta_S")
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--av", choices=["on", "off"], default="off")
    p.add_argument("--out", default=str(Path(OUTPUT_DIR) / "sweep"))
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--jobs", type=int, default=DEFAULT_JOBS)
    p.add_argument("--base-seed", type=int, default=None)

    p = sub.add_parser("collab", help="collaborative-proportion experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--counts", type=parse_counts, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--out", default=str(Path(OUTPUT_DIR) / "collab"))
    p.add_argument("--jobs", type=int, default=DEFAULT_JOBS)

    p = sub.add_parser("stability", help="linear stability of uniform flow")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--length", type=float, required=True)
    p.add_argument("--vmax", type=float, default=MODEL_DEFAULTS["v_max"])
    p.add_argument("--critical", action="store_true", help="also bisect for the critical alpha")

    p = sub.add_parser("heatmap", help="render a sweep table")
    p.add_argument("--table", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--out", required=True)
    return parser


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_run(args, service: ExperimentService) -> int:
    cfg = load_sim_config(args.config, seed=args.seed)
    result = service.run_single(cfg, args.traj, args.events, args.metrics)
    m = result.metrics
    print(f"status: {m.status.value}")
    if m.message:
        print(f"message: {m.message}")
    print(f"mean variance (last {m.window:g} s): {m.mean_last_window_variance:.6f}")
    print(f"mean speed: {m.mean_speed_overall:.4f} m/s")
    print(f"lane changes: {m.total_lane_changes} (AV: {m.av_lane_changes})")
    return 0 if m.status == RunStatus.COMPLETED else 1


def cmd_sweep(args, service: ExperimentService) -> int:
    preset = get_preset(args.preset) if args.preset else None
    base = load_sim_config(args.config) if args.config else SimConfig()
    if preset:
        base = base.model_copy(update={"t_f": preset["t_f"]})
    di = args.di or (preset["di"] if preset else None)
    ds = args.ds or (preset["ds"] if preset else None)
    fields = {"base": base, "av_enabled": args.av == "on", "window": base.metrics_window}
    if di:
        fields.update(di_min=di[0], di_max=di[1], di_steps=di[2])
    if ds:
        fields.update(ds_min=ds[0], ds_max=ds[1], ds_steps=ds[2])
    seeds = args.seeds or (preset["seeds"] if preset else None)
    if seeds:
        fields["seeds"] = seeds
    if args.base_seed is not None:
        fields["base_seed"] = args.base_seed
    spec = SweepSpec(**fields)
    table = service.sweep(spec, args.out, jobs=args.jobs)
    print(table.cells.to_string(index=False))
    return 0


def cmd_collab(args, service: ExperimentService) -> int:
    base = load_sim_config(args.config) if args.config else default_collab_base()
    fields = {"base": base, "window": base.metrics_window}
    if args.counts is not None:
        fields["counts"] = args.counts
    if args.seeds:
        fields["seeds"] = args.seeds
    table = service.collab(CollabSpec(**fields), args.out, jobs=args.jobs)
    print(table.to_string(index=False))
    return 0


def cmd_stability(args, service: ExperimentService) -> int:
    params = ModelParams(alpha=args.alpha, beta=args.beta, v_max=args.vmax)
    info = service.stability(params, args.n, args.length, with_critical=args.critical)
    print(info["report"].summary())
    if args.critical and info["critical_alpha"] is not None:
        print(f"critical alpha (beta={args.beta:g}): {info['critical_alpha']:.6f}")
    return 0


def cmd_heatmap(args, service: ExperimentService) -> int:
    path = service.heatmap(args.table, args.metric, args.out)
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "collab": cmd_collab,
    "stability": cmd_stability,
    "heatmap": cmd_heatmap,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    service = ExperimentService(jobs=getattr(args, "jobs", DEFAULT_JOBS))
    try:
        return COMMANDS[args.command](args, service)
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
