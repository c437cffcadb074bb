"""
Ring Road Wave Simulator - Config Files and Result Persistence
==============================================================
Reads experiment config files and writes run / sweep outputs.

Config files are plain key=value documents (the same format as .env):

    lane_lengths=240,240,240
    n_per_lane=24
    model.alpha=0.5
    lc.delta_i=3
    ctl.target_mode=headway

Dotted keys address the nested parameter groups; unknown keys are errors.
Outputs are CSV (RFC-4180 quoting, "\\n" line endings), JSON and SVG.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd
from dotenv import dotenv_values

from models import RunMetrics, SimConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

NESTED_GROUPS = ("model", "idm", "lc", "ctl")


# =============================================================================
# CONFIG FILES
# =============================================================================

def find_config_file(path: PathLike) -> Optional[Path]:
    """Find a config file, trying the given path, then the project's configs/ directory"""
    candidates = [
        Path(path),
        Path(__file__).parent / path,
        Path(__file__).parent / "configs" / Path(path).name,
    ]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    return None


def nest_keys(values: Dict[str, Optional[str]]) -> Dict[str, Any]:
    """Turn {'model.alpha': '0.5'} into {'model': {'alpha': '0.5'}}"""
    data: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            raise ValueError(f"config key '{key}' has no value")
        parts = key.strip().split(".")
        if len(parts) == 1:
            data[parts[0]] = value
        elif len(parts) == 2:
            group, name = parts
            if group not in NESTED_GROUPS:
                raise ValueError(f"unknown config group '{group}' in key '{key}'")
            data.setdefault(group, {})[name] = value
        else:
            raise ValueError(f"config key '{key}' is nested too deeply")
    return data


def load_sim_config(path: PathLike, **overrides) -> SimConfig:
    """
    Parse a config file into a validated SimConfig.

    Keyword overrides (e.g. seed=7) win over the file. Validation errors are
    pydantic ValidationErrors, which are ValueErrors naming the bad key.
    """
    found = find_config_file(path)
    if found is None:
        raise FileNotFoundError(f"config file not found: {path}")
    data = nest_keys(dotenv_values(found))
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = SimConfig(**data)
    logger.info(f"✅ Loaded config {found} ({cfg.n_lanes} lanes, {cfg.total_vehicles} vehicles)")
    return cfg


# =============================================================================
# OUTPUTS
# =============================================================================

def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"✅ Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table not found: {path}")
    return pd.read_csv(path)


def write_metrics(metrics: RunMetrics, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(metrics.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"✅ Wrote run metrics to {path}")
    return path


def read_metrics(path: PathLike) -> RunMetrics:
    return RunMetrics.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_text(text: str, path: PathLike) -> Path:
    """SVG and other text documents, always with "\\n" line endings"""
    path = _prepare(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path
