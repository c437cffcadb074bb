"""
Ring Road Wave Simulator - Pydantic Models
==========================================
Parameter groups, experiment descriptions and result records.

The per-step vehicle state lives in numpy arrays (see ring.py); VehicleState
below is the validated snapshot handed out by the public query functions.
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import (
    MODEL_DEFAULTS,
    IDM_DEFAULTS,
    METRICS_WINDOW,
    SAMPLE_STRIDE,
    SWEEP_BOUNDS,
    COLLAB_DEFAULTS,
    BASE_SEED,
)


# =============================================================================
# ENUMS
# =============================================================================

class VehicleClass(str, Enum):
    """Driver populations on the ring"""
    HUMAN = "human"
    AV = "av"
    COLLABORATIVE = "collaborative"


# Integer codes used in the numpy state arrays
CLASS_CODES = {
    VehicleClass.HUMAN: 0,
    VehicleClass.AV: 1,
    VehicleClass.COLLABORATIVE: 2,
}
CODE_CLASSES = {code: klass for klass, code in CLASS_CODES.items()}


class TargetMode(str, Enum):
    """How the AV turns lane occupancy into a steady-state target"""
    PAPER_LITERAL = "paper_literal"   # v*((n_j + l_v) / L_j), literally
    HEADWAY = "headway"               # v*(L_j / n_j)


class RunStatus(str, Enum):
    COMPLETED = "completed"
    COLLISION_ERROR = "collision_error"
    DOMAIN_ERROR = "domain_error"


class EventKind(str, Enum):
    """Rows of the per-run event log"""
    LANE_CHANGE = "LC"
    RAMP = "RAMP"
    OVERRIDE = "OVERRIDE"
    LC_VARIANCE = "LC_VARIANCE"


def _split_list(v):
    """Accept '240,240,240' from config files as well as real lists"""
    if isinstance(v, str):
        return [part.strip() for part in v.split(",") if part.strip()]
    return v


# =============================================================================
# PARAMETER GROUPS
# =============================================================================

class ModelParams(BaseModel):
    """
    Bando-FTL constants and the acceleration caps.

    beta=0 gives the plain Bando (optimal velocity) model, alpha=0 the plain
    follow-the-leader model.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(default=MODEL_DEFAULTS["alpha"], ge=0.0, description="Bando weight [1/s]")
    beta: float = Field(default=MODEL_DEFAULTS["beta"], ge=0.0, description="FTL weight [m^2/s]")
    l_v: float = Field(default=MODEL_DEFAULTS["l_v"], gt=0.0, description="Vehicle length [m]")
    d_0: float = Field(default=MODEL_DEFAULTS["d_0"], gt=0.0, description="OV minimal distance [m]")
    v_max: float = Field(default=MODEL_DEFAULTS["v_max"], gt=0.0, description="OV asymptotic speed [m/s]")
    a_cap_max: float = Field(default=MODEL_DEFAULTS["a_cap_max"], gt=0.0, description="Max acceleration [m/s^2]")
    a_cap_min: float = Field(default=MODEL_DEFAULTS["a_cap_min"], gt=0.0, description="Max deceleration magnitude [m/s^2]")

    @model_validator(mode="after")
    def check_weights(self):
        if self.alpha == 0.0 and self.beta == 0.0:
            raise ValueError("alpha and beta cannot both be zero")
        return self


class IdmParams(BaseModel):
    """Intelligent Driver Model constants"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    v0: float = Field(default=IDM_DEFAULTS["v0"], gt=0.0, description="Target speed [m/s]")
    s0: float = Field(default=IDM_DEFAULTS["s0"], gt=0.0, description="Minimum gap [m]")
    T: float = Field(default=IDM_DEFAULTS["T"], gt=0.0, description="Time headway [s]")
    a: float = Field(default=IDM_DEFAULTS["a"], gt=0.0, description="Max acceleration [m/s^2]")
    b: float = Field(default=IDM_DEFAULTS["b"], gt=0.0, description="Comfortable deceleration [m/s^2]")
    delta: float = Field(default=IDM_DEFAULTS["delta"], gt=0.0, description="Free-road exponent")


class LaneChangeParams(BaseModel):
    """Incentive / safety / cooldown thresholds"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    delta_i: float = Field(default=MODEL_DEFAULTS["delta_i"], gt=0.0, description="Incentive threshold [m/s^2]")
    delta_s: float = Field(default=MODEL_DEFAULTS["delta_s"], gt=0.0, description="Safety threshold [m/s^2]")
    tau: float = Field(default=MODEL_DEFAULTS["tau"], ge=0.0, description="Cooldown [s]")
    iter_lc: int = Field(default=MODEL_DEFAULTS["iter_lc"], ge=1, description="Decision cadence [steps]")


class ControlParams(BaseModel):
    """AV longitudinal and lateral controller settings"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    k: float = Field(default=MODEL_DEFAULTS["k"], gt=0.0, description="Proportional gain [1/s]")
    v_min: float = Field(default=MODEL_DEFAULTS["v_min"], ge=0.0, description="Ramp start speed [m/s]")
    t_tr: float = Field(default=MODEL_DEFAULTS["t_tr"], gt=0.0, description="Ramp duration [s]")
    gap_safe: float = Field(default=MODEL_DEFAULTS["gap_safe"], gt=0.0, description="Override engagement gap [m]")
    c1: float = Field(default=MODEL_DEFAULTS["c1"], ge=0.0, description="Variance-integral threshold")
    t1: float = Field(default=MODEL_DEFAULTS["t1"], gt=0.0, description="Variance averaging window [s]")
    t2: float = Field(default=MODEL_DEFAULTS["t2"], ge=0.0, description="AV lane-change cooldown [s]")
    target_mode: TargetMode = Field(default=TargetMode.HEADWAY)

    @field_validator("target_mode", mode="before")
    @classmethod
    def parse_target_mode(cls, v):
        """Config files write 'headway' / 'paper_literal' in any case"""
        if isinstance(v, str):
            return v.strip().lower()
        return v


# =============================================================================
# VEHICLES
# =============================================================================

class VehicleState(BaseModel):
    """Snapshot of one vehicle"""
    id: int = Field(description="Unique vehicle id")
    pos: float = Field(ge=0.0, description="Position on the ring [m]")
    vel: float = Field(ge=0.0, description="Speed [m/s]")
    klass: VehicleClass = Field(default=VehicleClass.HUMAN)
    alpha_i: float = Field(ge=0.0, description="Per-vehicle Bando weight")
    beta_i: float = Field(ge=0.0, description="Per-vehicle FTL weight")
    last_lc_time: float = Field(default=-math.inf, description="Time of last lane change [s]")
    lc_count: int = Field(default=0, ge=0)


# =============================================================================
# SIMULATION CONFIG
# =============================================================================

class SimConfig(BaseModel):
    """
    Full description of one run.

    Nested groups are addressed with dotted keys in config files
    (model.alpha, lc.delta_i, ctl.k, idm.v0).
    """
    model_config = ConfigDict(extra="forbid")

    lane_lengths: List[float] = Field(
        default_factory=lambda: [MODEL_DEFAULTS["lane_length"]] * MODEL_DEFAULTS["lanes"],
        description="Length of each lane [m]; lane count J = len(lane_lengths)",
    )
    n_per_lane: List[int] = Field(
        default_factory=lambda: [MODEL_DEFAULTS["n_per_lane"]] * MODEL_DEFAULTS["lanes"],
        description="Initial vehicle count per lane",
    )
    dt: float = Field(default=MODEL_DEFAULTS["dt"], gt=0.0)
    t_f: float = Field(default=MODEL_DEFAULTS["t_f"], gt=0.0)

    model: ModelParams = Field(default_factory=ModelParams)
    idm_enabled: bool = Field(default=False, description="Use IDM instead of Bando-FTL for non-AV drivers")
    idm: IdmParams = Field(default_factory=IdmParams)
    lc: LaneChangeParams = Field(default_factory=LaneChangeParams)

    av_enabled: bool = Field(default=False)
    av_lane: int = Field(default=1, ge=0, description="Lane whose first vehicle becomes the AV")
    ctl: ControlParams = Field(default_factory=ControlParams)

    collab_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    alpha_s: float = Field(default=MODEL_DEFAULTS["alpha_s"], ge=0.0)
    beta_s: float = Field(default=MODEL_DEFAULTS["beta_s"], ge=0.0)

    perturbation_amplitude: float = Field(default=MODEL_DEFAULTS["perturbation_amplitude"], ge=0.0)
    seed: int = Field(default=0)
    sample_stride: int = Field(default=SAMPLE_STRIDE, ge=1)
    metrics_window: float = Field(default=METRICS_WINDOW, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def broadcast_lanes(cls, data):
        """Split comma lists and repeat a single vehicle count over all lanes"""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "lane_lengths" in data:
            data["lane_lengths"] = _split_list(data["lane_lengths"])
            data.setdefault("n_per_lane", [MODEL_DEFAULTS["n_per_lane"]])
        if "n_per_lane" in data:
            counts = _split_list(data["n_per_lane"])
            if not isinstance(counts, (list, tuple)):
                counts = [counts]
            lengths = data.get("lane_lengths")
            n_lanes = len(lengths) if lengths is not None else MODEL_DEFAULTS["lanes"]
            if len(counts) == 1 and n_lanes > 1:
                counts = list(counts) * n_lanes
            data["n_per_lane"] = counts
        return data

    @model_validator(mode="after")
    def check_geometry(self):
        if not self.lane_lengths:
            raise ValueError("at least one lane is required")
        if len(self.n_per_lane) != len(self.lane_lengths):
            raise ValueError(
                f"n_per_lane has {len(self.n_per_lane)} entries for {len(self.lane_lengths)} lanes"
            )
        for j, (n, length) in enumerate(zip(self.n_per_lane, self.lane_lengths)):
            if length <= 0:
                raise ValueError(f"lane {j}: length must be positive")
            if n < 0:
                raise ValueError(f"lane {j}: vehicle count must be non-negative")
            if n * self.model.l_v >= length:
                raise ValueError(f"lane {j}: {n} vehicles of {self.model.l_v} m do not fit in {length} m")
        if self.av_enabled:
            if self.av_lane >= len(self.lane_lengths):
                raise ValueError(f"av_lane {self.av_lane} does not exist")
            if self.n_per_lane[self.av_lane] < 1:
                raise ValueError("the AV lane needs at least one vehicle")
        if self.ctl.gap_safe <= self.model.l_v:
            raise ValueError("ctl.gap_safe must exceed the vehicle length")
        return self

    @property
    def n_lanes(self) -> int:
        return len(self.lane_lengths)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_f / self.dt))

    @property
    def total_vehicles(self) -> int:
        return int(sum(self.n_per_lane))

    def with_thresholds(self, delta_i: float, delta_s: float) -> "SimConfig":
        """Copy with new incentive / safety thresholds"""
        lc = self.lc.model_copy(update={"delta_i": delta_i, "delta_s": delta_s})
        return self.model_copy(update={"lc": lc})

    def with_seed(self, seed: int) -> "SimConfig":
        return self.model_copy(update={"seed": int(seed)})


# =============================================================================
# ANALYSIS / RESULT RECORDS
# =============================================================================

class StabilityReport(BaseModel):
    """Linear stability of uniform flow on a single lane"""
    n: int
    length: float
    headway: float
    paper_criterion_unstable: bool = Field(description="Literal inequality holds")
    paper_lhs: float
    paper_rhs: float
    eigen_max_real: float = Field(description="Largest real part excluding the translation mode [1/s]")
    eigen_unstable: bool
    string_margin: float = Field(description="alpha/2 + beta/(h-l_v)^2 - V'(h); negative means unstable")

    def summary(self) -> str:
        lines = [
            f"n={self.n} L={self.length:g} m  headway={self.headway:.4f} m",
            f"literal criterion: lhs={self.paper_lhs:.4f} rhs={self.paper_rhs:.6f} "
            f"-> {'unstable' if self.paper_criterion_unstable else 'stable'}",
            f"eigenvalues: max real part={self.eigen_max_real:.6e} "
            f"-> {'unstable' if self.eigen_unstable else 'stable'}",
            f"long-wave margin: {self.string_margin:.6f}",
        ]
        if self.paper_criterion_unstable != self.eigen_unstable:
            lines.append("NOTE: literal criterion and eigenvalue analysis disagree")
        return "\n".join(lines)


class LaneChangeDecision(BaseModel):
    """An accepted lane change and the accelerations it was based on"""
    vid: int
    source: int
    target: int
    a_i: float = Field(description="Current-lane acceleration")
    a_tilde: float = Field(description="Expected acceleration in the target lane")
    a_fol: Optional[float] = Field(default=None, description="Expected acceleration of the new follower")

    @model_validator(mode="after")
    def check_adjacent(self):
        if abs(self.source - self.target) != 1:
            raise ValueError("lane changes are between adjacent lanes only")
        return self


class RunEvent(BaseModel):
    """One row of the event log"""
    t: float
    kind: EventKind
    vid: int
    from_lane: Optional[int] = None
    to_lane: Optional[int] = None
    a_i: Optional[float] = None
    a_tilde: Optional[float] = None
    a_fol: Optional[float] = None
    value: Optional[float] = None

    @classmethod
    def from_decision(cls, t: float, decision: LaneChangeDecision, kind: EventKind = EventKind.LANE_CHANGE):
        return cls(
            t=t,
            kind=kind,
            vid=decision.vid,
            from_lane=decision.source,
            to_lane=decision.target,
            a_i=decision.a_i,
            a_tilde=decision.a_tilde,
            a_fol=decision.a_fol,
        )


EVENT_COLUMNS = ["t", "kind", "vid", "from_lane", "to_lane", "a_i", "a_tilde", "a_fol", "value"]

TRAJECTORY_COLUMNS = ["t", "lane", "vid", "class", "x", "v", "a"]


class RunMetrics(BaseModel):
    """Scalars and sampled series for one run"""
    seed: int
    status: RunStatus = RunStatus.COMPLETED
    valid: bool = True
    message: Optional[str] = None
    window: float = Field(description="Averaging window W [s]")
    mean_last_window_variance: float = Field(default=0.0, ge=0.0)
    lane_window_variance: List[float] = Field(default_factory=list)
    mean_speed: List[float] = Field(default_factory=list, description="Per-lane mean speed over W")
    mean_speed_overall: float = 0.0
    total_lane_changes: int = Field(default=0, ge=0)
    av_lane_changes: int = Field(default=0, ge=0)
    velocity_clamps: int = Field(default=0, ge=0)
    series_times: List[float] = Field(default_factory=list)
    variance_series: List[List[float]] = Field(default_factory=list, description="[sample][lane]")


class BatchMetrics(BaseModel):
    """Seed-averaged metrics for one experiment cell"""
    delta_i: float
    delta_s: float
    collab_fraction: float = 0.0
    seeds: int = Field(ge=0)
    failures: int = Field(default=0, ge=0)
    mean_var: float
    std_var: float
    mean_speed: float
    std_speed: float
    mean_lane_changes: float
    std_lane_changes: float

    def to_row(self) -> dict:
        return self.model_dump()


class CellKey(BaseModel):
    """Identifies the configuration shared by a batch of runs"""
    model_config = ConfigDict(frozen=True)

    delta_i: float
    delta_s: float
    collab_fraction: float = 0.0


# =============================================================================
# EXPERIMENT SPECS
# =============================================================================

def _grid(lo: float, hi: float, steps: int) -> List[float]:
    if steps == 1:
        return [round(float(lo), 10)]
    return [round(float(x), 10) for x in np.linspace(lo, hi, steps)]


class SweepSpec(BaseModel):
    """Threshold sweep over (delta_i, delta_s)"""
    di_min: float = SWEEP_BOUNDS["delta_i"][0]
    di_max: float = SWEEP_BOUNDS["delta_i"][1]
    di_steps: int = Field(default=13, ge=1)
    ds_min: float = SWEEP_BOUNDS["delta_s"][0]
    ds_max: float = SWEEP_BOUNDS["delta_s"][1]
    ds_steps: int = Field(default=10, ge=1)
    seeds: int = Field(default=100, ge=1)
    base: SimConfig = Field(default_factory=SimConfig)
    av_enabled: bool = False
    base_seed: int = BASE_SEED
    window: float = Field(default=METRICS_WINDOW, gt=0.0)
    enforce_bounds: bool = True

    @model_validator(mode="after")
    def check_ranges(self):
        for name, lo, hi, steps in (
            ("delta_i", self.di_min, self.di_max, self.di_steps),
            ("delta_s", self.ds_min, self.ds_max, self.ds_steps),
        ):
            if lo <= 0 or hi < lo:
                raise ValueError(f"{name}: invalid range {lo}:{hi}")
            if steps == 1 and lo != hi:
                raise ValueError(f"{name}: a single step needs min == max")
            if self.enforce_bounds:
                b_lo, b_hi = SWEEP_BOUNDS[name]
                if lo < b_lo or hi > b_hi:
                    raise ValueError(f"{name}: range {lo}:{hi} outside [{b_lo}, {b_hi}]")
        if self.window > self.base.t_f:
            raise ValueError("averaging window longer than the run")
        return self

    def delta_i_values(self) -> List[float]:
        return _grid(self.di_min, self.di_max, self.di_steps)

    def delta_s_values(self) -> List[float]:
        return _grid(self.ds_min, self.ds_max, self.ds_steps)


def default_collab_base() -> SimConfig:
    return SimConfig(
        lane_lengths=[COLLAB_DEFAULTS["lane_length"]],
        n_per_lane=[COLLAB_DEFAULTS["n"]],
        t_f=COLLAB_DEFAULTS["t_f"],
        metrics_window=COLLAB_DEFAULTS["window"],
    )


class CollabSpec(BaseModel):
    """Collaborative-proportion experiment on a single-lane ring"""
    counts: List[int] = Field(default_factory=lambda: list(COLLAB_DEFAULTS["counts"]))
    seeds: int = Field(default=COLLAB_DEFAULTS["seeds"], ge=1)
    base: SimConfig = Field(default_factory=default_collab_base)
    window: float = Field(default=COLLAB_DEFAULTS["window"], gt=0.0)
    base_seed: int = BASE_SEED
    check_stability: bool = True

    @field_validator("counts", mode="before")
    @classmethod
    def parse_counts(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def check_counts(self):
        if self.base.n_lanes != 1:
            raise ValueError("the collaborative experiment runs on a single lane")
        n = self.base.n_per_lane[0]
        for count in self.counts:
            if count < 0 or count > n:
                raise ValueError(f"collaborative count {count} outside [0, {n}]")
        if self.window > self.base.t_f:
            raise ValueError("averaging window longer than the run")
        return self

    @property
    def n(self) -> int:
        return self.base.n_per_lane[0]

    def fraction(self, count: int) -> float:
        return count / self.n
