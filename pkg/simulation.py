"""
Ring Road Wave Simulator - Simulation Engine
============================================
Deterministic time stepping of the hybrid ring-road system.

Each step:
1. every LANE_CHANGE cadence step, the human/collaborative lane-change pass
   and the AV lateral decision run against the current state
2. all accelerations are computed from the frozen state
3. explicit Euler update, v clamped at 0, positions wrapped mod L
4. lane order restored and every gap checked (> l_v)

Trajectory samples are taken between 2 and 3, so column a is the
acceleration applied over the step that starts at the sample time.

Randomness enters only through the initial perturbation drawn from the
run's seeded generator.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from av_control import AvCommand, AvController, av_lateral_decide, update_variance_windows
from dynamics import driver_accel, equilibrium_speed
from exceptions import CollisionError, DomainError, RejectedInsertionError
from lane_change import lane_change_pass
from metrics import aggregate_run, lane_mean_speeds, road_speed_variances
from models import (
    CLASS_CODES,
    CODE_CLASSES,
    EVENT_COLUMNS,
    TRAJECTORY_COLUMNS,
    EventKind,
    RunEvent,
    RunMetrics,
    RunStatus,
    SimConfig,
    VehicleClass,
)
from ring import LaneState, RoadState, check_gaps, move_vehicle

logger = logging.getLogger(__name__)

AV_CODE = CLASS_CODES[VehicleClass.AV]
COLLAB_CODE = CLASS_CODES[VehicleClass.COLLABORATIVE]

# Perturbation redraws per lane before giving up
MAX_REDRAWS = 100


# =============================================================================
# INITIAL STATE
# =============================================================================

def collaborative_indices(n: int, fraction: float) -> np.ndarray:
    """ceil(p n) indices spread as evenly as possible over 0..n-1"""
    if n == 0 or fraction <= 0.0:
        return np.empty(0, dtype=np.int64)
    m = min(n, int(math.ceil(fraction * n - 1e-9)))
    return np.floor(np.arange(m) * n / m + 0.5).astype(np.int64)


def _perturbed_positions(n: int, length: float, amplitude: float, l_v: float,
                         rng: np.random.Generator, lane_id: int) -> np.ndarray:
    base = np.arange(n) * (length / n)
    if amplitude == 0.0 or n == 0:
        return base
    for attempt in range(MAX_REDRAWS):
        pos = np.sort(np.mod(base + rng.uniform(-amplitude, amplitude, n), length))
        if n == 1 or np.all(np.mod(np.roll(pos, -1) - pos, length) > l_v):
            if attempt:
                logger.debug(f"Lane {lane_id}: perturbation accepted after {attempt + 1} draws")
            return pos
    raise DomainError(
        f"lane {lane_id}: no perturbation of amplitude {amplitude} m keeps gaps above {l_v} m "
        f"after {MAX_REDRAWS} draws"
    )


def init_state(cfg: SimConfig, rng: np.random.Generator) -> RoadState:
    """
    Uniform spacing plus a uniform perturbation, all at the equilibrium speed.

    Vehicle ids run consecutively lane by lane. Collaborative drivers get
    (alpha_S, beta_S); index 0 of av_lane becomes the AV when enabled.
    """
    model = cfg.model
    lanes: List[LaneState] = []
    next_id = 0
    for j, (n, length) in enumerate(zip(cfg.n_per_lane, cfg.lane_lengths)):
        lane = LaneState(lane_id=j, length=float(length))
        if n == 0:
            lanes.append(lane)
            continue
        v_eq = equilibrium_speed(length / n, model)
        lane.pos = _perturbed_positions(n, length, cfg.perturbation_amplitude, model.l_v, rng, j)
        lane.ids = np.arange(next_id, next_id + n, dtype=np.int64)
        if cfg.perturbation_amplitude == 0.0:
            lane.headway = np.full(n, length / n)
        else:
            lane.resync_headways()
        lane.vel = np.full(n, v_eq)
        lane.klass = np.zeros(n, dtype=np.int8)
        lane.alpha = np.full(n, model.alpha)
        lane.beta = np.full(n, model.beta)
        lane.last_lc = np.full(n, -np.inf)
        lane.lc_count = np.zeros(n, dtype=np.int64)
        lane.accel = np.zeros(n)

        collab = collaborative_indices(n, cfg.collab_fraction)
        lane.klass[collab] = COLLAB_CODE
        lane.alpha[collab] = cfg.alpha_s
        lane.beta[collab] = cfg.beta_s

        if cfg.av_enabled and j == cfg.av_lane:
            lane.klass[0] = AV_CODE
            lane.alpha[0] = model.alpha
            lane.beta[0] = model.beta

        next_id += n
        lanes.append(lane)

    road = RoadState(lanes=lanes, vehicle_length=model.l_v, time=0.0)
    road.check_invariants()
    return road


# =============================================================================
# STEPPING
# =============================================================================

class StepReport(NamedTuple):
    clamps: int
    command: Optional[AvCommand]


def compute_accelerations(road: RoadState, cfg: SimConfig,
                          controller: Optional[AvController] = None) -> Tuple[List[np.ndarray], Optional[AvCommand]]:
    """Capped accelerations of every vehicle, evaluated on the frozen state"""
    idm = cfg.idm if cfg.idm_enabled else None
    accels: List[np.ndarray] = []
    command: Optional[AvCommand] = None
    for lane in road.lanes:
        if lane.n == 0:
            accels.append(np.empty(0))
            continue
        gaps = lane.gaps()
        v_lead = lane.leader_speeds()
        a = np.atleast_1d(driver_accel(lane.vel, gaps, v_lead, cfg.model,
                                       alpha=lane.alpha, beta=lane.beta, idm=idm)).astype(float)
        if controller is not None:
            for idx in np.flatnonzero(lane.klass == AV_CODE):
                command = controller.command(float(lane.vel[idx]), float(gaps[idx]),
                                             float(v_lead[idx]), road.time)
                a[idx] = command.accel
        accels.append(a)
    return accels, command


def step(road: RoadState, cfg: SimConfig, controller: Optional[AvController] = None,
         t_next: Optional[float] = None) -> StepReport:
    """
    Advance every lane by one explicit Euler step of cfg.dt.

    x uses the speed at the start of the step. Raises CollisionError naming
    the offending pair when any gap ends at or below l_v.
    """
    accels, command = compute_accelerations(road, cfg, controller)
    clamps = advance(road, cfg, accels, t_next)
    return StepReport(clamps=clamps, command=command)


def advance(road: RoadState, cfg: SimConfig, accels: List[np.ndarray],
            t_next: Optional[float] = None) -> int:
    """
    Apply precomputed accelerations for one step; returns the number of v < 0 clamps.

    Headways move by (v_lead - v) dt with the same start-of-step speeds as the
    positions, so equal speeds leave gaps untouched.
    """
    dt = cfg.dt
    t_next = road.time + dt if t_next is None else t_next
    clamps = 0
    for lane, a in zip(road.lanes, accels):
        if lane.n == 0:
            continue
        v_old = lane.vel
        v_new = v_old + a * dt
        clamps += int(np.count_nonzero(v_new < 0.0))
        lane.headway = lane.gaps() + (lane.leader_speeds() - v_old) * dt
        lane.vel = np.maximum(v_new, 0.0)
        lane.pos = np.mod(lane.pos + v_old * dt, lane.length)
        lane.accel = a
        lane.restore_order()
        check_gaps(lane, cfg.model.l_v, t_next)
    road.time = t_next
    return clamps


# =============================================================================
# RUN
# =============================================================================

@dataclass
class RunResult:
    """Everything one run produced; partial when status is not COMPLETED"""
    config: SimConfig
    status: RunStatus
    message: Optional[str]
    trajectory: pd.DataFrame
    events: pd.DataFrame
    times: np.ndarray
    variance: np.ndarray        # [sample, lane], sample 0 is the initial state
    mean_speed: np.ndarray      # [sample, lane]
    overall_speed: np.ndarray   # [sample]
    velocity_clamps: int = 0
    av_vid: Optional[int] = None
    metrics: Optional[RunMetrics] = field(default=None)

    @property
    def completed(self) -> bool:
        return self.status == RunStatus.COMPLETED


class Simulation:
    """
    One run of the ring-road system.

    Usage:
        sim = Simulation(cfg)
        result = sim.run()
    """

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.road = init_state(cfg, self.rng)
        self.idm = cfg.idm if cfg.idm_enabled else None
        self.events: List[RunEvent] = []
        self.velocity_clamps = 0
        self.steps_done = 0

        self.controller: Optional[AvController] = None
        if cfg.av_enabled:
            av_vid = self.road.find_class(VehicleClass.AV)[0]
            self.controller = AvController(av_vid, cfg.ctl, cfg.model, self.road.n_lanes, cfg.dt)
            self.controller.refresh_target(self.road)
        self._ramp_logged = False

        self._times: List[float] = []
        self._variance: List[np.ndarray] = []
        self._speed: List[np.ndarray] = []
        self._overall: List[float] = []
        self._traj_blocks: List[pd.DataFrame] = []

    # -------------------------------------------------------------------------
    # recording
    # -------------------------------------------------------------------------

    def _record_series(self) -> None:
        road = self.road
        variances = road_speed_variances(road)
        self._times.append(road.time)
        self._variance.append(variances)
        self._speed.append(lane_mean_speeds(road))
        total = road.total_vehicles()
        self._overall.append(float(sum(lane.vel.sum() for lane in road.lanes) / total) if total else 0.0)
        if self.controller is not None:
            update_variance_windows(self.controller.window, road, road.time)

    def _record_trajectory(self, accels: List[np.ndarray]) -> None:
        """Snapshot at road.time; a is the acceleration applied from this instant on"""
        for lane, a in zip(self.road.lanes, accels):
            if lane.n == 0:
                continue
            self._traj_blocks.append(pd.DataFrame({
                "t": np.full(lane.n, self.road.time),
                "lane": np.full(lane.n, lane.lane_id, dtype=np.int64),
                "vid": lane.ids.copy(),
                "class": [CODE_CLASSES[int(c)].value for c in lane.klass],
                "x": lane.pos.copy(),
                "v": lane.vel.copy(),
                "a": a.copy(),
            }))

    def _av_event(self, t: float, kind: EventKind, value: float) -> None:
        lane_id, _ = self.road.locate(self.controller.vid)
        self.events.append(RunEvent(t=t, kind=kind, vid=self.controller.vid, from_lane=lane_id, value=value))

    # -------------------------------------------------------------------------
    # decisions
    # -------------------------------------------------------------------------

    def _decision_pass(self, t: float) -> None:
        cfg = self.cfg
        _, events = lane_change_pass(self.road, cfg.lc, t, cfg.model, self.idm)
        self.events.extend(events)

        ctl = self.controller
        if ctl is None:
            return
        target = av_lateral_decide(self.road, ctl.vid, ctl.window, cfg.ctl, cfg.lc, t, cfg.model, self.idm)
        if target is not None:
            source, _ = self.road.locate(ctl.vid)
            gain = ctl.window.integral(target) - ctl.window.integral(source)
            move_vehicle(self.road, ctl.vid, source, target)
            ctl.lane_changes += 1
            self.events.append(RunEvent(t=t, kind=EventKind.LC_VARIANCE, vid=ctl.vid,
                                        from_lane=source, to_lane=target, value=gain))
            logger.debug(f"🔄 AV {ctl.vid}: lane {source} -> {target} (variance gain {gain:.3f}) at t={t:.2f}s")
        ctl.refresh_target(self.road)

    def _track_controller(self, command: Optional[AvCommand], t: float) -> None:
        ctl = self.controller
        if ctl is None or command is None:
            return
        if command.override != ctl.override:
            ctl.override = command.override
            self._av_event(t, EventKind.OVERRIDE, 1.0 if command.override else 0.0)
            logger.debug(f"AV override {'on' if command.override else 'off'} at t={t:.2f}s")
        if not self._ramp_logged and t >= self.cfg.ctl.t_tr:
            self._ramp_logged = True
            self._av_event(t, EventKind.RAMP, ctl.v_star)

    # -------------------------------------------------------------------------
    # main loop
    # -------------------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        n_steps = cfg.n_steps
        status, message = RunStatus.COMPLETED, None

        if self.controller is not None:
            self._av_event(0.0, EventKind.RAMP, cfg.ctl.v_min)
        self._record_series()

        try:
            for k in range(n_steps):
                t = k * cfg.dt
                self.road.time = t
                if k % cfg.lc.iter_lc == 0:
                    self._decision_pass(t)
                accels, command = compute_accelerations(self.road, cfg, self.controller)
                if k % cfg.sample_stride == 0:
                    self._record_trajectory(accels)
                self.velocity_clamps += advance(self.road, cfg, accels, t_next=(k + 1) * cfg.dt)
                self.steps_done = k + 1
                self._track_controller(command, t)
                self._record_series()
            if n_steps % cfg.sample_stride == 0:
                # final sample at t_f
                accels, _ = compute_accelerations(self.road, cfg, self.controller)
                self._record_trajectory(accels)
        except (CollisionError, RejectedInsertionError) as e:
            status, message = RunStatus.COLLISION_ERROR, str(e)
        except DomainError as e:
            status, message = RunStatus.DOMAIN_ERROR, str(e)

        if status != RunStatus.COMPLETED:
            logger.error(f"❌ Run seed={cfg.seed} stopped at t={self.road.time:.2f}s: {message}")
        elif self.velocity_clamps:
            logger.debug(f"Seed {cfg.seed}: speed clamped at 0 {self.velocity_clamps} times")

        result = self._build_result(status, message)
        result.metrics = aggregate_run(result, min(cfg.metrics_window, cfg.t_f))
        logger.info(
            f"✅ Run seed={cfg.seed} {status.value}: mean variance "
            f"{result.metrics.mean_last_window_variance:.4f}, "
            f"{result.metrics.total_lane_changes} lane changes"
        )
        return result

    def _build_result(self, status: RunStatus, message: Optional[str]) -> RunResult:
        n_lanes = self.road.n_lanes
        if self._traj_blocks:
            trajectory = pd.concat(self._traj_blocks, ignore_index=True)[TRAJECTORY_COLUMNS]
        else:
            trajectory = pd.DataFrame(columns=TRAJECTORY_COLUMNS)
        events = events_frame(self.events)
        return RunResult(
            config=self.cfg,
            status=status,
            message=message,
            trajectory=trajectory,
            events=events,
            times=np.asarray(self._times),
            variance=np.asarray(self._variance).reshape(-1, n_lanes),
            mean_speed=np.asarray(self._speed).reshape(-1, n_lanes),
            overall_speed=np.asarray(self._overall),
            velocity_clamps=self.velocity_clamps,
            av_vid=None if self.controller is None else self.controller.vid,
        )


def events_frame(events: List[RunEvent]) -> pd.DataFrame:
    """Event log as a DataFrame with nullable integer lane columns"""
    if not events:
        return pd.DataFrame({c: pd.Series(dtype="object") for c in EVENT_COLUMNS})
    frame = pd.DataFrame([e.model_dump(mode="json") for e in events], columns=EVENT_COLUMNS)
    for col in ("vid", "from_lane", "to_lane"):
        frame[col] = frame[col].astype("Int64")
    return frame


def run(cfg: SimConfig) -> RunResult:
    """Run one configuration to t_f; failures end up in the result status"""
    try:
        sim = Simulation(cfg)
    except (CollisionError, DomainError) as e:
        status = RunStatus.DOMAIN_ERROR if isinstance(e, DomainError) else RunStatus.COLLISION_ERROR
        logger.error(f"❌ Run seed={cfg.seed} could not start: {e}")
        result = RunResult(
            config=cfg,
            status=status,
            message=str(e),
            trajectory=pd.DataFrame(columns=TRAJECTORY_COLUMNS),
            events=events_frame([]),
            times=np.empty(0),
            variance=np.empty((0, cfg.n_lanes)),
            mean_speed=np.empty((0, cfg.n_lanes)),
            overall_speed=np.empty(0),
        )
        result.metrics = aggregate_run(result, min(cfg.metrics_window, cfg.t_f))
        return result
    return sim.run()
