"""
Ring Road Wave Simulator - AV Controller
========================================
Longitudinal proportional controller with a quasi-stationary target ramp and
a safety override, plus the variance-driven lateral controller.

The AV chases a target speed

    target(t) = v_min + (v* - v_min) t / t_tr    for t <= t_tr, v* afterwards
    u(t)      = -k (v_av - target(t))

where v* is the uniform-flow speed of the AV's lane. When the gap to the
leader drops below gap_safe, the target is lowered to the leader's speed.
"""

import logging
import math
from collections import deque
from typing import Deque, List, NamedTuple, Optional

from dynamics import clamp_accel, equilibrium_speed
from exceptions import CollisionError, DomainError, OccupiedSlotError
from lane_change import hypothetical_accels, is_safe
from metrics import lane_speed_variance
from models import ControlParams, IdmParams, LaneChangeParams, ModelParams, TargetMode
from ring import RoadState

logger = logging.getLogger(__name__)


class AvCommand(NamedTuple):
    accel: float
    target: float
    override: bool


# =============================================================================
# LONGITUDINAL CONTROL
# =============================================================================

def av_target_speed(road: RoadState, av_lane: int, p: ControlParams, model: ModelParams,
                    joining: int = 0) -> float:
    """
    Steady-state speed the AV aims for in its current lane.

    HEADWAY uses v*(L_j / n_j) with the AV counted in n_j. PAPER_LITERAL
    evaluates v*((n_j + l_v) / L_j) literally, which is below l_v for any
    realistic lane and therefore raises DomainError.

    joining=1 prices a lane the AV is about to enter.
    """
    lane = road.lanes[av_lane]
    count = lane.n + joining
    if count == 0:
        raise DomainError(f"lane {av_lane} is empty")
    if p.target_mode == TargetMode.PAPER_LITERAL:
        argument = (count + model.l_v) / lane.length
    else:
        argument = lane.length / count
    return equilibrium_speed(argument, model)


def ramp_speed(t: float, v_star: float, p: ControlParams) -> float:
    """Linear ramp from v_min at t=0 to v_star at t_tr, flat afterwards"""
    if t >= p.t_tr:
        return v_star
    return p.v_min + (v_star - p.v_min) * t / p.t_tr


def av_command(v_av: float, gap: float, v_leader: float, t: float, p: ControlParams,
               model: ModelParams, v_star: float) -> AvCommand:
    """Capped controller output together with the target it tracked"""
    if not gap > model.l_v:
        raise CollisionError(f"AV gap {gap:.6f} m leaves no room for a {model.l_v} m vehicle", gap=gap, time=t)
    target = ramp_speed(t, v_star, p)
    override = gap < p.gap_safe
    if override:
        target = min(target, v_leader)
    u = -p.k * (v_av - target)
    return AvCommand(accel=clamp_accel(u, model), target=target, override=override)


def av_accel(v_av: float, gap: float, v_leader: float, t: float, p: ControlParams,
             model: ModelParams, v_star: float) -> float:
    return av_command(v_av, gap, v_leader, t, p, model, v_star).accel


# =============================================================================
# VARIANCE WINDOWS
# =============================================================================

class VarianceWindow:
    """
    Per-lane ring buffers of instantaneous speed variance over the last t1 seconds.

    One sample per timestep; integral() is the Riemann sum of the stored
    samples times dt.
    """

    def __init__(self, n_lanes: int, t1: float, dt: float):
        self.dt = dt
        self.size = max(1, int(round(t1 / dt)))
        self.times: Deque[float] = deque(maxlen=self.size)
        self.samples: List[Deque[float]] = [deque(maxlen=self.size) for _ in range(n_lanes)]

    def push(self, t: float, variances) -> None:
        self.times.append(t)
        for buf, value in zip(self.samples, variances):
            buf.append(float(value))

    def integral(self, lane_id: int) -> float:
        return math.fsum(self.samples[lane_id]) * self.dt

    def integrals(self) -> List[float]:
        return [self.integral(j) for j in range(len(self.samples))]

    def __len__(self) -> int:
        return len(self.times)


def update_variance_windows(win: VarianceWindow, road: RoadState, t: float) -> VarianceWindow:
    """Append every lane's current speed variance at time t"""
    win.push(t, [lane_speed_variance(lane) for lane in road.lanes])
    return win


# =============================================================================
# LATERAL CONTROL
# =============================================================================

def av_lateral_decide(road: RoadState, av_vid: int, win: VarianceWindow, p: ControlParams,
                      lc: LaneChangeParams, t: float, model: ModelParams,
                      idm: Optional[IdmParams] = None) -> Optional[int]:
    """
    Adjacent lane the AV should move to, or None.

    The AV heads for the lane whose windowed variance integral beats its own
    by more than c1, once t > t1 and t > t2 + t_0, provided the move passes
    the safety predicates in the target lane. Of several candidates the
    largest integral wins. t_0 is -inf before the first AV lane change.

    The AV's own post-move acceleration is its controller output against the
    new leader, with the target speed of the lane it would join; the new
    follower is judged by its driver model as usual.
    """
    if not t > p.t1:
        return None
    lane_id, idx = road.locate(av_vid)
    last = float(road.lanes[lane_id].last_lc[idx])
    if not t > p.t2 + last:
        return None

    own = win.integral(lane_id)
    best: Optional[int] = None
    best_integral = -math.inf
    for target in road.adjacent(lane_id):
        other = win.integral(target)
        if not other - own > p.c1:
            continue
        try:
            accels = hypothetical_accels(road, av_vid, target, model, idm)
        except OccupiedSlotError:
            continue
        v_star = av_target_speed(road, target, p, model, joining=1)
        v_av = float(road.lanes[lane_id].vel[idx])
        a_ctl = av_command(v_av, accels.gap_ahead, accels.v_new_leader, t, p, model, v_star).accel
        accels = accels._replace(a_self_new=a_ctl)
        if not is_safe(accels, lc.delta_s):
            logger.debug(f"AV {av_vid}: lane {target} busier but unsafe at t={t:.2f}s")
            continue
        if other > best_integral:
            best, best_integral = target, other
    return best


class AvController:
    """Per-run controller state: target speed, variance windows, override flag"""

    def __init__(self, vid: int, ctl: ControlParams, model: ModelParams, n_lanes: int, dt: float):
        self.vid = vid
        self.ctl = ctl
        self.model = model
        self.window = VarianceWindow(n_lanes, ctl.t1, dt)
        self.v_star: Optional[float] = None
        self.override = False
        self.lane_changes = 0

    def refresh_target(self, road: RoadState) -> float:
        lane_id, _ = road.locate(self.vid)
        self.v_star = av_target_speed(road, lane_id, self.ctl, self.model)
        return self.v_star

    def command(self, v_av: float, gap: float, v_leader: float, t: float) -> AvCommand:
        if self.v_star is None:
            raise RuntimeError("refresh_target() must run before the first command")
        return av_command(v_av, gap, v_leader, t, self.ctl, self.model, self.v_star)
