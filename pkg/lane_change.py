"""
Ring Road Wave Simulator - Lane Changing
========================================
Incentive / safety / cooldown rule for human and collaborative drivers.

A vehicle i moves to an adjacent lane j iff

    a~_i^j > a_i + delta_I                      (incentive)
    a~_i^j > -delta_S and a~_fol^j > -delta_S   (safety)
    t > t_0 + tau                               (cooldown)

All accelerations are the capped values computed from the frozen state.
"""

import logging
from typing import List, NamedTuple, Optional, Tuple

from dynamics import driver_accel
from exceptions import OccupiedSlotError
from models import (
    CLASS_CODES,
    EventKind,
    IdmParams,
    LaneChangeDecision,
    LaneChangeParams,
    ModelParams,
    RunEvent,
    VehicleClass,
)
from ring import LaneState, RoadState, map_position, move_vehicle, neighbor_indices

logger = logging.getLogger(__name__)

AV_CODE = CLASS_CODES[VehicleClass.AV]


class HypotheticalAccels(NamedTuple):
    a_self_now: float
    a_self_new: float
    a_new_follower: Optional[float]  # None when the target lane is empty
    gap_ahead: Optional[float] = None
    v_new_leader: Optional[float] = None


def _accel_for(lane: LaneState, idx: int, gap: float, v_leader: float,
               model: ModelParams, idm: Optional[IdmParams]) -> float:
    """Capped acceleration of lane vehicle idx for a given gap / leader speed"""
    driver_idm = None if lane.klass[idx] == AV_CODE else idm
    return float(driver_accel(
        float(lane.vel[idx]), gap, float(v_leader), model,
        alpha=float(lane.alpha[idx]), beta=float(lane.beta[idx]), idm=driver_idm,
    ))


def _current_accel(lane: LaneState, idx: int, model: ModelParams, idm: Optional[IdmParams]) -> float:
    lead = (idx + 1) % lane.n
    return _accel_for(lane, idx, float(lane.gaps()[idx]), lane.vel[lead], model, idm)


def hypothetical_accels(road: RoadState, vid: int, target: int, model: ModelParams,
                        idm: Optional[IdmParams] = None) -> HypotheticalAccels:
    """
    Accelerations before and after a prospective move of vid into target.

    Raises OccupiedSlotError when the mapped slot is taken or leaves a gap
    <= l_v on either side.
    """
    lane_id, idx = road.locate(vid)
    if target not in road.adjacent(lane_id):
        raise ValueError(f"lane {target} is not adjacent to lane {lane_id}")
    source = road.lanes[lane_id]
    dest = road.lanes[target]

    a_now = _current_accel(source, idx, model, idm)

    new_pos = map_position(float(source.pos[idx]), source.length, dest.length)
    lead, fol = neighbor_indices(dest, new_pos)
    v_self = float(source.vel[idx])

    if lead is None:
        # Empty lane: the vehicle would lead itself around the whole ring
        a_new = _accel_for(source, idx, dest.length, v_self, model, idm)
        return HypotheticalAccels(a_now, a_new, None, dest.length, v_self)

    gap_ahead = float((dest.pos[lead] - new_pos) % dest.length)
    gap_behind = float((new_pos - dest.pos[fol]) % dest.length)
    if gap_ahead <= model.l_v or gap_behind <= model.l_v:
        raise OccupiedSlotError(
            f"lane {target} at {new_pos:.3f} m: gap ahead {gap_ahead:.3f}, behind {gap_behind:.3f}"
        )

    a_new = _accel_for(source, idx, gap_ahead, dest.vel[lead], model, idm)
    a_fol = _accel_for(dest, fol, gap_behind, v_self, model, idm)
    return HypotheticalAccels(a_now, a_new, a_fol, gap_ahead, float(dest.vel[lead]))


def is_safe(accels: HypotheticalAccels, delta_s: float) -> bool:
    """Safety half of the rule: neither the mover nor its new follower brakes harder than delta_s"""
    if not accels.a_self_new > -delta_s:
        return False
    return accels.a_new_follower is None or accels.a_new_follower > -delta_s


def mobil_decide(road: RoadState, vid: int, params: LaneChangeParams, t: float,
                 model: ModelParams, idm: Optional[IdmParams] = None) -> Optional[LaneChangeDecision]:
    """
    Lane-change decision for one human or collaborative vehicle.

    Returns None unless an adjacent lane passes incentive, safety and
    cooldown. Of two qualifying lanes the larger expected acceleration wins,
    ties going to the lower lane index.
    """
    lane_id, idx = road.locate(vid)
    source = road.lanes[lane_id]
    if source.klass[idx] == AV_CODE:
        return None
    if not t > float(source.last_lc[idx]) + params.tau:
        return None

    best: Optional[LaneChangeDecision] = None
    for target in road.adjacent(lane_id):
        try:
            accels = hypothetical_accels(road, vid, target, model, idm)
        except OccupiedSlotError:
            continue
        if not accels.a_self_new > accels.a_self_now + params.delta_i:
            continue
        if not is_safe(accels, params.delta_s):
            continue
        if best is None or accels.a_self_new > best.a_tilde:
            best = LaneChangeDecision(
                vid=vid,
                source=lane_id,
                target=target,
                a_i=accels.a_self_now,
                a_tilde=accels.a_self_new,
                a_fol=accels.a_new_follower,
            )
    return best


def lane_change_pass(road: RoadState, params: LaneChangeParams, t: float, model: ModelParams,
                     idm: Optional[IdmParams] = None) -> Tuple[RoadState, List[RunEvent]]:
    """
    One sequential decision sweep in ascending (lane, id) order.

    Accepted changes are applied immediately, so later candidates see them.
    """
    road.time = t
    order = sorted((lane.lane_id, int(v)) for lane in road.lanes for v in lane.ids)
    events: List[RunEvent] = []
    for _, vid in order:
        decision = mobil_decide(road, vid, params, t, model, idm)
        if decision is None:
            continue
        move_vehicle(road, vid, decision.source, decision.target)
        events.append(RunEvent.from_decision(t, decision, EventKind.LANE_CHANGE))
    if events:
        logger.debug(f"🔄 {len(events)} lane change(s) at t={t:.2f}s")
    return road, events
