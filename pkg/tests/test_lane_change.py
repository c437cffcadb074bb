"""
Tests for the incentive / safety / cooldown lane-change rule.
"""

import numpy as np
import pytest

from conftest import make_lane, make_road
from dynamics import equilibrium_speed
from exceptions import OccupiedSlotError
from lane_change import hypothetical_accels, lane_change_pass, mobil_decide
from models import EventKind, LaneChangeParams, VehicleClass

LOOSE_SAFETY = LaneChangeParams(delta_i=3.0, delta_s=5.0, tau=5.0)
TIGHT_SAFETY = LaneChangeParams(delta_i=3.0, delta_s=0.5, tau=5.0)


def uniform_with_hole(params):
    """Lane 0 uniform at equilibrium; lane 1 identical except the slot at 100 m is empty"""
    v = equilibrium_speed(10.0, params)
    positions = np.arange(24) * 10.0
    lane0 = make_lane(0, 240.0, positions, speeds=[v] * 24)
    holed = [x for x in positions if x != 100.0]
    lane1 = make_lane(1, 240.0, holed, speeds=[v] * 23, start_id=100)
    return make_road(lane0, lane1)


def blocked_mover(klass=None):
    """
    Vehicle 0 is stuck 6 m behind a stopped car in lane 0; lane 1 is open
    ahead but has a fast follower 6 m behind the mapped slot.
    """
    lane0 = make_lane(0, 240.0, [100.0, 106.0], speeds=[5.0, 0.0], klass=klass)
    lane1 = make_lane(1, 240.0, [94.0, 200.0], speeds=[8.0, 5.0], start_id=10)
    return make_road(lane0, lane1)


def test_equilibrium_accelerations_are_zero(params):
    road = uniform_with_hole(params)
    acc = hypothetical_accels(road, 10, 1, params)
    assert acc.a_self_now == pytest.approx(0.0, abs=1e-12)
    assert acc.a_self_new == pytest.approx(0.0, abs=1e-12)
    assert acc.a_new_follower == pytest.approx(0.0, abs=1e-12)


def test_no_gain_means_no_change(params):
    road = uniform_with_hole(params)
    assert mobil_decide(road, 10, LaneChangeParams(delta_i=0.6, delta_s=5.0), 50.0, params) is None


def test_empty_target_lane(params):
    road = make_road(make_lane(0, 240.0, [0.0, 50.0], speeds=[5.0, 5.0]), make_lane(1, 240.0, [], start_id=10))
    acc = hypothetical_accels(road, 0, 1, params)
    assert acc.a_new_follower is None
    assert acc.a_self_new == pytest.approx(min(2.5, 0.5 * (9.75 - 5.0)), abs=1e-6)


def test_occupied_slot_raises(params):
    v = equilibrium_speed(10.0, params)
    positions = np.arange(24) * 10.0
    road = make_road(
        make_lane(0, 240.0, positions, speeds=[v] * 24),
        make_lane(1, 240.0, positions, speeds=[v] * 24, start_id=100),
    )
    with pytest.raises(OccupiedSlotError):
        hypothetical_accels(road, 10, 1, params)
    assert mobil_decide(road, 10, LOOSE_SAFETY, 50.0, params) is None


def test_tight_target_gap_raises(params):
    road = make_road(make_lane(0, 240.0, [100.0], speeds=[5.0]), make_lane(1, 240.0, [103.0], speeds=[5.0], start_id=10))
    with pytest.raises(OccupiedSlotError):
        hypothetical_accels(road, 0, 1, params)


def test_safety_veto(params):
    road = blocked_mover()
    acc = hypothetical_accels(road, 0, 1, params)
    assert acc.a_self_now == -4.0
    assert acc.a_new_follower == -4.0
    assert acc.a_self_new > acc.a_self_now + 3.0
    assert mobil_decide(road, 0, TIGHT_SAFETY, 20.0, params) is None

    decision = mobil_decide(road, 0, LOOSE_SAFETY, 20.0, params)
    assert decision is not None
    assert (decision.source, decision.target) == (0, 1)
    assert decision.a_fol == -4.0


def test_cooldown_is_strict(params):
    road = blocked_mover()
    road.lanes[0].last_lc[0] = 15.0
    assert mobil_decide(road, 0, LOOSE_SAFETY, 20.0, params) is None
    assert mobil_decide(road, 0, LOOSE_SAFETY, 20.01, params) is not None


def test_av_is_skipped(params):
    road = blocked_mover(klass={0: VehicleClass.AV})
    assert mobil_decide(road, 0, LOOSE_SAFETY, 20.0, params) is None


def test_tie_goes_to_lower_lane(params):
    road = make_road(
        make_lane(0, 240.0, [], start_id=50),
        make_lane(1, 240.0, [100.0, 106.0], speeds=[5.0, 0.0]),
        make_lane(2, 240.0, [], start_id=60),
    )
    decision = mobil_decide(road, 0, LOOSE_SAFETY, 20.0, params)
    assert decision.target == 0
    assert decision.a_fol is None


def test_pass_applies_one_change_and_respects_cooldown(params):
    road = blocked_mover()
    road, events = lane_change_pass(road, LOOSE_SAFETY, 10.0, params)

    assert len(events) == 1
    event = events[0]
    assert event.kind == EventKind.LANE_CHANGE
    assert (event.vid, event.from_lane, event.to_lane) == (0, 0, 1)
    assert road.total_vehicles() == 4
    assert road.locate(0)[0] == 1
    assert road.vehicle(0).last_lc_time == 10.0
    road.check_invariants()

    road, events = lane_change_pass(road, LOOSE_SAFETY, 11.0, params)
    assert events == []


def test_pass_without_candidates_is_a_no_op(params):
    road = uniform_with_hole(params)
    before = road.copy()
    road, events = lane_change_pass(road, LOOSE_SAFETY, 0.0, params)
    assert events == []
    for a, b in zip(road.lanes, before.lanes):
        assert np.array_equal(a.pos, b.pos)
        assert np.array_equal(a.ids, b.ids)
