"""
Tests for the AV longitudinal and lateral controllers.
"""

import numpy as np
import pytest

from av_control import (
    AvController,
    VarianceWindow,
    av_accel,
    av_command,
    av_lateral_decide,
    av_target_speed,
    ramp_speed,
    update_variance_windows,
)
from conftest import make_lane, make_road
from dynamics import equilibrium_speed
from exceptions import CollisionError, DomainError
from lane_change import hypothetical_accels
from models import ControlParams, LaneChangeParams, TargetMode, VehicleClass

CTL = ControlParams()
V_STAR = 5.7656


def test_ramp_speed():
    assert ramp_speed(0.0, V_STAR, CTL) == CTL.v_min
    assert ramp_speed(CTL.t_tr, V_STAR, CTL) == V_STAR
    assert ramp_speed(5 * CTL.t_tr, V_STAR, CTL) == V_STAR
    assert ramp_speed(CTL.t_tr / 2, V_STAR, CTL) == pytest.approx(3.8828)
    # continuous at the end of the ramp
    assert ramp_speed(CTL.t_tr - 1e-9, V_STAR, CTL) == pytest.approx(V_STAR, abs=1e-9)


def test_target_speed_modes(params):
    lane = make_lane(0, 240.0, np.arange(24) * 10.0, klass={0: VehicleClass.AV})
    road = make_road(lane)
    assert av_target_speed(road, 0, CTL, params) == pytest.approx(5.7656, abs=1e-4)

    literal = ControlParams(target_mode=TargetMode.PAPER_LITERAL)
    with pytest.raises(DomainError):
        av_target_speed(road, 0, literal, params)


def test_target_speed_alone_in_lane(params):
    road = make_road(make_lane(0, 240.0, [12.0], klass={0: VehicleClass.AV}))
    assert av_target_speed(road, 0, CTL, params) == pytest.approx(params.v_max, abs=1e-6)


def test_target_mode_parses_any_case():
    assert ControlParams(target_mode="Paper_Literal").target_mode == TargetMode.PAPER_LITERAL


def test_controller_fixed_point_and_cap(params):
    t = 2 * CTL.t_tr
    assert av_accel(V_STAR, 50.0, V_STAR, t, CTL, params, V_STAR) == pytest.approx(0.0)
    assert av_accel(3.0, 50.0, 3.0, t, CTL, params, V_STAR) == 2.5


def test_override_shadows_leader(params):
    t = 2 * CTL.t_tr
    assert params.l_v < 5.0 < CTL.gap_safe
    cmd = av_command(3.0, 5.0, 1.0, t, CTL, params, V_STAR)
    assert cmd.override
    assert cmd.target == 1.0
    assert cmd.accel == pytest.approx(-CTL.k * (3.0 - 1.0))

    # A faster leader does not raise the target
    cmd = av_command(3.0, 5.0, 9.0, t, CTL, params, V_STAR)
    assert cmd.target == V_STAR


def test_controller_rejects_overlap(params):
    with pytest.raises(CollisionError):
        av_accel(3.0, params.l_v, 3.0, 0.0, CTL, params, V_STAR)


def test_variance_window_integral():
    lane = make_lane(0, 240.0, [0.0, 100.0], speeds=[0.0, 2.0])
    road = make_road(lane)
    win = VarianceWindow(1, t1=10.0, dt=0.02)
    for k in range(800):
        update_variance_windows(win, road, k * 0.02)
    assert len(win) == 500
    assert win.integral(0) == pytest.approx(10.0)


def test_variance_window_uniform_speeds_is_zero():
    road = make_road(make_lane(0, 240.0, [0.0, 100.0], speeds=[3.0, 3.0]),
                     make_lane(1, 240.0, [50.0], speeds=[1.0], start_id=5))
    win = VarianceWindow(2, t1=1.0, dt=0.1)
    for k in range(30):
        update_variance_windows(win, road, k * 0.1)
    assert win.integrals() == [0.0, 0.0]


# Ramp finished well before the lateral checks below
LATERAL_CTL = ControlParams(t_tr=1.0)


def lateral_setup():
    """AV alone at 0 m in lane 0; lane 1 has room around 0 m"""
    lane0 = make_lane(0, 240.0, [0.0, 120.0], speeds=[5.0, 5.0], klass={0: VehicleClass.AV})
    lane1 = make_lane(1, 240.0, [100.0, 200.0], speeds=[5.0, 5.0], start_id=10)
    road = make_road(lane0, lane1)
    win = VarianceWindow(2, t1=CTL.t1, dt=0.02)
    for k in range(win.size):
        win.push(k * 0.02, [0.0, 0.1])
    return road, win


def test_lateral_moves_to_busier_lane(params):
    road, win = lateral_setup()
    assert win.integral(1) - win.integral(0) == pytest.approx(1.0)
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), 20.0, params) == 1


def test_lateral_warm_up_and_threshold(params):
    road, win = lateral_setup()
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), CTL.t1, params) is None

    high_bar = ControlParams(c1=2.0, t_tr=1.0)
    assert av_lateral_decide(road, 0, win, high_bar, LaneChangeParams(), 20.0, params) is None


def test_lateral_equal_variances(params):
    road, _ = lateral_setup()
    win = VarianceWindow(2, t1=CTL.t1, dt=0.02)
    for k in range(win.size):
        win.push(k * 0.02, [0.3, 0.3])
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), 20.0, params) is None


def test_lateral_cooldown(params):
    road, win = lateral_setup()
    road.lanes[0].last_lc[0] = 15.0
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), 25.0, params) is None
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), 25.5, params) == 1


def test_lateral_cooldown_open_before_first_change(params):
    road, win = lateral_setup()
    ctl = ControlParams(t_tr=1.0, t2=15.0)
    assert np.isneginf(road.lanes[0].last_lc[0])
    # t = 12 is inside t2 of t = 0 but no change has happened yet
    assert av_lateral_decide(road, 0, win, ctl, LaneChangeParams(), 12.0, params) == 1


def test_lateral_safety_checked_in_target_lane(params):
    road, win = lateral_setup()
    # Fast follower right behind the mapped slot
    road.lanes[1].pos[1] = 235.0
    road.lanes[1].vel[1] = 9.0
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(), 20.0, params) is None


def slower_leader_setup(gap_ahead):
    """AV at 6 m/s heading for lane 1, whose leader drives 4 m/s gap_ahead ahead"""
    lane0 = make_lane(0, 240.0, [0.0, 120.0], speeds=[6.0, 6.0], klass={0: VehicleClass.AV})
    lane1 = make_lane(1, 240.0, [gap_ahead, 150.0], speeds=[4.0, 4.0], start_id=10)
    road = make_road(lane0, lane1)
    win = VarianceWindow(2, t1=CTL.t1, dt=0.02)
    for k in range(win.size):
        win.push(k * 0.02, [0.0, 0.1])
    return road, win


def test_lateral_safety_uses_controller_for_av(params):
    road, win = slower_leader_setup(8.0)
    lc = LaneChangeParams(delta_s=0.5)
    # A human driver would brake hard behind the slower leader
    bando = hypothetical_accels(road, 0, 1, params)
    assert bando.a_self_new < -lc.delta_s
    assert bando.a_new_follower > -lc.delta_s
    assert (bando.gap_ahead, bando.v_new_leader) == (8.0, 4.0)
    # The AV keeps its own law: gap above gap_safe, target well above 6 m/s
    assert 8.0 > LATERAL_CTL.gap_safe
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, lc, 20.0, params) == 1


def test_lateral_override_blocks_close_slow_leader(params):
    road, win = slower_leader_setup(5.0)
    lc = LaneChangeParams(delta_s=0.5)
    # inside gap_safe the AV would shadow 4 m/s: u = -k (6 - 4)
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, lc, 20.0, params) is None
    assert av_lateral_decide(road, 0, win, LATERAL_CTL, LaneChangeParams(delta_s=2.5), 20.0, params) == 1


def test_target_speed_counts_joining_av(params):
    road = make_road(make_lane(0, 240.0, np.arange(23) * 10.0 + 5.0))
    assert av_target_speed(road, 0, CTL, params, joining=1) == pytest.approx(equilibrium_speed(10.0, params))
    empty = make_road(make_lane(0, 240.0, []))
    assert av_target_speed(empty, 0, CTL, params, joining=1) == pytest.approx(params.v_max, abs=1e-6)


def test_override_off_at_equilibrium_headway(params):
    t = 2 * CTL.t_tr
    v_eq = equilibrium_speed(10.0, params)
    cmd = av_command(v_eq, 10.0, v_eq, t, CTL, params, v_eq)
    assert not cmd.override
    assert cmd.accel == pytest.approx(0.0)


def test_av_controller_tracks_lane(params):
    lane = make_lane(0, 240.0, np.arange(24) * 10.0, klass={0: VehicleClass.AV})
    road = make_road(lane)
    ctl = AvController(0, CTL, params, n_lanes=1, dt=0.02)
    assert ctl.refresh_target(road) == pytest.approx(equilibrium_speed(10.0, params))
    cmd = ctl.command(2.0, 10.0, 2.0, 0.0)
    assert cmd.target == CTL.v_min
    assert cmd.accel == pytest.approx(0.0)
