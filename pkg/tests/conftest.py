"""
Shared fixtures and builders for the ring-road tests.
"""

import sys
from pathlib import Path

import pytest

# Add the project root to Python path
PROJECT_ROOT = Path(__file__).parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from models import EventKind, LaneChangeParams, ModelParams, SimConfig, VehicleClass, VehicleState  # noqa: E402
from ring import LaneState, RoadState  # noqa: E402


def make_lane(lane_id, length, positions, speeds=None, start_id=0, klass=None, alpha=0.5, beta=20.0):
    """Lane with vehicles at `positions`; ids start_id, start_id+1, ... in the given order"""
    speeds = speeds if speeds is not None else [0.0] * len(positions)
    klass = klass or {}
    vehicles = [
        VehicleState(
            id=start_id + k,
            pos=float(x),
            vel=float(v),
            klass=klass.get(start_id + k, VehicleClass.HUMAN),
            alpha_i=alpha,
            beta_i=beta,
        )
        for k, (x, v) in enumerate(zip(positions, speeds))
    ]
    return LaneState.from_vehicles(lane_id, length, vehicles)


def make_road(*lanes, time=0.0, l_v=4.5):
    return RoadState(lanes=list(lanes), vehicle_length=l_v, time=time)


def assert_admissible_lane_changes(events, lc):
    """Replay the incentive and safety inequalities on every logged driver lane change"""
    moves = events[events["kind"] == EventKind.LANE_CHANGE.value]
    a_i = moves["a_i"].astype(float)
    a_tilde = moves["a_tilde"].astype(float)
    a_fol = moves["a_fol"].astype(float)
    assert (a_tilde > a_i + lc.delta_i).all()
    assert (a_tilde > -lc.delta_s).all()
    assert (a_fol.isna() | (a_fol > -lc.delta_s)).all()
    return moves


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def lc_params():
    return LaneChangeParams()


@pytest.fixture
def small_config():
    """Three short lanes and a few seconds of simulated time"""
    return SimConfig(
        lane_lengths=[100.0, 100.0, 100.0],
        n_per_lane=[8],
        t_f=4.0,
        metrics_window=2.0,
        seed=11,
    )
