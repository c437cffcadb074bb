"""
Ring Road Wave Simulator - Ring Topology
========================================
Per-lane vehicle ordering on a circular road.

A LaneState keeps its vehicles as parallel numpy arrays sorted by position,
so the leader of vehicle i is vehicle (i + 1) mod n. Lanes are adjacent
when their ids differ by one.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from exceptions import CollisionError, OccupiedSlotError, RejectedInsertionError
from models import CLASS_CODES, CODE_CLASSES, VehicleClass, VehicleState

logger = logging.getLogger(__name__)


# Array name -> dtype
_FIELDS = {
    "ids": np.int64,
    "pos": np.float64,
    "vel": np.float64,
    "klass": np.int8,
    "alpha": np.float64,
    "beta": np.float64,
    "last_lc": np.float64,
    "lc_count": np.int64,
    "accel": np.float64,
    "headway": np.float64,
}


@dataclass
class LaneState:
    """One lane: its length and its vehicles in ascending position order"""
    lane_id: int
    length: float
    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    pos: np.ndarray = field(default_factory=lambda: np.empty(0))
    vel: np.ndarray = field(default_factory=lambda: np.empty(0))
    klass: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int8))
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0))
    beta: np.ndarray = field(default_factory=lambda: np.empty(0))
    last_lc: np.ndarray = field(default_factory=lambda: np.empty(0))
    lc_count: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    accel: np.ndarray = field(default_factory=lambda: np.empty(0))
    headway: np.ndarray = field(default_factory=lambda: np.empty(0))

    @classmethod
    def from_vehicles(cls, lane_id: int, length: float, vehicles: Iterable[VehicleState]) -> "LaneState":
        """Build a lane from snapshots (sorted here)"""
        ordered = sorted(vehicles, key=lambda v: v.pos)
        lane = cls(lane_id=lane_id, length=float(length))
        lane.ids = np.array([v.id for v in ordered], dtype=np.int64)
        lane.pos = np.array([v.pos for v in ordered], dtype=np.float64)
        lane.vel = np.array([v.vel for v in ordered], dtype=np.float64)
        lane.klass = np.array([CLASS_CODES[v.klass] for v in ordered], dtype=np.int8)
        lane.alpha = np.array([v.alpha_i for v in ordered], dtype=np.float64)
        lane.beta = np.array([v.beta_i for v in ordered], dtype=np.float64)
        lane.last_lc = np.array([v.last_lc_time for v in ordered], dtype=np.float64)
        lane.lc_count = np.array([v.lc_count for v in ordered], dtype=np.int64)
        lane.accel = np.zeros(len(ordered))
        lane.resync_headways()
        return lane

    @property
    def n(self) -> int:
        return int(self.ids.shape[0])

    def vehicle(self, idx: int) -> VehicleState:
        """Snapshot of the vehicle at array index idx"""
        return VehicleState(
            id=int(self.ids[idx]),
            pos=float(self.pos[idx]),
            vel=float(self.vel[idx]),
            klass=CODE_CLASSES[int(self.klass[idx])],
            alpha_i=float(self.alpha[idx]),
            beta_i=float(self.beta[idx]),
            last_lc_time=float(self.last_lc[idx]),
            lc_count=int(self.lc_count[idx]),
        )

    def vehicles(self) -> List[VehicleState]:
        return [self.vehicle(i) for i in range(self.n)]

    def index_of(self, vid: int) -> int:
        hits = np.flatnonzero(self.ids == vid)
        if hits.size == 0:
            raise KeyError(f"vehicle {vid} is not in lane {self.lane_id}")
        return int(hits[0])

    def gaps(self) -> np.ndarray:
        """
        Front-to-front gap of every vehicle to its leader; a lone vehicle sees gap L.

        These are the headways carried by the integrator, not differences of
        wrapped positions, so uniform flow keeps exactly equal gaps.
        """
        if self.headway.shape[0] != self.n:
            self.resync_headways()
        return self.headway

    def positional_gaps(self) -> np.ndarray:
        """Gaps recomputed from the wrapped positions"""
        if self.n == 0:
            return np.empty(0)
        if self.n == 1:
            return np.array([self.length])
        return np.mod(np.roll(self.pos, -1) - self.pos, self.length)

    def resync_headways(self) -> None:
        self.headway = self.positional_gaps()

    def leader_speeds(self) -> np.ndarray:
        return np.roll(self.vel, -1)

    def take(self, idx: int) -> Dict[str, object]:
        """Remove the vehicle at idx and return its fields"""
        record = {name: getattr(self, name)[idx].item() for name in _FIELDS}
        for name in _FIELDS:
            setattr(self, name, np.delete(getattr(self, name), idx))
        return record

    def put(self, record: Dict[str, object]) -> int:
        """Insert a vehicle keeping positions sorted; returns its index"""
        idx = int(np.searchsorted(self.pos, record["pos"], side="left"))
        for name, dtype in _FIELDS.items():
            setattr(self, name, np.insert(getattr(self, name), idx, np.asarray(record[name], dtype=dtype)))
        return idx

    def restore_order(self) -> None:
        """Rotate arrays so positions ascend again after a vehicle wrapped past L"""
        if self.n < 2:
            return
        start = int(np.argmin(self.pos))
        if start == 0:
            return
        for name in _FIELDS:
            setattr(self, name, np.roll(getattr(self, name), -start))

    def copy(self) -> "LaneState":
        lane = LaneState(lane_id=self.lane_id, length=self.length)
        for name in _FIELDS:
            setattr(lane, name, getattr(self, name).copy())
        return lane


@dataclass
class RoadState:
    """All lanes plus the simulation clock"""
    lanes: List[LaneState]
    vehicle_length: float
    time: float = 0.0

    @property
    def n_lanes(self) -> int:
        return len(self.lanes)

    def total_vehicles(self) -> int:
        return sum(lane.n for lane in self.lanes)

    def locate(self, vid: int) -> Tuple[int, int]:
        """(lane_id, index) of a vehicle"""
        for lane in self.lanes:
            hits = np.flatnonzero(lane.ids == vid)
            if hits.size:
                return lane.lane_id, int(hits[0])
        raise KeyError(f"vehicle {vid} is not on the road")

    def vehicle(self, vid: int) -> VehicleState:
        lane_id, idx = self.locate(vid)
        return self.lanes[lane_id].vehicle(idx)

    def adjacent(self, lane_id: int) -> List[int]:
        return [j for j in (lane_id - 1, lane_id + 1) if 0 <= j < self.n_lanes]

    def find_class(self, klass: VehicleClass) -> List[int]:
        code = CLASS_CODES[klass]
        return sorted(int(v) for lane in self.lanes for v in lane.ids[lane.klass == code])

    def copy(self) -> "RoadState":
        return RoadState(
            lanes=[lane.copy() for lane in self.lanes],
            vehicle_length=self.vehicle_length,
            time=self.time,
        )

    def check_invariants(self) -> None:
        """Sorted lanes, positions in [0, L), every gap > l_v, unique ids"""
        seen = set()
        for lane in self.lanes:
            if lane.n == 0:
                continue
            if np.any(lane.pos < 0.0) or np.any(lane.pos >= lane.length):
                raise CollisionError(f"lane {lane.lane_id}: position outside [0, {lane.length})",
                                     lane=lane.lane_id, time=self.time)
            if lane.n > 1 and np.any(np.diff(lane.pos) <= 0.0):
                raise CollisionError(f"lane {lane.lane_id}: positions not strictly increasing",
                                     lane=lane.lane_id, time=self.time)
            check_gaps(lane, self.vehicle_length, self.time)
            ids = set(int(v) for v in lane.ids)
            if ids & seen:
                raise CollisionError(f"vehicle ids {sorted(ids & seen)} appear in two lanes", time=self.time)
            seen |= ids


def check_gaps(lane: LaneState, l_v: float, t: float) -> None:
    """Raise CollisionError naming the first pair whose gap is <= l_v"""
    if lane.n < 2:
        return
    gaps = lane.gaps()
    bad = np.flatnonzero(gaps <= l_v)
    if bad.size:
        i = int(bad[0])
        follower = int(lane.ids[i])
        leader = int(lane.ids[(i + 1) % lane.n])
        raise CollisionError(
            f"lane {lane.lane_id}: gap {gaps[i]:.6f} m between vehicle {follower} and leader {leader} at t={t:.2f}s",
            lane=lane.lane_id,
            follower=follower,
            leader=leader,
            gap=float(gaps[i]),
            time=t,
        )


def map_position(pos: float, from_length: float, to_length: float) -> float:
    """Angular-fraction mapping between lanes of different length"""
    mapped = pos * (to_length / from_length)
    if mapped >= to_length:
        mapped -= to_length
    return mapped


def neighbor_indices(target: LaneState, pos: float) -> Tuple[Optional[int], Optional[int]]:
    """Array indices of the would-be leader and follower of a point in target"""
    if target.n == 0:
        return None, None
    i = int(np.searchsorted(target.pos, pos, side="left"))
    if i < target.n and target.pos[i] == pos:
        raise OccupiedSlotError(f"lane {target.lane_id}: vehicle {int(target.ids[i])} already at {pos}")
    return i % target.n, (i - 1) % target.n


# =============================================================================
# PUBLIC OPERATIONS
# =============================================================================
# Snapshot queries over the array helpers above. The stepping loop works on
# gaps() and neighbor_indices() directly; these return VehicleState records
# for callers outside the stepping loop, such as tests.

def gap_and_leader(lane: LaneState, idx: int) -> Tuple[float, VehicleState]:
    """Gap to the leader of vehicle idx and the leader itself"""
    if lane.n == 0:
        raise ValueError(f"lane {lane.lane_id} is empty")
    if lane.n == 1:
        return float(lane.length), lane.vehicle(idx)
    lead = (idx + 1) % lane.n
    return float(lane.gaps()[idx]), lane.vehicle(lead)


def neighbors_in_lane(target: LaneState, pos: float) -> Tuple[Optional[VehicleState], Optional[VehicleState]]:
    """Leader and follower a vehicle placed at pos in target would have"""
    lead, fol = neighbor_indices(target, pos)
    if lead is None:
        return None, None
    return target.vehicle(lead), target.vehicle(fol)


def move_vehicle(road: RoadState, vid: int, from_lane: int, to_lane: int) -> RoadState:
    """
    Move a vehicle to an adjacent lane at its mapped position.

    The caller is expected to have checked safety; an insertion that leaves
    a gap <= l_v is rejected rather than repaired.
    """
    if abs(from_lane - to_lane) != 1 or not (0 <= to_lane < road.n_lanes) or not (0 <= from_lane < road.n_lanes):
        raise ValueError(f"lanes {from_lane} and {to_lane} are not adjacent")
    source = road.lanes[from_lane]
    target = road.lanes[to_lane]
    try:
        idx = source.index_of(vid)
    except KeyError as e:
        raise ValueError(str(e)) from e

    new_pos = map_position(float(source.pos[idx]), source.length, target.length)
    try:
        lead, fol = neighbor_indices(target, new_pos)
    except OccupiedSlotError as e:
        raise RejectedInsertionError(str(e)) from e

    l_v = road.vehicle_length
    if lead is not None:
        gap_ahead = (target.pos[lead] - new_pos) % target.length
        gap_behind = (new_pos - target.pos[fol]) % target.length
        if gap_ahead <= l_v or gap_behind <= l_v:
            raise RejectedInsertionError(
                f"vehicle {vid} into lane {to_lane} at {new_pos:.3f} m: "
                f"gap ahead {gap_ahead:.3f} m, gap behind {gap_behind:.3f} m (l_v={l_v})"
            )

    record = source.take(idx)
    record["pos"] = new_pos
    record["last_lc"] = road.time
    record["lc_count"] = int(record["lc_count"]) + 1
    target.put(record)
    source.resync_headways()
    target.resync_headways()
    logger.debug(f"🔄 Vehicle {vid}: lane {from_lane} -> {to_lane} at t={road.time:.2f}s")
    return road
