"""
Ring Road Wave Simulator - Errors
=================================
"""

from typing import Optional


class SimulationError(Exception):
    """Base class for failures inside the ring-road dynamics"""


class CollisionError(SimulationError):
    """A front-to-front gap fell to the vehicle length or below"""

    def __init__(
        self,
        message: str,
        lane: Optional[int] = None,
        follower: Optional[int] = None,
        leader: Optional[int] = None,
        gap: Optional[float] = None,
        time: Optional[float] = None,
    ):
        super().__init__(message)
        self.lane = lane
        self.follower = follower
        self.leader = leader
        self.gap = gap
        self.time = time


class DomainError(SimulationError, ValueError):
    """An argument is outside the domain of a model function (e.g. headway <= l_v)"""


class OccupiedSlotError(SimulationError):
    """The mapped position in a target lane is taken or too close to a neighbour"""


class RejectedInsertionError(SimulationError):
    """move_vehicle would create a gap <= l_v in the target lane"""
