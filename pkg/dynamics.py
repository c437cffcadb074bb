"""
Ring Road Wave Simulator - Longitudinal Dynamics
================================================
Pure functions for the Bando-FTL car-following law, the optimal velocity
function, the IDM alternative and the acceleration caps.

All functions accept floats or numpy arrays. Gaps are front-to-front
distances (x_leader - x_ego); the vehicle length is subtracted inside the
optimal velocity function and the FTL denominator.
"""

import logging

import numpy as np

from exceptions import CollisionError, DomainError
from models import IdmParams, ModelParams

logger = logging.getLogger(__name__)

TANH_2 = float(np.tanh(2.0))


def optimal_velocity(gap, p: ModelParams):
    """V(gap) = V_max (tanh((gap - l_v)/d_0 - 2) + tanh 2) / (1 + tanh 2)"""
    return p.v_max * (np.tanh((gap - p.l_v) / p.d_0 - 2.0) + TANH_2) / (1.0 + TANH_2)


def optimal_velocity_prime(gap, p: ModelParams):
    """Analytic derivative of optimal_velocity with respect to the gap"""
    sech = 1.0 / np.cosh((gap - p.l_v) / p.d_0 - 2.0)
    return p.v_max * sech * sech / (p.d_0 * (1.0 + TANH_2))


def equilibrium_speed(headway: float, p: ModelParams) -> float:
    """
    Uniform-flow speed v*(h) for headway h.

    The FTL term vanishes when all speeds are equal, so v*(h) = V(h).
    """
    if not headway > p.l_v:
        raise DomainError(f"headway {headway} m must exceed the vehicle length {p.l_v} m")
    return float(optimal_velocity(headway, p))


def bando_ftl_accel(v_ego, gap, v_leader, p: ModelParams, alpha=None, beta=None):
    """
    Uncapped Bando-FTL acceleration.

    alpha / beta override the global weights (scalars or per-vehicle arrays).
    """
    alpha = p.alpha if alpha is None else alpha
    beta = p.beta if beta is None else beta
    net = np.asarray(gap) - p.l_v
    if np.any(net <= 0.0):
        raise CollisionError(f"gap {gap} m leaves no room for a {p.l_v} m vehicle")
    return alpha * (optimal_velocity(gap, p) - v_ego) + beta * (v_leader - v_ego) / (net * net)


def idm_accel(v_ego, gap_net, dv, q: IdmParams):
    """
    Intelligent Driver Model acceleration.

    gap_net is bumper-to-bumper distance, dv = v_ego - v_leader.
    """
    if np.any(np.asarray(gap_net) <= 0.0):
        raise CollisionError(f"net gap {gap_net} m must be positive")
    s_star = q.s0 + v_ego * q.T + v_ego * dv / (2.0 * np.sqrt(q.a * q.b))
    return q.a * (1.0 - (v_ego / q.v0) ** q.delta - (s_star / gap_net) ** 2)


def clamp_accel(a_raw, p: ModelParams):
    """Cap to [-a_cap_min, a_cap_max]"""
    clamped = np.clip(a_raw, -p.a_cap_min, p.a_cap_max)
    if np.ndim(clamped) == 0:
        return float(clamped)
    return clamped


def driver_accel(v_ego, gap, v_leader, p: ModelParams, alpha=None, beta=None, idm: IdmParams = None):
    """
    Capped acceleration of a human or collaborative driver.

    Uses IDM when idm parameters are given, Bando-FTL with the driver's
    weights otherwise.
    """
    if idm is not None:
        raw = idm_accel(v_ego, np.asarray(gap) - p.l_v, v_ego - v_leader, idm)
    else:
        raw = bando_ftl_accel(v_ego, gap, v_leader, p, alpha=alpha, beta=beta)
    return clamp_accel(raw, p)
