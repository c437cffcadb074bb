"""
Ring Road Wave Simulator - Linear Stability of Uniform Flow
===========================================================
Two independent verdicts on whether a single-lane ring produces stop-and-go
waves:

1. The inequality alpha/2 + L^2 beta / n^2 < V'(n / L), evaluated literally.
2. The eigenvalues of the Bando-FTL system linearised at uniform flow.

The linearisation is block-circulant (every vehicle follows the next one
around the ring), so the 2n x 2n spectrum splits into n quadratics, one per
Fourier mode k:

    lambda^2 + (alpha - gamma z) lambda - alpha V'(h) z = 0,   z = exp(2 pi i k / n) - 1

with gamma = beta / (h - l_v)^2. Mode k = 0 contains the translation zero
eigenvalue (shifting every car by the same distance), which is excluded.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from config import EIGEN_TOLERANCE
from dynamics import optimal_velocity_prime
from exceptions import DomainError
from models import ModelParams, StabilityReport

logger = logging.getLogger(__name__)


def _headway(p: ModelParams, n: int, L: float) -> float:
    if n < 2:
        raise DomainError(f"need at least two vehicles, got {n}")
    h = L / n
    if not h > p.l_v:
        raise DomainError(f"headway {h} m must exceed the vehicle length {p.l_v} m")
    return h


def stability_paper(p: ModelParams, n: int, L: float) -> Tuple[bool, float, float]:
    """Literal evaluation of alpha/2 + L^2 beta / n^2 < V'(n / L)"""
    _headway(p, n, L)
    lhs = p.alpha / 2.0 + (L ** 2) * p.beta / (n ** 2)
    rhs = float(optimal_velocity_prime(n / L, p))
    return lhs < rhs, lhs, rhs


def string_stability_margin(p: ModelParams, h: float) -> float:
    """Long-wave criterion alpha/2 + beta/(h - l_v)^2 - V'(h); negative means unstable"""
    if not h > p.l_v:
        raise DomainError(f"headway {h} m must exceed the vehicle length {p.l_v} m")
    return p.alpha / 2.0 + p.beta / (h - p.l_v) ** 2 - float(optimal_velocity_prime(h, p))


def mode_eigenvalues(p: ModelParams, n: int, L: float) -> np.ndarray:
    """
    All 2n eigenvalues, shape (n, 2): row k holds the two roots of mode k.

    Roots use the cancellation-free quadratic formula; in mode 0 the second
    column is the translation zero eigenvalue.
    """
    h = _headway(p, n, L)
    vp = float(optimal_velocity_prime(h, p))
    gamma = p.beta / (h - p.l_v) ** 2

    k = np.arange(n)
    z = np.exp(2j * np.pi * k / n) - 1.0
    z[0] = 0.0
    b = p.alpha - gamma * z
    c = -p.alpha * vp * z

    s = np.sqrt(b * b - 4.0 * c)
    flip = (np.conj(b) * s).real < 0.0
    s = np.where(flip, -s, s)
    q = -(b + s) / 2.0

    roots = np.empty((n, 2), dtype=complex)
    roots[:, 0] = q
    nonzero = np.abs(q) > 0.0
    roots[:, 1] = np.where(nonzero, c / np.where(nonzero, q, 1.0), 0.0)
    return roots


def linearized_jacobian(p: ModelParams, n: int, L: float) -> np.ndarray:
    """
    Dense 2n x 2n Jacobian at uniform flow, state ordered (x_0, v_0, x_1, v_1, ...).

    Vehicle i follows vehicle (i + 1) mod n.
    """
    h = _headway(p, n, L)
    vp = float(optimal_velocity_prime(h, p))
    gamma = p.beta / (h - p.l_v) ** 2

    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        lead = (i + 1) % n
        A[2 * i, 2 * i + 1] = 1.0
        A[2 * i + 1, 2 * i] += -p.alpha * vp
        A[2 * i + 1, 2 * lead] += p.alpha * vp
        A[2 * i + 1, 2 * i + 1] += -p.alpha - gamma
        A[2 * i + 1, 2 * lead + 1] += gamma
    return A


def _max_real_excluding_translation(roots: np.ndarray) -> float:
    rest = np.concatenate([roots[1:].ravel(), roots[0, :1]])
    return float(np.max(rest.real))


def stability_eigen(p: ModelParams, n: int, L: float, tol: float = EIGEN_TOLERANCE) -> StabilityReport:
    """Eigenvalue verdict, reported together with the literal inequality"""
    h = _headway(p, n, L)
    roots = mode_eigenvalues(p, n, L)
    max_real = _max_real_excluding_translation(roots)
    paper_unstable, lhs, rhs = stability_paper(p, n, L)

    report = StabilityReport(
        n=n,
        length=L,
        headway=h,
        paper_criterion_unstable=paper_unstable,
        paper_lhs=lhs,
        paper_rhs=rhs,
        eigen_max_real=max_real,
        eigen_unstable=max_real > tol,
        string_margin=string_stability_margin(p, h),
    )
    if report.paper_criterion_unstable != report.eigen_unstable:
        logger.debug(f"Literal criterion and eigenvalues disagree at n={n}, L={L}")
    return report


def critical_alpha(
    beta: float,
    n: int,
    L: float,
    p: ModelParams,
    lo: float = 1e-3,
    hi: float = 50.0,
    tol: float = EIGEN_TOLERANCE,
    samples: int = 64,
) -> float:
    """
    Bando weight at which uniform flow turns stable for fixed beta.

    Very small alpha is stable too, so the
    unstable band sits inside [lo, hi]. A log-spaced scan finds the first
    unstable alpha and the first stable one above it; brentq then refines
    that sub-bracket. Raises ValueError when the scan never sees the
    unstable-to-stable crossing.
    """
    def excess(alpha: float) -> float:
        trial = p.model_copy(update={"alpha": alpha, "beta": beta})
        roots = mode_eigenvalues(trial, n, L)
        return _max_real_excluding_translation(roots) - tol

    grid = np.geomspace(lo, hi, samples)
    seen_unstable = False
    prev = lo
    for alpha in grid:
        value = excess(float(alpha))
        if value > 0.0:
            seen_unstable = True
        elif seen_unstable:
            logger.debug(f"Stability boundary bracketed in [{prev:.4g}, {alpha:.4g}]")
            return float(brentq(excess, prev, float(alpha), xtol=1e-10))
        prev = float(alpha)
    raise ValueError(f"alpha in [{lo}, {hi}] does not bracket the stability boundary")


def collaborative_check(alpha_s: float, beta_s: float, p: ModelParams, n: int, L: float) -> StabilityReport:
    """Stability report for the collaborative weights (alpha_S, beta_S)"""
    weights = p.model_copy(update={"alpha": alpha_s, "beta": beta_s})
    return stability_eigen(weights, n, L)
