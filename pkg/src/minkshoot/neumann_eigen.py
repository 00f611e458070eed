"""
Radial Neumann eigenvalues of -(r^{N-1} u')' = mu r^{N-1} u on (R1, R2).

The angle

    theta' = sin^2(theta) / r^{N-1} + mu r^{N-1} cos^2(theta),    theta(R1) = 0

is strictly increasing in mu, and the k-th eigenvalue is the mu with
theta(R2) = (k - 1) pi.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .curvature_core import Geometry, Nonlinearity, f_prime_at_s0
from .errors import IntegrationError, SearchFailureError, UsageError
from .ivp_integrator import MIN_TOL, check_tol, dormand_prince

logger = logging.getLogger(__name__)

MU_CEILING = 1e12
_GROWTH = 4.0
_ESTIMATE_SLACK = 4.0


@dataclass(frozen=True)
class AngleShot:
    mu: float
    theta_end: float
    tol: float


@dataclass(frozen=True)
class HypothesisCheck:
    """Outcome of testing f'(s0) > lambda_{k+1}."""

    holds: bool
    margin: float
    k: int
    f_prime: float
    eigenvalue: float

    def __bool__(self) -> bool:
        return self.holds


def _angle_field(geom: Geometry, mu: float):
    n1 = geom.dim_N - 1

    def field(r, y):
        theta = float(y[0])
        weight = r**n1
        s, c = math.sin(theta), math.cos(theta)
        return np.array([s * s / weight + mu * weight * c * c])

    return field


def angle_shot(geom: Geometry, mu: float, tol: float = 1e-10) -> AngleShot:
    """Integrate the eigen-angle from R1 to R2 for a trial mu."""
    check_tol(tol)
    if not mu >= 0.0:
        raise UsageError(f"mu must be >= 0, got {mu!r}")
    if mu == 0.0:
        return AngleShot(0.0, 0.0, tol)

    N = geom.dim_N
    r_start, theta_start, first_cap = geom.R1, 0.0, geom.span
    if geom.is_ball and N >= 2:
        # theta = mu r^N / N + O(r^{N+2}) near the origin
        h0 = min(max(1e-8 * geom.R2, tol ** (1 / 3) * geom.R2 * 1e-2), 0.25 / math.sqrt(mu))
        r_start, theta_start, first_cap = h0, mu * h0**N / N, h0

    span = geom.span
    dense = dormand_prince(
        _angle_field(geom, mu),
        r_start,
        [theta_start],
        geom.R2,
        lambda y, y_new: tol * (np.maximum(np.abs(y), np.abs(y_new)) + 1.0),
        min_step=lambda r: min(1e-14 * span, 1e-6 * r),
        max_first_step=first_cap,
    )
    return AngleShot(mu, max(0.0, float(dense.y[-1, 0])), tol)


def theta_mu_at_R2(geom: Geometry, mu: float, tol: float = 1e-10) -> float:
    return angle_shot(geom, mu, tol).theta_end


@functools.lru_cache(maxsize=512, typed=True)
def eigenvalue(geom: Geometry, k: int, tol: float = 1e-10) -> float:
    """k-th radial Neumann eigenvalue, k >= 1; lambda_1 = 0.

    The bracket grows by a factor 4 from mu = 1 until the angle reaches the
    target, then bisection stops at width tol * max(1, mu).
    """
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise UsageError(f"eigenvalue index must be a positive integer, got {k!r}")
    check_tol(tol)
    if k == 1:
        return 0.0

    target = (k - 1) * math.pi
    # lambda_k ~ ((k - 1) pi / (R2 - R1))^2, exact for N = 1
    if (target / geom.span) ** 2 > _ESTIMATE_SLACK * MU_CEILING:
        raise SearchFailureError(f"lambda_{k} on {geom} lies far above mu={MU_CEILING:g}")
    angle_tol = max(tol * 1e-2, MIN_TOL)

    def angle(mu: float) -> float:
        try:
            return theta_mu_at_R2(geom, mu, angle_tol)
        except IntegrationError as e:
            raise SearchFailureError(f"lambda_{k} search stopped at mu={mu:g}: {e}") from e

    lo, hi = 0.0, 1.0
    while angle(hi) < target:
        lo, hi = hi, hi * _GROWTH
        if hi > MU_CEILING:
            raise SearchFailureError(
                f"no bracket for lambda_{k} below mu={MU_CEILING:g} on {geom}"
            )

    while hi - lo > tol * max(1.0, 0.5 * (lo + hi)):
        mid = 0.5 * (lo + hi)
        if angle(mid) < target:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    logger.debug("lambda_%d = %.17g on %s", k, mu, geom)
    return mu


def eigenvalues(geom: Geometry, k_max: int, tol: float = 1e-10) -> list[float]:
    """lambda_1 .. lambda_{k_max}."""
    return [eigenvalue(geom, k, tol) for k in range(1, k_max + 1)]


def check_hypothesis(
    geom: Geometry, nl: Nonlinearity, k: int, tol: float = 1e-10
) -> HypothesisCheck:
    """Test f'(s0) > lambda_{k+1}; the margin is f'(s0) - lambda_{k+1}."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise UsageError(f"k must be a positive integer, got {k!r}")
    lam = eigenvalue(geom, int(k) + 1, tol)
    fp = f_prime_at_s0(nl)
    margin = fp - lam
    return HypothesisCheck(margin > 0.0, margin, int(k), fp, lam)


def max_admissible_k(
    geom: Geometry, nl: Nonlinearity, k_max: int, tol: float = 1e-10
) -> int:
    """Largest k <= k_max with f'(s0) > lambda_{k+1}, or 0 when even k = 1 fails."""
    best = 0
    for k in range(1, k_max + 1):
        if not check_hypothesis(geom, nl, k, tol).holds:
            break
        best = k
    return best
