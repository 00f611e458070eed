"""
Scaled polar coordinates around the equilibrium (s0, 0).

    u - s0 = rho cos(theta),    v = -alpha rho sin(theta)

The angle is read off each trajectory node with atan2 and unwrapped node to
node. The integrator never accepts a step that turns (u - s0, -v) by pi/4 or
more, so every increment has a unique representative in (-pi/2, pi/2).
Interior zeros of u - s0 sit where theta passes a half-integer multiple of pi.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curvature_core import Geometry, Nonlinearity, f_hat, phi_inv_array
from .errors import ContractViolationError, CrossingTieWarning, DegeneratePathError, UsageError
from .ivp_integrator import Trajectory

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-9
TIE_WIDTH = 1e-12
SIGN_REFINEMENT = 10_000


@dataclass(frozen=True, eq=False)
class PolarPath:
    r: np.ndarray
    theta: np.ndarray
    rho: np.ndarray
    alpha: float
    s0: float

    @property
    def theta_start(self) -> float:
        return float(self.theta[0])

    @property
    def theta_end(self) -> float:
        return float(self.theta[-1])

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "theta", "rho"])
            for row in zip(self.r, self.theta, self.rho):
                writer.writerow([f"{x:.17g}" for x in row])
        return path


def phase_angle(w, v, alpha: float = 1.0) -> np.ndarray:
    """atan2(-v/alpha, w) in (-pi, pi]; a zero momentum with w < 0 gives +pi."""
    # Adding 0.0 turns -0.0 into +0.0, so atan2 picks +pi over -pi.
    return np.arctan2(-np.asarray(v, dtype=float) / alpha + 0.0, np.asarray(w, dtype=float))


def _deviation(traj: Trajectory, s0: float) -> np.ndarray:
    return traj.w if s0 == traj.s0 else traj.u - s0


def to_polar(traj: Trajectory, s0: float | None = None, alpha: float = 1.0) -> PolarPath:
    """Unwrapped angle and radius of every trajectory node."""
    if s0 is None:
        s0 = traj.s0
    if not alpha > 0.0:
        raise UsageError(f"alpha must be positive, got {alpha!r}")
    if traj.d == s0:
        raise DegeneratePathError("the path of d = s0 is the equilibrium itself")

    w = _deviation(traj, s0)
    rho = np.hypot(w, traj.v / alpha)
    if np.any(rho == 0.0):
        at = float(traj.r[np.argmax(rho == 0.0)])
        raise DegeneratePathError(f"phase path reaches the equilibrium at r={at:.17g}")

    raw = phase_angle(w, traj.v, alpha)
    raw[0] = math.pi if traj.d < s0 else 0.0
    steps = np.mod(np.diff(raw) + math.pi, 2.0 * math.pi) - math.pi
    if steps.size:
        if np.max(np.abs(steps)) >= math.pi / 2:
            i = int(np.argmax(np.abs(steps)))
            raise ContractViolationError(
                f"angle increment {steps[i]:.3g} on [{traj.r[i]:.6g}, {traj.r[i + 1]:.6g}] "
                "is too large to unwrap"
            )
        if np.min(steps) < -MONOTONE_SLACK:
            i = int(np.argmin(steps))
            raise ContractViolationError(
                f"angle decreases by {-steps[i]:.3g} at r={traj.r[i + 1]:.6g}"
            )
    theta = raw[0] + np.concatenate([[0.0], np.cumsum(steps)])
    return PolarPath(traj.r, theta, rho, alpha, s0)


def winding(traj: Trajectory, s0: float | None = None, alpha: float = 1.0) -> float:
    """theta(R2) - theta(R1), the total angle swept around the equilibrium."""
    path = to_polar(traj, s0, alpha)
    return max(0.0, path.theta_end - path.theta_start)


def half_turns(traj: Trajectory, s0: float | None = None, alpha: float = 1.0) -> int:
    return math.floor(winding(traj, s0, alpha) / math.pi)


def count_half_integer_crossings(theta_start: float, theta_end: float) -> int:
    """Number of integers m with theta_start < (m + 1/2) pi < theta_end."""
    x = theta_end / math.pi - 0.5
    nearest = round(x)
    tie = abs(x - nearest) * math.pi <= TIE_WIDTH
    if tie:
        warnings.warn(
            f"end angle {theta_end!r} lies on ({nearest} + 1/2) pi; counted as not crossed",
            CrossingTieWarning,
            stacklevel=2,
        )
    m_lo = math.floor(theta_start / math.pi - 0.5) + 1
    m_hi = nearest - 1 if tie else math.ceil(x) - 1
    return max(0, m_hi - m_lo + 1)


def crossing_count(traj: Trajectory, s0: float | None = None, alpha: float = 1.0) -> int:
    """Interior zeros of u - s0, counted through the angle."""
    path = to_polar(traj, s0, alpha)
    return count_half_integer_crossings(path.theta_start, path.theta_end)


def sign_changes(
    traj: Trajectory, s0: float | None = None, refinement: int = SIGN_REFINEMENT
) -> int:
    """Sign changes of u - s0 on the nodes plus a uniform grid, read from the dense output.

    Independent of the angle bookkeeping; used to cross-check crossing_count.
    """
    if s0 is None:
        s0 = traj.s0
    geom = traj.geometry
    r = np.union1d(traj.r, np.linspace(geom.R1, geom.R2, refinement))
    w = traj.deviation(r) if s0 == traj.s0 else traj.evaluate(r)[0] - s0
    signs = np.sign(w)
    signs = signs[signs != 0.0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def theta_rate(
    geom: Geometry, nl: Nonlinearity, r, u, v, alpha: float = 1.0
) -> np.ndarray:
    """theta' from the angle equation.

    theta' = (phi_inv(v / r^{N-1}) v + r^{N-1} f_hat(u) (u - s0)) / (alpha rho^2)

    Positive wherever rho > 0, so theta is strictly increasing.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = u - nl.s0
    weight = r ** (geom.dim_N - 1)
    ratio = np.divide(v, weight, out=np.zeros_like(v), where=weight > 0)
    forcing = np.array([f_hat(nl, float(s)) for s in u])
    rho2 = w**2 + (v / alpha) ** 2
    return (phi_inv_array(ratio) * v + weight * forcing * w) / (alpha * rho2)
