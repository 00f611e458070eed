"""
Shooting for positive radial Neumann solutions.

A datum d != s0 is a Neumann solution exactly when the angle of its phase
path lands on a multiple of pi at R2. Below the equilibrium the angle starts
at pi and the j-crossing solutions hit (j + 1) pi; above it starts at 0 and
they hit j pi. Near s0 the winding exceeds k pi whenever f'(s0) > lambda_{k+1},
while d = 0 stays at pi and d = d* stays below pi, so every target is
bracketed on both sides by a scan of d.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .curvature_core import Geometry, Nonlinearity, f_hat
from .errors import HypothesisError, IncompleteSolveError, UsageError
from .ivp_integrator import MIN_TOL, Trajectory, integrate_ivp
from .neumann_eigen import check_hypothesis
from .pruefer_angle import crossing_count, sign_changes, to_polar
from .workers import map_jobs

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 256
GRID_RATIO = 1.2
D_MIN = 1e-8
D_GAP = 1e-6
ACCEPT_TOL = 1e-8
ROOT_ANGLE_TOL = 1e-12
SLOPE_TOL = 1e-7
RESIDUAL_TOL = 1e-4


class Side(enum.StrEnum):
    BELOW = "below"
    ABOVE = "above"

    @classmethod
    def of(cls, d: float, s0: float) -> Side:
        return cls.BELOW if d < s0 else cls.ABOVE

    @property
    def rank(self) -> int:
        return 0 if self is Side.BELOW else 1

    @property
    def theta_start(self) -> float:
        return math.pi if self is Side.BELOW else 0.0

    def target(self, j: int) -> float:
        """End angle of a j-crossing Neumann solution on this side."""
        return (j + 1) * math.pi if self is Side.BELOW else j * math.pi


@dataclass(frozen=True, eq=False)
class ShotResult:
    d: float
    theta_start: float
    theta_end: float
    half_turns: int
    traj: Trajectory

    @property
    def side(self) -> Side:
        return Side.BELOW if self.theta_start == math.pi else Side.ABOVE

    @property
    def endpoint_residual(self) -> float:
        return abs(float(self.traj.v[-1]))


@dataclass(frozen=True)
class Bracket:
    d_lo: float
    d_hi: float
    target: float


@dataclass(frozen=True, eq=False)
class SolutionProfile:
    """An accepted Neumann solution."""

    d: float
    side: Side
    crossings: int
    endpoint_residual: float
    min_u: float
    max_slope: float
    traj: Trajectory
    theta_end: float = math.nan

    def to_dict(self, profile_csv_path: str | None = None) -> dict:
        return {
            "d": self.d,
            "side": str(self.side),
            "crossings": self.crossings,
            "endpoint_residual": self.endpoint_residual,
            "min_u": self.min_u,
            "profile_csv_path": profile_csv_path,
        }


@dataclass(frozen=True)
class VerificationReport:
    endpoint_slope: float
    min_u: float
    curvature_residual: float
    angle_crossings: int
    sign_crossings: int
    tol: float
    slope_tol: float = SLOPE_TOL
    residual_tol: float = RESIDUAL_TOL

    @property
    def slope_ok(self) -> bool:
        return self.endpoint_slope <= self.slope_tol

    @property
    def positive(self) -> bool:
        return self.min_u > 0.0

    @property
    def residual_ok(self) -> bool:
        return self.curvature_residual <= self.residual_tol

    @property
    def crossings_agree(self) -> bool:
        return self.angle_crossings == self.sign_crossings

    @property
    def passed(self) -> bool:
        return self.slope_ok and self.positive and self.residual_ok and self.crossings_agree

    def to_dict(self) -> dict:
        return {
            "endpoint_slope": self.endpoint_slope,
            "min_u": self.min_u,
            "curvature_residual": self.curvature_residual,
            "angle_crossings": self.angle_crossings,
            "sign_crossings": self.sign_crossings,
            "slope_ok": self.slope_ok,
            "positive": self.positive,
            "residual_ok": self.residual_ok,
            "crossings_agree": self.crossings_agree,
            "passed": self.passed,
        }


def d_star(geom: Geometry, nl: Nonlinearity) -> float:
    """s0 + R2 - R1: above it |u'| < 1 keeps the winding below pi."""
    return nl.s0 + geom.R2 - geom.R1


def shoot(geom: Geometry, nl: Nonlinearity, d: float, tol: float = 1e-10) -> ShotResult:
    if d == nl.s0:
        raise UsageError("cannot shoot from the equilibrium d = s0")
    traj = integrate_ivp(geom, nl, d, tol)
    path = to_polar(traj, nl.s0)
    turns = math.floor(max(0.0, path.theta_end - path.theta_start) / math.pi)
    logger.debug("shot d=%.17g theta_end=%.12g", d, path.theta_end)
    return ShotResult(d, path.theta_start, path.theta_end, turns, traj)


def scan_grid(
    geom: Geometry,
    nl: Nonlinearity,
    side: Side | str,
    grid_size: int = DEFAULT_GRID_SIZE,
    *,
    extended: bool = False,
    seeds: Iterable[float] = (),
) -> np.ndarray:
    """Sorted shooting data for one side.

    A geometric cluster s0 -/+ d_gap * 1.2^i toward the equilibrium, at most
    half the points, plus a uniform grid over the rest of the side interval.
    Seeds inside the side interval are added as they are.
    """
    side = Side(side)
    if grid_size < 2:
        raise UsageError(f"grid_size must be >= 2, got {grid_size!r}")
    s0 = nl.s0
    gap = D_GAP * s0
    if side is Side.BELOW:
        delta_max = s0 - D_MIN
    else:
        delta_max = (2.0 if extended else 1.0) * d_star(geom, nl) - s0
    if not delta_max > gap:
        raise UsageError(f"the {side} side interval is empty for s0={s0!r}")

    n_geo = math.ceil(math.log(delta_max / gap) / math.log(GRID_RATIO))
    n_geo = max(0, min(n_geo, grid_size // 2))
    deltas = np.union1d(
        gap * GRID_RATIO ** np.arange(n_geo),
        np.linspace(gap, delta_max, max(2, grid_size - n_geo)),
    )
    deltas = deltas[deltas <= delta_max]
    grid = s0 - deltas if side is Side.BELOW else s0 + deltas

    lo, hi = (s0 - delta_max, s0 - gap) if side is Side.BELOW else (s0 + gap, s0 + delta_max)
    extra = [float(d) for d in seeds if lo <= d <= hi]
    return np.unique(np.concatenate([grid, extra]))


def scan(
    geom: Geometry,
    nl: Nonlinearity,
    side: Side | str,
    grid_size: int = DEFAULT_GRID_SIZE,
    tol: float = 1e-10,
    *,
    jobs: int = 1,
    extended: bool = False,
    seeds: Iterable[float] = (),
) -> list[ShotResult]:
    """Shots over scan_grid, ordered by d."""
    grid = scan_grid(geom, nl, side, grid_size, extended=extended, seeds=seeds)
    logger.debug("scanning %d data on the %s side", grid.size, Side(side))
    return map_jobs(functools.partial(shoot, geom, nl, tol=tol), grid.tolist(), jobs)


def find_brackets(shots: Sequence[ShotResult], target: float) -> list[Bracket]:
    """Consecutive shots whose end angles straddle ``target``.

    A shot landing exactly on the target closes the cell before it.
    """
    brackets = []
    for a, b in zip(shots, shots[1:]):
        ga, gb = a.theta_end - target, b.theta_end - target
        if (ga < 0.0 <= gb) or (ga > 0.0 >= gb):
            brackets.append(Bracket(a.d, b.d, target))
    return brackets


def refine_root(
    geom: Geometry,
    nl: Nonlinearity,
    bracket: Bracket | tuple[float, float],
    target_angle: float | None = None,
    tol: float = 1e-10,
    *,
    residual_tol: float = ACCEPT_TOL,
) -> float:
    """Bisect theta_end(d) - target_angle on the bracket.

    Stops when the midpoint angle is within 1e-12 of the target, or when the
    bracket is narrower than tol * max(1, s0) and the midpoint's |v(R2)| is
    below ``residual_tol``, or at float resolution.
    """
    if isinstance(bracket, Bracket):
        if target_angle is None:
            target_angle = bracket.target
        bracket = (bracket.d_lo, bracket.d_hi)
    if target_angle is None:
        raise UsageError("refine_root needs a target angle")
    lo, hi = sorted(float(x) for x in bracket)
    s0 = nl.s0
    if lo < s0 < hi or lo == s0 or hi == s0:
        raise UsageError(f"bracket [{lo!r}, {hi!r}] must lie on one side of s0={s0!r}")

    g_lo = shoot(geom, nl, lo, tol).theta_end - target_angle
    g_hi = shoot(geom, nl, hi, tol).theta_end - target_angle
    if g_lo * g_hi > 0.0:
        raise UsageError(
            f"bracket [{lo!r}, {hi!r}] does not straddle {target_angle!r} "
            f"(g = {g_lo:.3g}, {g_hi:.3g})"
        )

    width_tol = tol * max(1.0, s0)
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(hi)):
            return mid
        shot = shoot(geom, nl, mid, tol)
        g = shot.theta_end - target_angle
        if abs(g) <= ROOT_ANGLE_TOL:
            return mid
        if hi - lo <= width_tol and shot.endpoint_residual <= residual_tol:
            return mid
        if g * g_lo > 0.0:
            lo, g_lo = mid, g
        else:
            hi = mid


def _min_u(traj: Trajectory, samples: int = 2001) -> float:
    geom = traj.geometry
    u_dense, _ = traj.evaluate(np.linspace(geom.R1, geom.R2, samples))
    return float(min(np.min(traj.u), np.min(u_dense)))


def make_profile(
    geom: Geometry,
    nl: Nonlinearity,
    d: float,
    tol: float = 1e-10,
) -> SolutionProfile:
    """Re-shoot d and measure it; no acceptance test is applied."""
    shot = shoot(geom, nl, d, tol)
    traj = shot.traj
    return SolutionProfile(
        d=float(d),
        side=Side.of(d, nl.s0),
        crossings=crossing_count(traj, nl.s0),
        endpoint_residual=shot.endpoint_residual,
        min_u=_min_u(traj),
        max_slope=traj.max_slope(),
        traj=traj,
        theta_end=shot.theta_end,
    )


def _rejection(profile: SolutionProfile, j: int, tol: float, accept_tol: float) -> str | None:
    if profile.crossings != j:
        return f"{profile.crossings} crossings, expected {j}"
    if not profile.endpoint_residual <= accept_tol:
        return f"endpoint residual {profile.endpoint_residual:.3g} > {accept_tol:g}"
    if not profile.min_u > 0.0:
        return f"min u = {profile.min_u:.3g} is not positive"
    if not profile.max_slope < 1.0:
        return "slope reached 1"
    if not np.max(np.abs(profile.traj.w)) > 10.0 * tol:
        return "profile is numerically constant"
    return None


def _merge(profiles: list[SolutionProfile], width: float) -> list[SolutionProfile]:
    merged: list[SolutionProfile] = []
    for p in sorted(profiles, key=lambda p: p.d):
        if merged and abs(p.d - merged[-1].d) < width:
            continue
        merged.append(p)
    return merged


def solve_all(
    geom: Geometry,
    nl: Nonlinearity,
    k: int,
    tol: float = 1e-10,
    *,
    grid_size: int = DEFAULT_GRID_SIZE,
    jobs: int = 1,
    accept_tol: float = ACCEPT_TOL,
    extended: bool = False,
    seeds: Iterable[float] = (),
) -> list[SolutionProfile]:
    """Every bracketed Neumann solution with 1..k crossings on both sides of s0.

    Sorted by (side, crossings, d), below first. Raises HypothesisError when
    f'(s0) <= lambda_{k+1} and IncompleteSolveError when some (side, j)
    target has no accepted root.
    """
    check = check_hypothesis(geom, nl, k)
    if not check.holds:
        raise HypothesisError(
            f"f'(s0) = {check.f_prime:.10g} does not exceed lambda_{k + 1} = "
            f"{check.eigenvalue:.10g} (margin {check.margin:.3g})",
            check,
        )

    seeds = list(seeds)
    profiles: list[SolutionProfile] = []
    missing: list[tuple[Side, int]] = []
    scans: dict[Side, list[ShotResult]] = {}
    for side in Side:
        shots = scan(
            geom, nl, side, grid_size, tol, jobs=jobs, extended=extended, seeds=seeds
        )
        scans[side] = shots
        for j in range(1, k + 1):
            brackets = find_brackets(shots, side.target(j))
            roots = map_jobs(
                functools.partial(refine_root, geom, nl, tol=tol, residual_tol=accept_tol),
                brackets,
                jobs,
            )
            found = []
            for d in roots:
                profile = make_profile(geom, nl, d, tol)
                reason = _rejection(profile, j, tol, accept_tol)
                if reason is None:
                    found.append(profile)
                else:
                    logger.warning("rejected %s root d=%.17g for j=%d: %s", side, d, j, reason)
            found = _merge(found, 10.0 * tol)
            if not found:
                missing.append((side, j))
            profiles.extend(found)

    profiles.sort(key=lambda p: (p.side.rank, p.crossings, p.d))
    logger.info("found %d profiles for k=%d on %s", len(profiles), k, geom)
    if missing:
        raise IncompleteSolveError(missing, profiles, scans)
    return profiles


def verify_solution(
    profile: SolutionProfile,
    geom: Geometry,
    nl: Nonlinearity,
    *,
    slope_tol: float = SLOPE_TOL,
    residual_tol: float = RESIDUAL_TOL,
) -> VerificationReport:
    """Re-integrate at a hundredth of the profile's tolerance and check it.

    The curvature residual |v' + r^{N-1} f(u)| is taken at step midpoints,
    relative to 1 + max |r^{N-1} f(u)|.
    """
    s0 = nl.s0
    tol = max(profile.traj.tol / 100.0, MIN_TOL)
    if profile.d == s0:
        return VerificationReport(
            0.0, min(profile.min_u, s0), 0.0, 0, 0, tol, slope_tol, residual_tol
        )

    traj = integrate_ivp(geom, nl, profile.d, tol)
    r_mid = 0.5 * (traj.r[1:] + traj.r[:-1])
    u_mid, _ = traj.evaluate(r_mid)
    forcing = r_mid ** (geom.dim_N - 1) * np.array([f_hat(nl, float(u)) for u in u_mid])
    defect = traj.momentum_derivative(r_mid) + forcing
    residual = float(np.max(np.abs(defect)) / (1.0 + np.max(np.abs(forcing))))

    report = VerificationReport(
        endpoint_slope=abs(float(traj.slope[-1])),
        min_u=min(profile.min_u, _min_u(traj)),
        curvature_residual=residual,
        angle_crossings=crossing_count(traj, s0),
        sign_crossings=sign_changes(traj, s0),
        tol=tol,
        slope_tol=slope_tol,
        residual_tol=residual_tol,
    )
    if not report.passed:
        logger.warning("verification failed for d=%.17g: %s", profile.d, report.to_dict())
    return report
