"""
Natural-parameter sweeps of the exponent q for f(s) = s^{q-1} - s^{r-1}.

Each grid q is solved independently with the largest k its hypothesis check
allows. A new j-crossing branch can only appear once q - r exceeds
lambda_{j+1}, so onsets are reported as grid intervals.
"""

from __future__ import annotations

import csv
import functools
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature_core import Geometry, PrototypeNonlinearity
from .errors import IncompleteSolveError, IntegrationError, UsageError
from .neumann_eigen import max_admissible_k
from .shooting_solver import ACCEPT_TOL, DEFAULT_GRID_SIZE, Side, SolutionProfile, solve_all
from .workers import map_jobs

logger = logging.getLogger(__name__)

# Seeded steps scan a grid this much coarser first, then fall back to the full grid.
WARM_GRID_DIVISOR = 4
WARM_GRID_MIN = 16


@dataclass(frozen=True)
class BranchPoint:
    q: float
    d: float
    side: Side
    crossings: int

    @property
    def u_at_R1(self) -> float:
        return self.d


@dataclass(frozen=True)
class SweepGap:
    """A grid q whose solve did not deliver every target."""

    q: float
    k: int
    missing: tuple[tuple[Side, int], ...]
    message: str


@dataclass(frozen=True)
class BranchOnset:
    """First grid q carrying branch j, with the grid q before it (None at the grid start)."""

    j: int
    q_lower: float | None
    q_upper: float

    def contains(self, q: float) -> bool:
        lower = -np.inf if self.q_lower is None else self.q_lower
        return lower < q <= self.q_upper


@dataclass
class SweepResult:
    points: list[BranchPoint]
    gaps: list[SweepGap]
    q_grid: np.ndarray
    attempted: int = 0
    ks: dict[float, int] = field(default_factory=dict)

    def __iter__(self) -> Iterator[BranchPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def all_failed(self) -> bool:
        """Every q that needed a solve ended in a gap."""
        return self.attempted > 0 and len(self.gaps) == self.attempted

    def onset(self, j: int, side: Side | str | None = None) -> BranchOnset | None:
        return detect_branch_onset(self.points, j, self.q_grid, side)


@dataclass(frozen=True)
class _Step:
    q: float
    k: int
    profiles: tuple[SolutionProfile, ...]
    gap: SweepGap | None


def _warm_grid_size(grid_size: int) -> int:
    return min(grid_size, max(WARM_GRID_MIN, grid_size // WARM_GRID_DIVISOR))


def _solve_step(
    geom: Geometry,
    r_exp: float,
    k_max: int,
    tol: float,
    grid_size: int,
    accept_tol: float,
    q: float,
    seeds: Iterable[float] = (),
) -> _Step:
    nl = PrototypeNonlinearity(q, r_exp)
    k = max_admissible_k(geom, nl, k_max)
    if k == 0:
        logger.info("q=%.6g: no admissible k, skipping", q)
        return _Step(q, 0, (), None)

    seeds = tuple(seeds)
    sizes = [grid_size]
    if seeds and _warm_grid_size(grid_size) < grid_size:
        sizes.insert(0, _warm_grid_size(grid_size))
    for size in sizes:
        try:
            profiles = solve_all(
                geom, nl, k, tol, grid_size=size, accept_tol=accept_tol, seeds=seeds
            )
        except IncompleteSolveError as e:
            if size < grid_size:
                logger.info("q=%.6g: grid %d missed %s, retrying at %d", q, size, e.missing,
                            grid_size)
                continue
            logger.warning("q=%.6g: %s", q, e)
            gap = SweepGap(q, k, tuple(e.missing), str(e))
            return _Step(q, k, tuple(e.profiles), gap)
        except IntegrationError as e:
            logger.warning("q=%.6g: %s", q, e)
            return _Step(q, k, (), SweepGap(q, k, (), str(e)))
        logger.info("q=%.6g: k=%d, %d profiles on grid %d", q, k, len(profiles), size)
        return _Step(q, k, tuple(profiles), None)


def sweep_q(
    geom: Geometry,
    r_exp: float,
    q_range: tuple[float, float],
    q_steps: int = 200,
    k_max: int = 2,
    tol: float = 1e-10,
    *,
    grid_size: int = DEFAULT_GRID_SIZE,
    jobs: int = 1,
    accept_tol: float = ACCEPT_TOL,
) -> SweepResult:
    """Solve at q_steps uniform q in [q_lo, q_hi] and collect every root.

    Sequential sweeps seed each scan with the previous q's roots and try a
    coarser grid first; any missed target is retried on the full grid.
    Parallel sweeps solve every q cold.
    """
    q_lo, q_hi = (float(x) for x in q_range)
    if not q_lo > r_exp:
        raise UsageError(f"q range must start above r={r_exp!r}, got q_lo={q_lo!r}")
    if not q_hi >= q_lo:
        raise UsageError(f"empty q range [{q_lo!r}, {q_hi!r}]")
    if q_steps < 2:
        raise UsageError(f"q_steps must be >= 2, got {q_steps!r}")

    q_grid = np.linspace(q_lo, q_hi, q_steps)
    solve = functools.partial(_solve_step, geom, r_exp, k_max, tol, grid_size, accept_tol)
    if jobs > 1:
        steps = map_jobs(solve, q_grid.tolist(), jobs)
    else:
        steps, seeds = [], ()
        for q in q_grid.tolist():
            step = solve(q, seeds)
            steps.append(step)
            if step.profiles:
                seeds = tuple(p.d for p in step.profiles)

    points = [
        BranchPoint(step.q, p.d, p.side, p.crossings) for step in steps for p in step.profiles
    ]
    points.sort(key=lambda p: (p.q, p.side.rank, p.crossings, p.d))
    gaps = [step.gap for step in steps if step.gap is not None]
    attempted = sum(1 for step in steps if step.k > 0)
    return SweepResult(points, gaps, q_grid, attempted, {step.q: step.k for step in steps})


def detect_branch_onset(
    points: Iterable[BranchPoint],
    j: int,
    q_grid: Iterable[float] | None = None,
    side: Side | str | None = None,
) -> BranchOnset | None:
    """Grid interval (q_lower, q_upper] where branch j first shows up; None if it never does."""
    points = list(points)
    if side is not None:
        side = Side(side)
    hits = [p.q for p in points if p.crossings == j and (side is None or p.side is side)]
    if not hits:
        return None
    q_upper = min(hits)
    grid = sorted(set(q_grid) if q_grid is not None else {p.q for p in points})
    before = [q for q in grid if q < q_upper]
    return BranchOnset(j, before[-1] if before else None, q_upper)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_sweep_csv(points: Iterable[BranchPoint], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "side", "crossings", "d"])
        for p in points:
            writer.writerow([_fmt(p.q), str(p.side), p.crossings, _fmt(p.d)])
    return path


def write_gnuplot_blocks(points: Iterable[BranchPoint], path: str | Path) -> Path:
    """One ``q d`` block per (side, crossings) branch, blocks separated for ``index``."""
    branches: dict[tuple[int, int], list[BranchPoint]] = {}
    for p in points:
        branches.setdefault((p.side.rank, p.crossings), []).append(p)
    blocks = []
    for key in sorted(branches):
        rows = sorted(branches[key], key=lambda p: (p.q, p.d))
        head = f"# side={rows[0].side} crossings={rows[0].crossings}"
        blocks.append("\n".join([head, *(f"{_fmt(p.q)} {_fmt(p.d)}" for p in rows)]))
    path = Path(path)
    path.write_text("\n\n\n".join(blocks) + ("\n" if blocks else ""))
    return path


def write_gap_log(gaps: Iterable[SweepGap], path: str | Path) -> Path:
    path = Path(path)
    lines = []
    for gap in gaps:
        missing = ", ".join(f"{side}/j={j}" for side, j in gap.missing) or "-"
        lines.append(f"q={_fmt(gap.q)} k={gap.k} missing={missing}: {gap.message}")
    path.write_text("".join(line + "\n" for line in lines))
    return path
