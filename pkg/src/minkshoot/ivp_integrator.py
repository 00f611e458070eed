"""
Adaptive integration of the radial shooting problem.

    u' = phi_inv(v / r^{N-1}),    v' = -r^{N-1} f_hat(u),    (u, v)(R1) = (d, 0)

The state is carried as (w, v) with w = u - s0, so the error control is
relative to the distance from the equilibrium (s0, 0). On a ball the
integration starts at a small radius h0 from the Taylor state of the
regular solution, never at the singular point r = 0.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .curvature_core import Geometry, Nonlinearity, f_hat, phi_inv, phi_inv_array
from .errors import DomainError, IntegrationError, UsageError

logger = logging.getLogger(__name__)

MIN_TOL = 1e-13
MAX_TOL = 1e-4

# Largest accepted rotation of (u - s0, -v) per step. Anything below pi/2 keeps
# the unwrap unambiguous; pi/4 keeps it so for alpha-rescaled angles too.
MAX_ROTATION = math.pi / 4

# Dormand-Prince 5(4), first-same-as-last, with its free 4th-order interpolant.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [
            0.0,
            127303824393 / 49829197408,
            -318862633887 / 49829197408,
            701980252875 / 199316789632,
        ],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 2_000_000


@dataclass(frozen=True, eq=False)
class DenseSolution:
    """Accepted nodes plus per-step interpolant coefficients.

    On step k, y(t_k + x h_k) = y_k + h_k * coeffs[k] @ (x, x^2, x^3, x^4).
    """

    t: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def constant(cls, t0: float, t1: float, y) -> DenseSolution:
        y = np.asarray(y, dtype=float)
        return cls(np.array([t0, t1]), np.vstack([y, y]), np.zeros((1, y.size, 4)))

    def _locate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[idx + 1] - self.t[idx]
        return idx, h, (t - self.t[idx]) / h

    def __call__(self, t) -> np.ndarray:
        idx, h, x = self._locate(t)
        powers = np.stack([x, x**2, x**3, x**4], axis=-1)
        return self.y[idx] + h[:, None] * np.einsum("kmj,kj->km", self.coeffs[idx], powers)

    def derivative(self, t) -> np.ndarray:
        idx, _, x = self._locate(t)
        powers = np.stack([np.ones_like(x), 2 * x, 3 * x**2, 4 * x**3], axis=-1)
        return np.einsum("kmj,kj->km", self.coeffs[idx], powers)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _initial_step(fun, t0, y0, f0, weights, max_step) -> float:
    """Starting step from the usual two-evaluation order-5 heuristic."""
    w = weights(y0, y0)
    d0 = _rms(y0 / w)
    d1 = _rms(f0 / w)
    h0 = 1e-2 * max_step if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    try:
        f1 = fun(t0 + h0, y0 + h0 * f0)
    except (OverflowError, ZeroDivisionError):
        return h0 * 1e-3
    d2 = _rms((f1 - f0) / w) / h0
    if not math.isfinite(d2):
        return h0 * 1e-3
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-3 * max_step, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def dormand_prince(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    weights: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    step_guard: Callable[[np.ndarray, np.ndarray], bool] | None = None,
    min_step: Callable[[float], float] | None = None,
    max_first_step: float | None = None,
) -> DenseSolution:
    """Integrate y' = fun(t, y) from t0 to t_end with error weights ``weights(y, y_new)``.

    Trial steps are rejected when the scaled error exceeds one, when a value
    overflows, or when ``step_guard(y, y_new)`` is false. A step smaller than
    ``min_step(t)`` raises IntegrationError.
    """
    span = t_end - t0
    if min_step is None:

        def min_step(_t):
            return 1e-14 * span

    t = float(t0)
    y = np.asarray(y0, dtype=float)
    f = fun(t, y)
    h = _initial_step(fun, t, y, f, weights, max_first_step or span)

    ts, ys, qs = [t], [y], []
    rejected = False
    K = np.empty((7, y.size))
    while t < t_end:
        if len(qs) >= _MAX_STEPS:
            raise IntegrationError("too many steps", t)
        h_min = min_step(t)
        if h < h_min:
            raise IntegrationError("step size underflow", t)
        if t_end - (t + h) < h_min:
            h = t_end - t
            t_new = t_end
        else:
            t_new = t + h

        K[0] = f
        try:
            for i in range(1, 6):
                K[i] = fun(t + _C[i] * h, y + h * (_A[i, :i] @ K[:i]))
            y_new = y + h * (_B @ K[:6])
            K[6] = fun(t_new, y_new)
        except (OverflowError, ZeroDivisionError):
            finite = False
        else:
            finite = bool(np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6])))
        if not finite:
            h *= 0.5
            rejected = True
            continue

        err = _rms(h * (_E @ K) / weights(y, y_new))
        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)
            rejected = True
            continue
        if step_guard is not None and not step_guard(y, y_new):
            h *= 0.5
            rejected = True
            continue

        qs.append(K.T @ _P)
        t, y, f = t_new, y_new, K[6].copy()
        ts.append(t)
        ys.append(y)
        factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err**-0.2)
        if rejected:
            factor = min(1.0, factor)
        h *= factor
        rejected = False

    return DenseSolution(np.array(ts), np.vstack(ys), np.array(qs))


class PhaseState(NamedTuple):
    r: float
    u: float
    v: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Numerical solution (u, v) of the shooting Cauchy problem on [R1, R2].

    ``r``, ``w`` and ``v`` hold the accepted nodes, first node at R1, last at
    R2. On a ball the segment [0, h0] is the Taylor layer, whose forcing
    f_hat(d) is kept in ``origin_forcing``.
    """

    geometry: Geometry
    s0: float
    d: float
    tol: float
    r: np.ndarray
    w: np.ndarray
    v: np.ndarray
    dense: DenseSolution
    origin_forcing: float | None = None

    @property
    def u(self) -> np.ndarray:
        return self.s0 + self.w

    @property
    def slope(self) -> np.ndarray:
        return self._slope(self.r, self.v)

    slope_samples = slope

    @property
    def samples(self) -> tuple[PhaseState, ...]:
        return tuple(
            PhaseState(float(r), float(u), float(v)) for r, u, v in zip(self.r, self.u, self.v)
        )

    def _slope(self, r: np.ndarray, v: np.ndarray) -> np.ndarray:
        weight = np.asarray(r, dtype=float) ** (self.geometry.dim_N - 1)
        ratio = np.divide(v, weight, out=np.zeros_like(v, dtype=float), where=weight > 0)
        return phi_inv_array(ratio)

    def _evaluate_wv(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        y = self.dense(r)
        w, v = y[:, 0].copy(), y[:, 1].copy()
        if self.origin_forcing is not None:
            layer = r < self.dense.t[0]
            dw, dv = _taylor_offsets(self.geometry, self.origin_forcing, r[layer])
            w[layer] = (self.d - self.s0) + dw
            v[layer] = dv
        return w, v

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """Dense (u, v) at arbitrary radii in [R1, R2]."""
        w, v = self._evaluate_wv(r)
        return self.s0 + w, v

    def deviation(self, r) -> np.ndarray:
        """Dense u - s0, without the rounding of adding and removing s0."""
        return self._evaluate_wv(r)[0]

    def slope_at(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        _, v = self._evaluate_wv(r)
        return self._slope(r, v)

    def momentum_derivative(self, r) -> np.ndarray:
        """dv/dr from the interpolant (from the Taylor layer near the origin)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        dv = self.dense.derivative(r)[:, 1].copy()
        if self.origin_forcing is not None:
            layer = r < self.dense.t[0]
            dv[layer] = -self.origin_forcing * r[layer] ** (self.geometry.dim_N - 1)
        return dv

    def max_slope(self) -> float:
        return float(np.max(np.abs(self.slope)))

    def apriori_bound(self) -> float:
        """|u(r)| <= d + R2 - R1 holds for every solution since |u'| < 1."""
        return self.d + self.geometry.span

    def to_csv(self, path: str | Path) -> Path:
        """Write ``r,u,v,uprime`` rows, one per accepted node, 17 significant digits."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "u", "v", "uprime"])
            for row in zip(self.r, self.u, self.v, self.slope):
                writer.writerow([f"{x:.17g}" for x in row])
        return path


def check_tol(tol: float) -> None:
    if not (MIN_TOL <= tol <= MAX_TOL):
        raise UsageError(f"tolerance must lie in [{MIN_TOL:g}, {MAX_TOL:g}], got {tol!r}")


def _taylor_offsets(geom: Geometry, forcing: float, r):
    """Offsets (u - d, v) of the regular solution near the origin."""
    N = geom.dim_N
    return -forcing * r**2 / (2 * N), -forcing * r**N / N


def rhs(geom: Geometry, nl: Nonlinearity, r: float, state: tuple[float, float]):
    """Right-hand side (du/dr, dv/dr) at r > 0."""
    if not r > 0.0:
        raise DomainError(f"rhs needs r > 0, got r={r!r}; the origin is handled by origin_start")
    u, v = state
    weight = geom.weight(r)
    return phi_inv(v / weight), -weight * f_hat(nl, u)


def origin_step(geom: Geometry, forcing: float, tol: float) -> float:
    """First radius h0 on a ball: small enough that |f_hat(d)| h0 / N <= 1/4."""
    h0 = max(1e-8 * geom.R2, tol ** (1 / 3) * geom.R2 * 1e-2)
    if forcing != 0.0:
        h0 = min(h0, 0.25 * geom.dim_N / abs(forcing))
    return h0


def origin_start(geom: Geometry, nl: Nonlinearity, d: float, h0: float) -> PhaseState:
    """Taylor state at r = h0 of the solution with u(0) = d, u'(0) = 0.

    u(h0) = d - f_hat(d) h0^2 / (2N),  v(h0) = -f_hat(d) h0^N / N.
    """
    if not geom.is_ball:
        raise UsageError("origin_start applies to balls only (R1 == 0)")
    if not h0 > 0.0:
        raise UsageError(f"h0 must be positive, got {h0!r}")
    du, v = _taylor_offsets(geom, f_hat(nl, d), h0)
    return PhaseState(h0, d + du, v)


def _shooting_field(geom: Geometry, nl: Nonlinearity):
    s0 = nl.s0
    n1 = geom.dim_N - 1
    f = nl.eval_f

    def field(r, y):
        w, v = y.tolist()
        weight = r**n1
        u = s0 + w
        return np.array([phi_inv(v / weight), -weight * (f(u) if u >= 0.0 else 0.0)])

    return field


def _phase_weights(tol: float, s0: float):
    floor = tol * 1e-9 * max(1.0, abs(s0))

    def weights(y, y_new):
        rho = min(math.hypot(y[0], y[1]), 1.0)
        return tol * (np.maximum(np.abs(y), np.abs(y_new)) + rho) + floor

    return weights


def _rotation_guard(max_rotation: float):
    def guard(y, y_new):
        w0, v0 = y
        w1, v1 = y_new
        cross = v0 * w1 - w0 * v1
        dot = w0 * w1 + v0 * v1
        if cross == 0.0 and dot == 0.0:
            return True
        return abs(math.atan2(cross, dot)) < max_rotation

    return guard


def integrate_ivp(
    geom: Geometry,
    nl: Nonlinearity,
    d: float,
    tol: float = 1e-10,
    *,
    max_rotation: float = MAX_ROTATION,
) -> Trajectory:
    """Integrate the shooting problem from u(R1) = d, v(R1) = 0 up to R2."""
    check_tol(tol)
    if not d >= 0.0:
        raise UsageError(f"initial datum must be >= 0, got d={d!r}")
    s0 = nl.s0
    w_d = d - s0

    if d == s0:
        zeros = np.zeros(2)
        dense = DenseSolution.constant(geom.R1, geom.R2, [0.0, 0.0])
        return Trajectory(geom, s0, d, tol, np.array([geom.R1, geom.R2]), zeros, zeros, dense)

    forcing = None
    if geom.is_ball:
        forcing = f_hat(nl, d)
        h0 = origin_step(geom, forcing, tol)
        dw, v0 = _taylor_offsets(geom, forcing, h0)
        r_start, y_start, first_cap = h0, [w_d + dw, v0], h0
    else:
        r_start, y_start, first_cap = geom.R1, [w_d, 0.0], geom.span

    span = geom.span
    logger.debug("integrating d=%.17g from r=%.3g (tol=%g)", d, r_start, tol)
    dense = dormand_prince(
        _shooting_field(geom, nl),
        r_start,
        y_start,
        geom.R2,
        _phase_weights(tol, s0),
        step_guard=_rotation_guard(max_rotation),
        min_step=lambda r: min(1e-14 * span, 1e-6 * r),
        max_first_step=first_cap,
    )

    r, w, v = dense.t, dense.y[:, 0], dense.y[:, 1]
    if geom.is_ball:
        r = np.concatenate([[0.0], r])
        w = np.concatenate([[w_d], w])
        v = np.concatenate([[0.0], v])
    return Trajectory(geom, s0, d, tol, r, w, v, dense, forcing)


def energy(traj: Trajectory, nl: Nonlinearity) -> np.ndarray:
    """E = 1/sqrt(1 - u'^2) + F(u) at every node; conserved when N == 1."""
    if traj.geometry.dim_N != 1:
        raise UsageError("the energy is a first integral only for N == 1")
    primitive = getattr(nl, "primitive", None)
    if primitive is None:
        raise UsageError(f"{type(nl).__name__} has no primitive F")
    return np.sqrt(1.0 + traj.v**2) + np.array([primitive(u) for u in traj.u])
