"""
Minkowski-curvature scalars, problem geometry and nonlinearities.

The radial operator is (r^{N-1} phi(u'))' with phi(s) = s / sqrt(1 - s^2).
A nonlinearity f has a positive equilibrium s0 with f(0) = f(s0) = 0,
f < 0 on (0, s0) and f > 0 just above s0.
"""

from __future__ import annotations

import importlib
import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError

# Largest double strictly below one: phi_inv never reaches the light-cone barrier.
_BELOW_ONE = math.nextafter(1.0, 0.0)

# Nominal relative step of the central finite differences.
FD_STEP = 1e-6


def phi(s: float) -> float:
    """Return s / sqrt(1 - s^2) for |s| < 1."""
    if not abs(s) < 1.0:
        raise DomainError(f"phi needs |s| < 1, got s={s!r} (integrator step failure?)")
    return s / math.sqrt((1.0 - s) * (1.0 + s))


def phi_inv(t: float) -> float:
    """Return t / sqrt(1 + t^2); the result always lies strictly inside (-1, 1)."""
    s = t / math.hypot(1.0, t)
    return math.copysign(min(abs(s), _BELOW_ONE), s)


def phi_inv_array(t: np.ndarray) -> np.ndarray:
    """Vectorized phi_inv."""
    t = np.asarray(t, dtype=float)
    s = t / np.hypot(1.0, t)
    return np.clip(s, -_BELOW_ONE, _BELOW_ONE)


@dataclass(frozen=True)
class Geometry:
    """Ball B(R2) when R1 == 0, annulus A(R1, R2) otherwise, in dimension N."""

    dim_N: int
    R1: float
    R2: float

    def __post_init__(self):
        if isinstance(self.dim_N, bool) or int(self.dim_N) != self.dim_N or self.dim_N < 1:
            raise UsageError(f"dimension N must be a positive integer, got {self.dim_N!r}")
        if not (0.0 <= self.R1 < self.R2 < math.inf):
            raise UsageError(f"need 0 <= R1 < R2 < inf, got R1={self.R1!r}, R2={self.R2!r}")
        object.__setattr__(self, "dim_N", int(self.dim_N))
        object.__setattr__(self, "R1", float(self.R1))
        object.__setattr__(self, "R2", float(self.R2))

    @classmethod
    def ball(cls, R2: float = 1.0, N: int = 1) -> Geometry:
        return cls(N, 0.0, R2)

    @classmethod
    def annulus(cls, R1: float, R2: float, N: int = 1) -> Geometry:
        return cls(N, R1, R2)

    @property
    def is_ball(self) -> bool:
        return self.R1 == 0.0

    @property
    def span(self) -> float:
        return self.R2 - self.R1

    def weight(self, r: float) -> float:
        """Radial weight r^{N-1}."""
        return r ** (self.dim_N - 1)


class Nonlinearity(ABC):
    """A C^1 nonlinearity f on [0, inf) with equilibrium s0 > 0."""

    @property
    @abstractmethod
    def s0(self) -> float: ...

    @abstractmethod
    def eval_f(self, s: float) -> float: ...

    @abstractmethod
    def eval_f_prime(self, s: float) -> float: ...


@dataclass(frozen=True)
class PrototypeNonlinearity(Nonlinearity):
    """f(s) = s^{q-1} - s^{r-1} with 2 <= r < q; the equilibrium is s0 = 1."""

    q_exp: float
    r_exp: float

    def __post_init__(self):
        if not (2.0 <= self.r_exp < self.q_exp < math.inf):
            raise UsageError(
                f"prototype needs 2 <= r < q, got q={self.q_exp!r}, r={self.r_exp!r}"
            )

    @property
    def s0(self) -> float:
        return 1.0

    def eval_f(self, s: float) -> float:
        return s ** (self.q_exp - 1.0) - s ** (self.r_exp - 1.0)

    def eval_f_prime(self, s: float) -> float:
        q, r = self.q_exp, self.r_exp
        return (q - 1.0) * s ** (q - 2.0) - (r - 1.0) * s ** (r - 2.0)

    def primitive(self, s: float) -> float:
        """F(s) = s^q/q - s^r/r, the antiderivative of f_hat with F(0) = 0."""
        if s <= 0.0:
            return 0.0
        return s**self.q_exp / self.q_exp - s**self.r_exp / self.r_exp


@dataclass(frozen=True)
class CallbackNonlinearity(Nonlinearity):
    """A nonlinearity given by a Python callable.

    Without an explicit derivative, f' is estimated by a five-point central
    difference whose step is made exactly representable around s.
    """

    func: Callable[[float], float]
    equilibrium: float
    derivative: Callable[[float], float] | None = None

    def __post_init__(self):
        if not (0.0 < self.equilibrium < math.inf):
            raise UsageError(f"equilibrium s0 must be positive, got {self.equilibrium!r}")

    @classmethod
    def from_path(cls, path: str, s0: float) -> CallbackNonlinearity:
        """Import ``module:attr`` and wrap it."""
        module_name, sep, attr = path.partition(":")
        if not sep or not module_name or not attr:
            raise UsageError(f"callback must look like 'module:function', got {path!r}")
        try:
            func = getattr(importlib.import_module(module_name), attr)
        except (ImportError, AttributeError) as e:
            raise UsageError(f"cannot import callback {path!r}: {e}") from e
        if not callable(func):
            raise UsageError(f"callback {path!r} is not callable")
        return cls(func, float(s0))

    @property
    def s0(self) -> float:
        return self.equilibrium

    def eval_f(self, s: float) -> float:
        return float(self.func(s))

    def eval_f_prime(self, s: float) -> float:
        if self.derivative is not None:
            return float(self.derivative(s))
        h = FD_STEP * max(1.0, abs(s))
        h = (s + h) - s
        f = self.eval_f
        return (8.0 * (f(s + h) - f(s - h)) - (f(s + 2 * h) - f(s - 2 * h))) / (12.0 * h)


def f_hat(nl: Nonlinearity, s: float) -> float:
    """Trivial extension: f(s) for s >= 0, zero for s < 0."""
    if s < 0.0:
        return 0.0
    return nl.eval_f(s)


def f_prime_at_s0(nl: Nonlinearity) -> float:
    return nl.eval_f_prime(nl.s0)


def check_sign_condition(nl: Nonlinearity, geom: Geometry, samples: int = 200) -> bool:
    """Finite sampling test of f(0) = f(s0) = 0, f < 0 on (0, s0), f > 0 above s0.

    The upper interval is (s0, s0 + R2 - R1 + 1), the range reachable by
    solutions shot from d <= d*.
    """
    s0 = nl.s0
    scale = max(1.0, abs(s0))
    if abs(nl.eval_f(0.0)) > 1e-12 * scale or abs(nl.eval_f(s0)) > 1e-12 * scale:
        return False
    below = np.linspace(0.0, s0, samples + 2)[1:-1]
    above = np.linspace(s0, s0 + geom.span + 1.0, samples + 2)[1:-1]
    return all(nl.eval_f(s) < 0.0 for s in below) and all(nl.eval_f(s) > 0.0 for s in above)
