"""Shared geometries, nonlinearities and the expensive solves."""

import math

import pytest

from minkshoot.curvature_core import Geometry, PrototypeNonlinearity
from minkshoot.shooting_solver import solve_all


def bessel_j0(x: float) -> float:
    return math.fsum((-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2 for m in range(80))


def bessel_j1(x: float) -> float:
    return math.fsum(
        (-1) ** m * (x / 2) ** (2 * m + 1) / (math.factorial(m) * math.factorial(m + 1))
        for m in range(80)
    )


def bessel_j1_zero(guess: float) -> float:
    """Newton on the J1 power series; J1' = J0 - J1 / x."""
    x = guess
    for _ in range(50):
        step = bessel_j1(x) / (bessel_j0(x) - bessel_j1(x) / x)
        x -= step
        if abs(step) < 1e-15 * x:
            break
    return x


@pytest.fixture(scope="session")
def unit_interval():
    return Geometry.ball(1.0, N=1)


@pytest.fixture(scope="session")
def unit_disk():
    return Geometry.ball(1.0, N=2)


@pytest.fixture(scope="session")
def proto15():
    return PrototypeNonlinearity(15, 3)


@pytest.fixture(scope="session")
def proto45():
    return PrototypeNonlinearity(45, 3)


@pytest.fixture(scope="session")
def solved_k1(unit_interval, proto15):
    return solve_all(unit_interval, proto15, 1, grid_size=48)


@pytest.fixture(scope="session")
def solved_k2(unit_interval, proto45):
    return solve_all(unit_interval, proto45, 2, grid_size=48)


@pytest.fixture(scope="session")
def solved_annulus():
    """N = 2 annulus (1, 2): q - r = 27 lies between lambda_2 and lambda_3."""
    geom, nl = Geometry.annulus(1.0, 2.0, N=2), PrototypeNonlinearity(30, 3)
    return geom, nl, 1, solve_all(geom, nl, 1)


@pytest.fixture(scope="session")
def solved_disk_k2(unit_disk):
    """Unit disk: q - r = 67 exceeds lambda_3 = j'_{1,2}^2."""
    nl = PrototypeNonlinearity(70, 3)
    return unit_disk, nl, 2, solve_all(unit_disk, nl, 2)
