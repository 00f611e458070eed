"""Tests for the radial Neumann eigenvalue search."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from minkshoot.curvature_core import CallbackNonlinearity, Geometry, PrototypeNonlinearity
from minkshoot.errors import IntegrationError, SearchFailureError, UsageError
from minkshoot.neumann_eigen import (
    angle_shot,
    check_hypothesis,
    eigenvalue,
    eigenvalues,
    max_admissible_k,
    theta_mu_at_R2,
)
from tests.conftest import bessel_j1_zero


class TestAngleShot:
    def test_zero_mu(self, unit_disk):
        assert theta_mu_at_R2(unit_disk, 0.0) == 0.0

    def test_negative_mu(self, unit_interval):
        with pytest.raises(UsageError):
            angle_shot(unit_interval, -1.0)

    def test_interval_first_nontrivial(self, unit_interval):
        """N = 1, mu = pi^2: the angle reaches pi exactly at R2 = 1."""
        theta = theta_mu_at_R2(unit_interval, math.pi**2, 1e-12)
        assert theta == pytest.approx(math.pi, abs=1e-9)

    def test_disk_first_nontrivial(self, unit_disk):
        mu = bessel_j1_zero(3.83) ** 2
        assert theta_mu_at_R2(unit_disk, mu) == pytest.approx(math.pi, abs=1e-6)

    @pytest.mark.parametrize(
        "geom",
        [Geometry.ball(1.0, N=1), Geometry.ball(1.0, N=2), Geometry.ball(1.0, N=3),
         Geometry.annulus(0.5, 1.0, N=2), Geometry.annulus(0.5, 1.0, N=3)],
    )
    def test_strictly_increasing_in_mu(self, geom):
        thetas = [theta_mu_at_R2(geom, mu, 1e-8) for mu in np.logspace(-3, 4, 50)]
        assert all(b > a for a, b in zip(thetas, thetas[1:]))


class TestEigenvalue:
    def test_first_is_zero(self, unit_disk):
        assert eigenvalue(unit_disk, 1) == 0.0

    @pytest.mark.parametrize("k", range(2, 7))
    def test_interval_closed_form(self, unit_interval, k):
        expected = ((k - 1) * math.pi) ** 2
        assert eigenvalue(unit_interval, k, 1e-12) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("k", [2, 3])
    def test_annulus_closed_form(self, k):
        """N = 1 on (0.5, 2): lambda_k = ((k - 1) pi / 1.5)^2."""
        expected = ((k - 1) * math.pi / 1.5) ** 2
        assert eigenvalue(Geometry.annulus(0.5, 2.0, N=1), k) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("k, guess", [(2, 3.83), (3, 7.02), (4, 10.17)])
    def test_disk_bessel_zeros(self, unit_disk, k, guess):
        """N = 2: sqrt(lambda_k) is the (k-1)-th positive zero of J0' = -J1."""
        expected = bessel_j1_zero(guess) ** 2
        assert eigenvalue(unit_disk, k) == pytest.approx(expected, rel=1e-6)

    def test_disk_against_scipy(self, unit_disk):
        special = pytest.importorskip("scipy.special")
        zeros = special.jnp_zeros(0, 3)
        computed = eigenvalues(unit_disk, 4)[1:]
        np.testing.assert_allclose(np.sqrt(computed), zeros, rtol=1e-6)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_increasing_in_k(self, N):
        lams = eigenvalues(Geometry.ball(1.0, N=N), 5)
        assert lams[0] == 0.0
        assert all(b > a for a, b in zip(lams, lams[1:]))

    def test_scaling_with_radius(self, unit_disk):
        """lambda_k(R2) = lambda_k(1) / R2^2 on a ball."""
        assert eigenvalue(Geometry.ball(2.0, N=2), 2) == pytest.approx(
            eigenvalue(unit_disk, 2) / 4.0, rel=1e-6
        )

    @pytest.mark.parametrize("k", [0, -1, 1.5, True])
    def test_invalid_index(self, unit_interval, k):
        with pytest.raises(UsageError):
            eigenvalue(unit_interval, k)

    def test_invalid_tolerance(self, unit_interval):
        with pytest.raises(UsageError):
            eigenvalue(unit_interval, 2, 1e-2)

    def test_search_failure_on_tiny_domain(self):
        """pi^2 / R2^2 is far beyond the bracket ceiling for R2 = 1e-7."""
        with pytest.raises(SearchFailureError):
            eigenvalue(Geometry.ball(1e-7, N=1), 2)

    def test_index_far_above_ceiling(self, unit_interval):
        """(k - 1)^2 pi^2 exceeds the ceiling, so no angle is integrated."""
        with patch("minkshoot.neumann_eigen.theta_mu_at_R2") as shot:
            with pytest.raises(SearchFailureError, match="far above"):
                eigenvalue(unit_interval, 10**6)
        shot.assert_not_called()

    def test_integration_failure_is_search_failure(self):
        """A step-capped angle shot ends the search instead of escaping as IntegrationError."""
        capped = IntegrationError("too many steps", 0.5)
        with patch("minkshoot.neumann_eigen.theta_mu_at_R2", side_effect=capped):
            with pytest.raises(SearchFailureError) as exc_info:
                eigenvalue(Geometry.ball(2.5, N=1), 2)
        assert exc_info.value.__cause__ is capped
        assert "too many steps" in str(exc_info.value)


class TestHypothesis:
    def test_k1_holds_for_q15(self, unit_interval, proto15):
        check = check_hypothesis(unit_interval, proto15, 1)
        assert check
        assert check.f_prime == pytest.approx(12.0)
        assert check.margin == pytest.approx(12.0 - math.pi**2, rel=1e-8)

    def test_k2_fails_for_q15(self, unit_interval, proto15):
        check = check_hypothesis(unit_interval, proto15, 2)
        assert not check
        assert check.margin < 0.0

    def test_flat_callback_fails(self, unit_interval):
        nl = CallbackNonlinearity(lambda s: s * (s - 1.0) ** 3, 1.0)
        assert not check_hypothesis(unit_interval, nl, 1).holds

    @pytest.mark.parametrize("q, expected", [(15, 1), (45, 2), (10, 0)])
    def test_max_admissible_k(self, unit_interval, q, expected):
        assert max_admissible_k(unit_interval, PrototypeNonlinearity(q, 3), 4) == expected

    def test_invalid_k(self, unit_interval, proto15):
        with pytest.raises(UsageError):
            check_hypothesis(unit_interval, proto15, 0)
