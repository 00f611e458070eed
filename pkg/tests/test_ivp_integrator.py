"""Tests for the shooting Cauchy problem integrator."""

import math

import numpy as np
import pytest

from minkshoot.curvature_core import Geometry, PrototypeNonlinearity, f_hat
from minkshoot.errors import DomainError, UsageError
from minkshoot.ivp_integrator import (
    DenseSolution,
    PhaseState,
    dormand_prince,
    energy,
    integrate_ivp,
    origin_start,
    origin_step,
    rhs,
)


class TestRhs:
    def test_equilibrium(self, proto15):
        assert rhs(Geometry.ball(1.0, N=1), proto15, 0.5, (1.0, 0.0)) == (0.0, 0.0)

    def test_unit_momentum(self, proto15):
        """v / r^{N-1} = 1 gives u' = 1/sqrt(2) and f(s0) = 0 gives v' = 0."""
        du, dv = rhs(Geometry.ball(1.0, N=2), proto15, 0.5, (1.0, 0.5))
        assert du == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-15)
        assert dv == 0.0

    def test_exact_forcing(self):
        """N = 3, r = 2, u = 2: v' = -r^2 f(2) = -4 * (8 - 4)."""
        du, dv = rhs(Geometry.ball(3.0, N=3), PrototypeNonlinearity(4, 3), 2.0, (2.0, 0.0))
        assert (du, dv) == (0.0, -16.0)

    def test_negative_u_uses_extension(self, proto15):
        assert rhs(Geometry.ball(1.0, N=1), proto15, 0.5, (-0.5, 0.0))[1] == 0.0

    @pytest.mark.parametrize("r", [0.0, -0.1])
    def test_origin_is_rejected(self, proto15, r):
        with pytest.raises(DomainError):
            rhs(Geometry.ball(1.0, N=2), proto15, r, (1.0, 0.0))


class TestOriginStart:
    def test_equilibrium(self, unit_disk, proto15):
        state = origin_start(unit_disk, proto15, 1.0, 1e-3)
        assert state == PhaseState(1e-3, 1.0, 0.0)

    def test_zero_datum(self, unit_disk, proto15):
        state = origin_start(unit_disk, proto15, 0.0, 0.1)
        assert (state.u, state.v) == (0.0, 0.0)

    def test_taylor_values(self, unit_disk, proto15):
        """N = 2, d = 2, h0 = 1e-3: u = 2 - f(2) h0^2 / 4, v = -f(2) h0^2 / 2."""
        f2 = 2.0**14 - 2.0**2
        state = origin_start(unit_disk, proto15, 2.0, 1e-3)
        assert state.r == 1e-3
        assert state.u == pytest.approx(2.0 - f2 * 1e-6 / 4, rel=1e-14)
        assert state.v == pytest.approx(-f2 * 1e-6 / 2, rel=1e-14)

    def test_annulus_is_rejected(self, proto15):
        with pytest.raises(UsageError):
            origin_start(Geometry.annulus(0.5, 1.0, N=2), proto15, 0.5, 1e-3)

    def test_nonpositive_step_is_rejected(self, unit_disk, proto15):
        with pytest.raises(UsageError):
            origin_start(unit_disk, proto15, 0.5, 0.0)

    def test_step_is_clipped_by_forcing(self, unit_disk):
        forcing = 1e6
        h0 = origin_step(unit_disk, forcing, 1e-10)
        assert abs(forcing) * h0 / unit_disk.dim_N <= 0.25 + 1e-15


class TestDormandPrince:
    def test_exponential(self):
        """y' = y on [0, 1] reaches e, and the interpolant follows exp in between."""
        sol = dormand_prince(
            lambda t, y: y.copy(), 0.0, [1.0], 1.0,
            lambda y, y_new: 1e-12 * (np.maximum(np.abs(y), np.abs(y_new)) + 1.0),
        )
        assert sol.t[0] == 0.0 and sol.t[-1] == 1.0
        assert sol.y[-1, 0] == pytest.approx(math.e, rel=1e-10)
        t = np.linspace(0.0, 1.0, 57)
        np.testing.assert_allclose(sol(t)[:, 0], np.exp(t), rtol=1e-9)
        np.testing.assert_allclose(sol.derivative(t)[:, 0], np.exp(t), rtol=1e-7)

    def test_harmonic_oscillator(self):
        sol = dormand_prince(
            lambda t, y: np.array([y[1], -y[0]]), 0.0, [1.0, 0.0], 10.0,
            lambda y, y_new: 1e-11 * (np.maximum(np.abs(y), np.abs(y_new)) + 1.0),
        )
        np.testing.assert_allclose(sol.y[-1], [math.cos(10.0), -math.sin(10.0)], atol=1e-8)

    def test_constant_solution(self):
        sol = DenseSolution.constant(0.0, 2.0, [3.0, -1.0])
        np.testing.assert_array_equal(sol([0.0, 0.7, 2.0]), [[3.0, -1.0]] * 3)
        np.testing.assert_array_equal(sol.derivative([0.5]), [[0.0, 0.0]])


class TestIntegrateIvp:
    def test_trajectory_shape(self, unit_interval, proto15):
        traj = integrate_ivp(unit_interval, proto15, 0.5)
        assert traj.r[0] == 0.0 and traj.r[-1] == 1.0
        assert np.all(np.diff(traj.r) > 0.0)
        first = traj.samples[0]
        assert (first.u, first.v) == (0.5, 0.0)
        assert len(traj.slope_samples) == len(traj.samples)

    def test_annulus_starts_at_inner_radius(self, proto15):
        traj = integrate_ivp(Geometry.annulus(1.0, 2.0, N=2), proto15, 0.8)
        assert (traj.r[0], traj.u[0], traj.v[0]) == (1.0, 0.8, 0.0)
        assert traj.r[-1] == 2.0

    @pytest.mark.parametrize("geom", [Geometry.ball(1.0, N=2), Geometry.annulus(1.0, 2.0, N=1)])
    def test_equilibrium_is_constant(self, geom, proto15):
        traj = integrate_ivp(geom, proto15, 1.0)
        assert np.all(traj.u == 1.0)
        assert np.all(traj.v == 0.0)
        assert traj.r[0] == geom.R1 and traj.r[-1] == geom.R2

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_zero_datum_stays_zero(self, proto15, N):
        traj = integrate_ivp(Geometry.ball(1.0, N=N), proto15, 0.0)
        assert np.all(traj.u == 0.0)
        assert np.all(traj.v == 0.0)

    @pytest.mark.parametrize("d", [0.05, 0.5, 0.999, 1.001, 1.5, 2.0])
    def test_slope_and_apriori_bounds(self, unit_disk, proto15, d):
        traj = integrate_ivp(unit_disk, proto15, d)
        assert traj.max_slope() < 1.0
        assert np.max(np.abs(traj.u)) <= traj.apriori_bound()
        assert traj.apriori_bound() == d + 1.0

    @pytest.mark.parametrize("d", [0.3, 0.9, 1.5])
    def test_energy_is_conserved(self, unit_interval, proto15, d):
        """N = 1: E = 1/sqrt(1 - u'^2) + F(u) stays constant."""
        e = energy(integrate_ivp(unit_interval, proto15, d, 1e-10), proto15)
        assert np.max(np.abs(e - e[0])) <= 1e-7 * abs(e[0])

    def test_energy_needs_dimension_one(self, unit_disk, proto15):
        with pytest.raises(UsageError):
            energy(integrate_ivp(unit_disk, proto15, 0.5, 1e-8), proto15)

    def test_momentum_vanishes_at_origin(self, unit_disk, proto15):
        """v / r^{N-1} -> 0 as r -> 0 and u stays positive for d = 0.9."""
        traj = integrate_ivp(unit_disk, proto15, 0.9)
        r = np.array([1e-9, 1e-7, 1e-5, 1e-3])
        slope = traj.slope_at(r)
        assert np.all(np.abs(slope) <= 10.0 * r)
        assert np.min(traj.u) > 0.0

    def test_refined_tolerance_agrees(self, unit_disk, proto15):
        tol = 1e-8
        for d in (0.5, 0.9):
            coarse = integrate_ivp(unit_disk, proto15, d, tol)
            fine = integrate_ivp(unit_disk, proto15, d, tol / 10)
            for a, b in ((coarse.u[-1], fine.u[-1]), (coarse.v[-1], fine.v[-1])):
                assert abs(a - b) <= 50 * tol * max(1.0, abs(b))

    @pytest.mark.parametrize("N", [1, 2])
    def test_continuous_dependence(self, proto15, N):
        geom = Geometry.ball(1.0, N=N)
        r = np.linspace(0.0, 1.0, 2001)
        for d in np.linspace(0.2, 1.6, 10):
            a = integrate_ivp(geom, proto15, d)
            b = integrate_ivp(geom, proto15, d + 1e-6)
            assert np.max(np.abs(a.evaluate(r)[0] - b.evaluate(r)[0])) <= 1e-4
            assert np.max(np.abs(a.slope_at(r) - b.slope_at(r))) <= 1e-4

    def test_dense_output_hits_nodes(self, unit_disk, proto15):
        traj = integrate_ivp(unit_disk, proto15, 0.7)
        u, v = traj.evaluate(traj.r)
        np.testing.assert_allclose(u, traj.u, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(v, traj.v, rtol=1e-13, atol=1e-15)

    def test_interpolant_derivative_matches_rhs_at_nodes(self, unit_disk, proto15):
        traj = integrate_ivp(unit_disk, proto15, 0.7)
        r = traj.r[1:]
        expected = np.array([-ri * f_hat(proto15, ui) for ri, ui in zip(r, traj.u[1:])])
        np.testing.assert_allclose(traj.momentum_derivative(r), expected, rtol=1e-9, atol=1e-12)

    def test_origin_layer_uses_taylor_state(self, unit_disk, proto15):
        traj = integrate_ivp(unit_disk, proto15, 2.0)
        h0 = traj.r[1]
        r = h0 / 2
        u, v = traj.evaluate([r])
        f2 = proto15.eval_f(2.0)
        assert u[0] == pytest.approx(2.0 - f2 * r**2 / 4, rel=1e-14)
        assert v[0] == pytest.approx(-f2 * r**2 / 2, rel=1e-14)

    @pytest.mark.parametrize("tol", [1e-14, 1e-3, 0.0])
    def test_tolerance_range(self, unit_interval, proto15, tol):
        with pytest.raises(UsageError):
            integrate_ivp(unit_interval, proto15, 0.5, tol)

    def test_negative_datum(self, unit_interval, proto15):
        with pytest.raises(UsageError):
            integrate_ivp(unit_interval, proto15, -0.1)

    def test_deterministic(self, unit_disk, proto15):
        a = integrate_ivp(unit_disk, proto15, 0.6)
        b = integrate_ivp(unit_disk, proto15, 0.6)
        np.testing.assert_array_equal(a.r, b.r)
        np.testing.assert_array_equal(a.u, b.u)


class TestTrajectoryCsv:
    def test_header_and_rows(self, tmp_path, unit_interval, proto15):
        traj = integrate_ivp(unit_interval, proto15, 0.5, 1e-8)
        path = traj.to_csv(tmp_path / "traj.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "r,u,v,uprime"
        assert len(lines) == len(traj.r) + 1
        r, u, v, up = (float(x) for x in lines[-1].split(","))
        assert (r, u, v, up) == (traj.r[-1], traj.u[-1], traj.v[-1], traj.slope[-1])
