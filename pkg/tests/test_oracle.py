"""Tests for the ODE integrator and the adaptive quadrature engines."""

import math

import numpy as np
import pytest

from nmipe.errors import QuadratureError
from nmipe.oracle import integrate_pointwise, quad_adaptive_1d, quad_adaptive_2d

from oracles_util import romberg_trapezoid

# Bessel-form solution of w'' = -(z+1)^(2/3) w, w(0)=1, w'(0)=0 at z=1
# (mpmath, dps=30; also reproduced by the closed-form kernel module).
T_BESSEL_KERNEL = 0.4579581041446089


class TestIntegratePointwise:
    def test_zero_kernel(self):
        sol = integrate_pointwise(lambda z: 0.0, 3.0, 1e-10)
        assert np.allclose(sol.values, 1.0)
        assert np.allclose(sol.derivative_values, 0.0)

    def test_initial_conditions_exact(self):
        sol = integrate_pointwise(lambda z: -1.0, 1.0, 1e-8)
        assert sol.values[0] == 1.0
        assert sol.derivative_values[0] == 0.0

    def test_harmonic_oscillator_quarter_period(self):
        w = 2.0
        z_end = math.pi / (2.0 * w)
        sol = integrate_pointwise(lambda z: -w * w, z_end, 1e-12, z_eval=[z_end])
        assert abs(sol.values[-1]) < 1e-11

    def test_harmonic_dense_output(self):
        w = 1.3
        zs = [0.0, 0.31, 0.7, 1.0, 1.5]
        sol = integrate_pointwise(lambda z: -w * w, 1.5, 1e-11, z_eval=zs)
        assert np.allclose(sol.values, np.cos(w * np.array(zs)), atol=1e-9)
        assert np.allclose(
            sol.derivative_values, -w * np.sin(w * np.array(zs)), atol=1e-8
        )

    def test_tolerance_convergence(self):
        """Halving (decading) the tolerance reduces the end-point error."""
        w = 3.0
        z_end = 2.0
        exact = math.cos(w * z_end)
        errs = []
        for tol in (1e-5, 1e-7, 1e-9, 1e-11):
            sol = integrate_pointwise(lambda z: -w * w, z_end, tol, z_eval=[z_end])
            errs.append(abs(sol.values[-1] - exact))
        assert errs[-1] < errs[0] / 100.0
        assert all(e <= 200.0 * t for e, t in zip(errs, (1e-5, 1e-7, 1e-9, 1e-11)))

    def test_bessel_kernel_closed_form(self):
        sol = integrate_pointwise(
            lambda z: -((z + 1.0) ** (2.0 / 3.0)), 1.0, 1e-12, z_eval=[1.0]
        )
        assert sol.values[-1] == pytest.approx(T_BESSEL_KERNEL, rel=1e-9)

    def test_singular_origin_bootstrap(self):
        """K = -z^(2/3) has unbounded K' at 0; compare with the Frobenius
        series solution sum a_n z^(8n/3)."""

        def frobenius(z):
            acc, a = 1.0, 1.0
            for n in range(40):
                e = 8.0 * (n + 1) / 3.0
                a = -a / (e * (e - 1.0))
                acc += a * z ** (8.0 * (n + 1) / 3.0)
            return acc

        sol = integrate_pointwise(
            lambda z: -(z ** (2.0 / 3.0)), 2.0, 1e-12, z_eval=[2.0], singular_origin=True
        )
        assert sol.values[-1] == pytest.approx(frobenius(2.0), rel=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            integrate_pointwise(lambda z: 0.0, -1.0, 1e-8)
        with pytest.raises(ValueError):
            integrate_pointwise(lambda z: 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            integrate_pointwise(lambda z: 0.0, 1.0, 1e-8, z_eval=[2.0])

    def test_first_order_perturbation_matches_nested_quadrature(self):
        """For small g, (rho(z; gK) - 1)/g -> double integral of K; checked
        by Richardson extrapolation in g."""
        k0 = lambda z: -(1.0 + np.sin(z))

        def x_of_g(g):
            sol = integrate_pointwise(lambda z: g * k0(z), 1.7, 1e-12, z_eval=[1.7])
            return (sol.values[-1] - 1.0) / g

        g = 1e-3
        rho1 = 2.0 * x_of_g(g / 2.0) - x_of_g(g)
        ref = quad_adaptive_2d(
            lambda z2, z1: k0(z1), ((0.0, 1.7), (0.0, lambda z2: z2)), 1e-12
        )
        assert rho1 == pytest.approx(ref, rel=1e-4)


class TestQuad1D:
    def test_power_integrand(self):
        assert quad_adaptive_1d(lambda x: x ** (2.0 / 3.0), 0, 1, 1e-12) == pytest.approx(
            0.6, abs=1e-11
        )

    def test_cube_root_vs_romberg(self):
        got = quad_adaptive_1d(lambda x: (1 + x * x) ** (1.0 / 3.0), 0, 1, 1e-12)
        ref = romberg_trapezoid(lambda x: (1 + x * x) ** (1.0 / 3.0), 0.0, 1.0)
        assert got == pytest.approx(ref, abs=1e-10)

    def test_presplit_points(self):
        got = quad_adaptive_1d(
            lambda x: np.abs(x) ** (2.0 / 3.0), -1, 1, 1e-12, points=[0.0]
        )
        assert got == pytest.approx(1.2, abs=1e-10)

    def test_nonconvergence_carries_best(self):
        f = lambda x: np.sqrt(np.abs(x - 1.0 / math.pi))
        with pytest.raises(QuadratureError) as exc:
            quad_adaptive_1d(f, 0, 1, 1e-15, max_panels=8)
        # int_0^1 sqrt|x - 1/pi| dx = (2/3)[(1/pi)^(3/2) + (1 - 1/pi)^(3/2)]
        ref = (2.0 / 3.0) * ((1.0 / math.pi) ** 1.5 + (1.0 - 1.0 / math.pi) ** 1.5)
        assert exc.value.best == pytest.approx(ref, abs=1e-3)
        assert exc.value.err_estimate is not None


class TestQuad2D:
    def test_triangle_area(self):
        got = quad_adaptive_2d(
            lambda z2, z1: np.ones_like(z1), ((0, 1), (0.0, lambda z2: z2)), 1e-12
        )
        assert got == pytest.approx(0.5, abs=1e-11)

    def test_gaussian(self):
        got = quad_adaptive_2d(
            lambda x, y: np.exp(-x * x - y * y), ((-8, 8), (-8, 8)), 1e-12
        )
        assert got == pytest.approx(math.pi, abs=1e-10)

    def test_complex_integrand(self):
        got = quad_adaptive_2d(
            lambda x, y: np.exp(-x * x - y * y) * np.exp(1j * x),
            ((-8, 8), (-8, 8)),
            1e-12,
        )
        ref = math.pi * math.exp(-0.25)
        assert got == pytest.approx(ref, abs=1e-10)

    def test_nonconvergence_carries_best(self):
        f = lambda x, y: np.where(x + y > 0.77, 1.0, 0.0)
        with pytest.raises(QuadratureError) as exc:
            quad_adaptive_2d(f, ((0, 1), (0, 1)), 1e-12, max_panels=128)
        assert exc.value.best is not None
