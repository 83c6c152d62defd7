"""Tests for the pointwise and Fourier-convolution equation right-hand sides."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmipe.errors import DomainError, GridGeometryError
from nmipe.grid import GridState, centered_grid
from nmipe.ipe import (
    PhasePoint,
    TwoPhotonPoint,
    ipe_rhs_fourier,
    k_single,
    k_two,
    make_k_single_fn,
    p_poly,
)
from nmipe.turbulence import TurbulenceParams

finite2 = st.tuples(
    st.floats(min_value=-10, max_value=10), st.floats(min_value=-10, max_value=10)
)


class TestPPoly:
    def test_z_zero(self):
        pt = PhasePoint([0.3, -0.4], [1.0, 2.0])
        assert p_poly(0.0, pt, 1.0) == pytest.approx(0.25, rel=1e-14)

    def test_x_zero(self):
        pt = PhasePoint([0.0, 0.0], [3.0, 4.0])
        assert p_poly(2.0, pt, 0.5) == pytest.approx(0.5**2 * 4 * 25, rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(x=finite2, ad=finite2, z=st.floats(min_value=0, max_value=5))
    def test_vector_identity(self, x, ad, z):
        """[lam z |a_d|^2 + a_d.x]^2/|a_d|^2 + (a_d x x)^2/|a_d|^2 == P."""
        lam = 0.7
        pt = PhasePoint(x, ad)
        ad2 = ad[0] ** 2 + ad[1] ** 2
        if ad2 < 1e-12:
            return
        dot = ad[0] * x[0] + ad[1] * x[1]
        cross = ad[0] * x[1] - ad[1] * x[0]
        regrouped = ((lam * z * ad2 + dot) ** 2 + cross**2) / ad2
        assert p_poly(z, pt, lam) == pytest.approx(regrouped, rel=1e-9, abs=1e-12)


class TestKSingle:
    def setup_method(self):
        self.params = TurbulenceParams(cn2=1.0, wavelength=2 * math.pi, w0=1.0)

    def test_zero_turbulence(self):
        p = TurbulenceParams(cn2=0.0, wavelength=1e-6, w0=0.01)
        assert k_single(1.0, PhasePoint([1, 1], [1, 1]), p) == 0.0

    def test_trace_point(self):
        for z in (0.0, 0.5, 10.0):
            assert k_single(z, PhasePoint([0, 0], [0, 0]), self.params) == 0.0

    def test_cube_root_example(self):
        # k=1, cn2=1, P=8 -> K = -2
        pt = PhasePoint([math.sqrt(8.0), 0.0], [0.0, 0.0])
        assert k_single(0.0, pt, self.params) == pytest.approx(-2.0, rel=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(x=finite2, ad=finite2, z=st.floats(min_value=0, max_value=3))
    def test_nonpositive_and_sign_flip(self, x, ad, z):
        pt = PhasePoint(x, ad)
        val = k_single(z, pt, self.params)
        assert val <= 0.0
        assert val == k_single(z, pt.negated(), self.params)

    def test_zero_iff_on_line(self):
        pt = PhasePoint([-1.0, 0.0], [0.5, 0.0])
        lam = self.params.wavelength
        z_star = 1.0 / (lam * 0.5)
        assert k_single(z_star, pt, self.params) == 0.0
        assert k_single(z_star * 1.01, pt, self.params) < 0.0

    def test_fast_closure_matches(self):
        pt = PhasePoint([0.3, -0.2], [1.1, 0.7])
        f = make_k_single_fn(pt, self.params)
        for z in (0.0, 0.3, 2.2):
            assert f(z) == pytest.approx(k_single(z, pt, self.params), rel=1e-14)


class TestKTwo:
    def setup_method(self):
        self.params = TurbulenceParams(cn2=1.0, wavelength=2 * math.pi, w0=1.0)

    def test_coincident_arms(self):
        pt2 = TwoPhotonPoint([0.3, 0.1], [1.0, -0.5], [0.3, 0.1], [1.0, -0.5])
        pt1 = PhasePoint([0.3, 0.1], [1.0, -0.5])
        for z in (0.0, 0.7, 2.0):
            assert k_two(z, pt2, self.params) == pytest.approx(
                2.0 * k_single(z, pt1, self.params), rel=1e-14
            )

    def test_one_arm_at_trace_point(self):
        pt2 = TwoPhotonPoint([0.3, 0.1], [1.0, -0.5], [0.0, 0.0], [0.0, 0.0])
        pt1 = PhasePoint([0.3, 0.1], [1.0, -0.5])
        assert k_two(1.1, pt2, self.params) == pytest.approx(
            k_single(1.1, pt1, self.params), rel=1e-14
        )

    def test_zero_turbulence(self):
        p = TurbulenceParams(cn2=0.0, wavelength=1e-6, w0=0.01)
        pt2 = TwoPhotonPoint([1, 2], [3, 4], [5, 6], [7, 8])
        assert k_two(1.0, pt2, p) == 0.0

    def test_arm_swap_symmetry(self):
        a = TwoPhotonPoint([0.3, 0.1], [1.0, -0.5], [-0.2, 0.4], [0.3, 0.9])
        b = TwoPhotonPoint([-0.2, 0.4], [0.3, 0.9], [0.3, 0.1], [1.0, -0.5])
        assert k_two(0.8, a, self.params) == pytest.approx(
            k_two(0.8, b, self.params), rel=1e-14
        )


def _gaussian_freq_grid(n, h, sigma_a):
    g = centered_grid(n, h, "frequency")
    ax, ay = g.coords()
    g.samples[:] = np.exp(-(ax**2 + ay**2) / (2.0 * sigma_a**2))
    return g


def _rel_l2_fourier_vs_local(grid, a_d, z, params, refine=None):
    """Relative L2 distance between the DFT of the convolution RHS and the
    local form -2 k^2 Q(lambda z a_d + x) H(x) on the dual grid."""
    rhs = ipe_rhs_fourier(grid, a_d, z, params, refine=refine)
    lhs_hat = np.fft.fft2(rhs.samples)
    h_hat = np.fft.fft2(grid.samples)
    fx = np.fft.fftfreq(grid.shape[0], d=grid.spacing[0])
    gx, gy = np.meshgrid(fx, fx, indexing="ij")
    lam = params.wavelength
    y1 = gx + lam * z * a_d[0]
    y2 = gy + lam * z * a_d[1]
    q = 0.5 * params.cn2 * (y1**2 + y2**2) ** (1.0 / 3.0)
    local = -2.0 * params.k**2 * q * h_hat
    return float(
        np.linalg.norm(lhs_hat - local) / np.linalg.norm(local)
    )


class TestRhsFourier:
    def setup_method(self):
        self.params = TurbulenceParams(cn2=1.0, wavelength=2 * math.pi, w0=1.0)

    def test_zero_state(self):
        g = centered_grid(32, 1.0, "frequency")
        rhs = ipe_rhs_fourier(g, [0.0, 0.0], 1.0, self.params, refine=2)
        assert np.all(rhs.samples == 0.0)

    def test_zero_turbulence(self):
        g = _gaussian_freq_grid(32, 1.0, 4.0)
        p = TurbulenceParams(cn2=0.0, wavelength=1e-6, w0=0.01)
        rhs = ipe_rhs_fourier(g, [0.0, 0.0], 1.0, p)
        assert np.all(rhs.samples == 0.0)

    def test_domain_tag_checked(self):
        g = centered_grid(16, 1.0, "position")
        with pytest.raises(GridGeometryError):
            ipe_rhs_fourier(g, [0.0, 0.0], 1.0, self.params)

    def test_square_grid_required(self):
        g = GridState(
            np.zeros((8, 16), dtype=complex), [0.0, 0.0], [1.0, 1.0], "frequency"
        )
        with pytest.raises(GridGeometryError):
            ipe_rhs_fourier(g, [0.0, 0.0], 1.0, self.params)

    def test_local_equivalence_centered(self):
        g = _gaussian_freq_grid(64, 1.0, 8.0)
        rel = _rel_l2_fourier_vs_local(g, np.array([0.0, 0.0]), 1.0, self.params)
        assert rel < 1e-3

    def test_local_equivalence_shifted(self):
        g = _gaussian_freq_grid(64, 1.0, 8.0)
        lam_z = self.params.wavelength * 1.0
        a_d = np.array([0.03, 0.015]) / lam_z
        rel = _rel_l2_fourier_vs_local(g, a_d, 1.0, self.params)
        assert rel < 1e-3

    def test_grid_refinement_improves(self):
        g = _gaussian_freq_grid(64, 1.0, 8.0)
        rel_coarse = _rel_l2_fourier_vs_local(
            g, np.array([0.0, 0.0]), 1.0, self.params, refine=2
        )
        rel_fine = _rel_l2_fourier_vs_local(
            g, np.array([0.0, 0.0]), 1.0, self.params, refine=8
        )
        assert rel_fine < rel_coarse
