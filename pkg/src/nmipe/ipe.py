"""Right-hand sides of the non-Markovian propagation equation.

In sum/difference coordinates the equation is pointwise,

    d2 H/dz2 = -k^2 Cn2 |lambda z a_d + x|^(2/3) H  =  K(z) H ,

which ``k_single`` / ``k_two`` evaluate directly.  ``ipe_rhs_fourier``
implements the equivalent Fourier-domain convolution form

    d2 S/dz2 = 2 k^2 int [ S(a-u) e^(-i 2 pi lambda z a_d.u) - S(a) ]
                          Phi_1(u) d2u

on a sampled grid; it exists to cross-validate the coordinate-transform
derivation against the local form and is only intended for modest grids.

Numerical treatment of the convolution
--------------------------------------
Phi_1 ~ |u|^(-8/3) is singular at u = 0 and heavy-tailed, so a plain
cell sum cannot reach the required accuracy.  The operator therefore

* integrates u over the inscribed disk of the grid box on a refined
  sub-lattice (the grid data enter through their trigonometric
  interpolant, which makes the refined convolution diagonal in the
  cyclic-DFT basis),
* assigns the u = 0 cell zero weight (the bracket vanishes there; any
  finite regularized value cancels identically between the convolution
  and subtraction terms),
* averages Phi_1 over sub-cells near the origin and along the disk
  boundary, and
* adds the u-integral over the disk complement, reduced exactly to a
  radial Bessel-J0 integral and evaluated by panel quadrature.

Everything is a numerical evaluation of the defining integral; the
structure-function form of Q is never used, so the comparison against
the local form genuinely tests the derivation chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridGeometryError
from .grid import GridState
from .specfun import bessel_j
from .turbulence import PHI1_COEFF, TurbulenceParams

__all__ = [
    "PhasePoint",
    "TwoPhotonPoint",
    "p_poly",
    "k_single",
    "k_two",
    "make_k_single_fn",
    "make_k_two_fn",
    "ipe_rhs_fourier",
]


def _vec2(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(2)
    if not np.all(np.isfinite(a)):
        raise DomainError("vector components must be finite")
    return a


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """Evaluation point (x, a_d) of the sum/difference-coordinate state."""

    x: np.ndarray  # position-like coordinate, m
    a_d: np.ndarray  # spatial-frequency difference, 1/m

    def __post_init__(self):
        object.__setattr__(self, "x", _vec2(self.x))
        object.__setattr__(self, "a_d", _vec2(self.a_d))

    def negated(self) -> "PhasePoint":
        return PhasePoint(-self.x, -self.a_d)


@dataclass(frozen=True, eq=False)
class TwoPhotonPoint:
    """Evaluation point of the two-photon state: one (x, a_d) pair per arm."""

    x1: np.ndarray
    a_d: np.ndarray
    x2: np.ndarray
    b_d: np.ndarray

    def __post_init__(self):
        for name in ("x1", "a_d", "x2", "b_d"):
            object.__setattr__(self, name, _vec2(getattr(self, name)))

    def arms(self) -> tuple[PhasePoint, PhasePoint]:
        return PhasePoint(self.x1, self.a_d), PhasePoint(self.x2, self.b_d)


def p_poly(z: float, pt: PhasePoint, lam: float) -> float:
    """|lambda z a_d + x|^2, the quadratic polynomial under the 1/3 power."""
    v = lam * z * pt.a_d + pt.x
    return float(v @ v)


def k_single(z: float, pt: PhasePoint, params: TurbulenceParams) -> float:
    """Single-photon kernel K(z) = -k^2 Cn2 P(z)^(1/3) (always <= 0)."""
    return -params.k**2 * params.cn2 * p_poly(z, pt, params.wavelength) ** (1.0 / 3.0)


def k_two(z: float, pt: TwoPhotonPoint, params: TurbulenceParams) -> float:
    """Two-photon kernel: the two arms contribute additively."""
    lam = params.wavelength
    v1 = lam * z * pt.a_d + pt.x1
    v2 = lam * z * pt.b_d + pt.x2
    return -params.k**2 * params.cn2 * (
        float(v1 @ v1) ** (1.0 / 3.0) + float(v2 @ v2) ** (1.0 / 3.0)
    )


def make_k_single_fn(pt: PhasePoint, params: TurbulenceParams):
    """Fast scalar closure z -> k_single(z, pt, params) for ODE integration."""
    c = -params.k**2 * params.cn2
    lam = params.wavelength
    ax, ay = pt.a_d
    xx, xy = pt.x

    def k_of_z(z):
        vx = lam * z * ax + xx
        vy = lam * z * ay + xy
        return c * (vx * vx + vy * vy) ** (1.0 / 3.0)

    return k_of_z


def make_k_two_fn(pt: TwoPhotonPoint, params: TurbulenceParams):
    c = -params.k**2 * params.cn2
    lam = params.wavelength

    def k_of_z(z):
        v1x = lam * z * pt.a_d[0] + pt.x1[0]
        v1y = lam * z * pt.a_d[1] + pt.x1[1]
        v2x = lam * z * pt.b_d[0] + pt.x2[0]
        v2y = lam * z * pt.b_d[1] + pt.x2[1]
        return c * (
            (v1x * v1x + v1y * v1y) ** (1.0 / 3.0)
            + (v2x * v2x + v2y * v2y) ** (1.0 / 3.0)
        )

    return k_of_z


# ---------------------------------------------------------------------------
# Fourier-convolution form

from .oracle import _K15_W, _K15_X  # noqa: E402  (quadrature nodes reused)


def _xi_radial_tail(w: np.ndarray) -> np.ndarray:
    """Xi(w) = int_w^inf J0(2 pi t) t^(-5/3) dt, vectorized over w > 0.

    Shared panel quadrature over [min w, max w + 60] with a two-term
    integration-by-parts closure of the oscillatory remainder.
    """
    w = np.asarray(w, dtype=np.float64)
    wmin = max(float(w.min()), 1e-9)
    T = float(w.max()) + 60.0
    e1 = np.geomspace(wmin, min(1.0, T), 80) if wmin < 1.0 else np.empty(0)
    e2 = np.arange(max(1.0, wmin), T, 1.0 / 6.0)
    edges = np.unique(np.concatenate([e1, e2, [T]]))
    if edges[0] > wmin:
        edges = np.concatenate([[wmin], edges])
    lo, hi = edges[:-1], edges[1:]
    mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
    tt = mid[:, None] + hw[:, None] * _K15_X[None, :]
    f = bessel_j(0, 2.0 * math.pi * tt.ravel()).reshape(tt.shape) * tt ** (-5.0 / 3.0)
    panel = (f * _K15_W[None, :]).sum(axis=1) * hw
    cum_from = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
    ph = 2.0 * math.pi * T - 0.25 * math.pi
    tail = (1.0 / math.pi) * (
        -(T ** (-13.0 / 6.0)) * math.sin(ph) / (2.0 * math.pi)
        + (13.0 / (12.0 * math.pi)) * T ** (-19.0 / 6.0) * math.cos(ph) / (2.0 * math.pi)
    )
    idx = np.clip(np.searchsorted(edges, w, side="right") - 1, 0, len(lo) - 1)
    m2 = 0.5 * (w + hi[idx])
    h2 = 0.5 * (hi[idx] - w)
    tt = m2[..., None] + h2[..., None] * _K15_X
    f = bessel_j(0, 2.0 * math.pi * np.maximum(tt, 1e-12).ravel()).reshape(tt.shape)
    f = f * tt ** (-5.0 / 3.0)
    part = (f * _K15_W).sum(axis=-1) * h2
    return part + cum_from[idx + 1] + tail


def _phi1_disk_kernel(n_fine: int, h_fine: float, r_disk: float, cn2: float,
                      sub: int = 8, inner_radius: float = 0.0) -> np.ndarray:
    """Cell weights Phi_1(u) hf^2 on the wrapped fine lattice, restricted to
    the disk |u| <= r_disk, with sub-cell averaging near the origin and
    along the disk boundary.  The u = 0 cell gets weight zero."""
    c = PHI1_COEFF * cn2
    off = (((np.arange(n_fine) + n_fine // 2) % n_fine) - n_fine // 2) * h_fine
    ux, uy = np.meshgrid(off, off, indexing="ij")
    r = np.hypot(ux, uy)
    inside = (r > 0) & (r <= r_disk)
    w = np.where(inside, c * np.where(r > 0, r, 1.0) ** (-8.0 / 3.0), 0.0) * h_fine**2

    refine = (np.abs(r - r_disk) <= 1.5 * h_fine) | ((r <= inner_radius) & (r > 0))
    ii, jj = np.nonzero(refine)
    if ii.size:
        s = ((np.arange(sub) + 0.5) / sub - 0.5) * h_fine
        sx, sy = np.meshgrid(s, s, indexing="ij")
        cu = ux[ii, jj][:, None, None] + sx[None, :, :]
        cv = uy[ii, jj][:, None, None] + sy[None, :, :]
        rr = np.hypot(cu, cv)
        mask = (rr <= r_disk) & (rr > 1e-300)
        vals = np.where(mask, c * np.where(rr > 0, rr, 1.0) ** (-8.0 / 3.0), 0.0)
        w[ii, jj] = vals.mean(axis=(1, 2)) * h_fine**2
    w[0, 0] = 0.0
    return w


def ipe_rhs_fourier(
    s_grid: GridState,
    a_d,
    z: float,
    params: TurbulenceParams,
    refine: int | None = None,
) -> GridState:
    """Fourier-convolution right-hand side on a sampled frequency grid.

    The grid must be square with equal spacings; it is treated as one
    period of the trigonometric interpolant of S (the caller is
    responsible for sampling S finely enough for that to be faithful).
    After a DFT over a, the result approaches -2 k^2 Q(lambda z a_d + x)
    H(x) as the grid refines.
    """
    if s_grid.domain_tag != "frequency":
        raise GridGeometryError("ipe_rhs_fourier expects a frequency-domain grid")
    nx, ny = s_grid.shape
    hx, hy = s_grid.spacing
    if nx != ny or not math.isclose(hx, hy, rel_tol=1e-12):
        raise GridGeometryError("ipe_rhs_fourier requires a square, isotropic grid")
    if z < 0:
        raise DomainError("z must be >= 0")
    a_d = _vec2(a_d)
    n, h = nx, float(hx)

    if params.cn2 == 0.0:
        return s_grid.with_samples(np.zeros_like(s_grid.samples))

    fine = refine if refine is not None else max(1, 512 // n)
    nf, hf = n * fine, h / fine
    r_disk = (n // 2) * h - 0.5 * hf  # inscribed radius actually covered by cells
    w_cells = _phi1_disk_kernel(nf, hf, r_disk, params.cn2, inner_radius=6.0 * h)

    lam = params.wavelength
    off = (((np.arange(nf) + nf // 2) % nf) - nf // 2) * hf
    ux, uy = np.meshgrid(off, off, indexing="ij")
    phase = np.exp(-2j * math.pi * lam * z * (a_d[0] * ux + a_d[1] * uy))
    big = np.fft.fft2(w_cells * phase)

    # Coarse dual frequencies are a subset of the fine ones (same spacing
    # 1/(n h)); crop the fine symbol onto them.
    idx = (np.fft.fftfreq(n, d=h) * (n * h)).round().astype(int) % nf
    g_near = big[np.ix_(idx, idx)]
    w_sum = w_cells.sum()

    fx = np.fft.fftfreq(n, d=h)
    gx, gy = np.meshgrid(fx, fx, indexing="ij")
    y1 = gx + lam * z * a_d[0]
    y2 = gy + lam * z * a_d[1]
    ymag = np.hypot(y1, y2)

    c = PHI1_COEFF * params.cn2
    tail_const = 3.0 * math.pi * c * r_disk ** (-2.0 / 3.0)
    osc = np.full_like(ymag, tail_const)
    pos = r_disk * ymag > 1e-9
    osc[pos] = (
        2.0
        * math.pi
        * c
        * ymag[pos] ** (2.0 / 3.0)
        * _xi_radial_tail(r_disk * ymag[pos])
    )

    # -Qhat(y) on the dual grid; the RHS is diagonal there.
    symbol = (g_near + osc) - (w_sum + tail_const)
    k2 = params.k**2
    rhs = 2.0 * k2 * np.fft.ifft2(np.fft.fft2(s_grid.samples) * symbol)
    return s_grid.with_samples(rhs)
