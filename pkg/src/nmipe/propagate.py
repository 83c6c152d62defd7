"""Position-domain output states assembled from a propagation kernel.

The two-point function of the output state in sum/difference position
coordinates is

    G(x_s, x_d, z) = int int G_in(x_s - lambda z a, u)
                     T(u, (x_d - u)/(lambda z), z)
                     exp(-i 2 pi a . (x_d - u)) d2a d2u .

For Gaussian inputs the a-integral is a Gaussian Fourier transform with a
closed form, which reduces the assembly to a single 2-D u-quadrature:

    G = N (pi w0^2 / 2) (lambda z)^(-2) int d2u
        exp(-|u|^2/(2 w0^2))
        exp(-pi^2 w0^2 |x_d - u|^2 / (2 lambda^2 z^2))
        exp(-i 2 pi x_s.(x_d - u)/(lambda z)) T(u, x_d, z) .

Kernels are supplied as vectorized callables f(u_points, x_d, z) ->
(values, valid); inadmissible points (the modified kernel's restricted
domain) are zero-weighted and the excluded Gaussian-measure fraction is
reported in the result metadata rather than silently extrapolated.

Arbitrary (non-Gaussian) pure-state inputs sampled on a grid route
through a slower cross-ambiguity path, `to_position_domain_grid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridGeometryError, QuadratureError
from .grid import GridState
from .oracle import quad_adaptive_2d
from .turbulence import TurbulenceParams

__all__ = [
    "GaussianInput",
    "PropagationResult",
    "free_space_kernel",
    "rotating_frame_phase",
    "to_position_domain",
    "to_position_domain_result",
    "to_position_domain_grid",
    "observable_coherence",
]


@dataclass(frozen=True)
class GaussianInput:
    """Gaussian-beam input; the mutual coherence at z = 0 is

        G_in(x_s, x_d) = N exp(-2|x_s|^2/w0^2 - |x_d|^2/(2 w0^2))

    with N defaulting to 2/(pi w0^2), which normalizes the state to unit
    trace."""

    w0: float
    normalization: float | None = None

    def __post_init__(self):
        if self.w0 <= 0:
            raise DomainError("w0 must be > 0")

    @property
    def norm(self) -> float:
        if self.normalization is not None:
            return self.normalization
        return 2.0 / (math.pi * self.w0**2)

    def coherence(self, x_s, x_d) -> float:
        x_s = np.asarray(x_s, dtype=np.float64)
        x_d = np.asarray(x_d, dtype=np.float64)
        return self.norm * math.exp(
            -2.0 * float(x_s @ x_s) / self.w0**2
            - float(x_d @ x_d) / (2.0 * self.w0**2)
        )


@dataclass(frozen=True)
class PropagationResult:
    value: complex
    excluded_fraction: float  # Gaussian-measure fraction of inadmissible u


def free_space_kernel(u, x_d, z):
    """T == 1: no turbulence."""
    u = np.asarray(u, dtype=np.float64)
    ones = np.ones(u.shape[:-1], dtype=np.float64)
    return ones, ones.astype(bool)


def rotating_frame_phase(grid: GridState, z: float, lam: float, direction: str) -> GridState:
    """Multiply a frequency-domain grid by exp(+-i pi lambda z |a|^2).

    ``add`` applies the free-space phase (rotating frame -> lab frame),
    ``remove`` its inverse.
    """
    if grid.domain_tag != "frequency":
        raise GridGeometryError("rotating_frame_phase expects a frequency grid")
    if direction not in ("add", "remove"):
        raise ValueError("direction must be 'add' or 'remove'")
    ax, ay = grid.coords()
    phase = math.pi * lam * z * (ax**2 + ay**2)
    factor = np.exp(1j * phase) if direction == "add" else np.exp(-1j * phase)
    return grid.with_samples(grid.samples * factor)


def _quad_box(inp: GaussianInput, x_d, z: float, lam: float, widen: float = 1.0):
    """Center and half-width of the effective-Gaussian u-integration box."""
    t = lam * z / (math.pi * inp.w0**2)
    center = np.asarray(x_d, dtype=np.float64) / (1.0 + t * t)
    sigma_eff = inp.w0 * t / math.sqrt(1.0 + t * t)
    half = 6.0 * sigma_eff * widen
    return center, half, sigma_eff, t


def _assemble(kernel_fn, inp, x_s, x_d, z, lam, rtol, widen):
    center, half, sigma_eff, t = _quad_box(inp, x_d, z, lam, widen)
    w0 = inp.w0
    pref = inp.norm * (math.pi * w0**2 / 2.0) / (lam * z) ** 2
    ax_s = np.asarray(x_s, dtype=np.float64).reshape(2)
    ax_d = np.asarray(x_d, dtype=np.float64).reshape(2)
    c_pos = 1.0 / (2.0 * w0**2)
    c_freq = math.pi**2 * w0**2 / (2.0 * (lam * z) ** 2)
    c_phase = 2.0 * math.pi / (lam * z)

    def raw(ux, uy):
        pts = np.stack([ux, uy], axis=-1)
        tvals, valid = kernel_fn(pts, ax_d, z)
        dx = ax_d[0] - ux
        dy = ax_d[1] - uy
        env = np.exp(-c_pos * (ux**2 + uy**2) - c_freq * (dx**2 + dy**2))
        phase = np.exp(-1j * c_phase * (ax_s[0] * dx + ax_s[1] * dy))
        return np.where(valid, tvals, 0.0) * env * phase

    # Tolerance scale: peak envelope times the Gaussian-product area.
    scale = pref * 2.0 * math.pi * sigma_eff**2 * math.exp(
        -c_pos * c_freq / (c_pos + c_freq) * float(ax_d @ ax_d)
    )
    abs_tol = max(rtol * abs(scale), 1e-300)

    disk = getattr(kernel_fn, "admissible_disk", None)
    if disk is not None:
        # Kernels restricted to a disk carry a jump at its rim; mapping the
        # disk onto (radius, angle) turns the jump into the domain edge,
        # where adaptive quadrature behaves.
        dc, dr = disk(ax_d)
        if dr <= 0.0:
            return 0.0 + 0.0j, abs_tol

        def integrand_disk(r, th):
            ux = dc[0] + dr * r * np.cos(th)
            uy = dc[1] + dr * r * np.sin(th)
            return raw(ux, uy) * (dr * dr * r)

        val = quad_adaptive_2d(
            integrand_disk,
            ((0.0, 1.0), (0.0, 2.0 * math.pi)),
            abs_tol / max(pref, 1e-300),
            initial_split=3,
        )
        return pref * val, abs_tol

    domain = (
        (center[0] - half, center[0] + half),
        (center[1] - half, center[1] + half),
    )
    val = quad_adaptive_2d(raw, domain, abs_tol / max(pref, 1e-300), initial_split=2)
    return pref * val, abs_tol


def _excluded_fraction(kernel_fn, inp, x_d, z, lam, n=96):
    """Gaussian-measure fraction of the u-domain where the kernel is
    inadmissible, on a fixed tensor grid (metadata, not the integral)."""
    center, half, _, _ = _quad_box(inp, x_d, z, lam)
    xs = np.linspace(center[0] - half, center[0] + half, n)
    ys = np.linspace(center[1] - half, center[1] + half, n)
    UX, UY = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([UX, UY], axis=-1)
    _, valid = kernel_fn(pts, np.asarray(x_d, dtype=np.float64), z)
    w0 = inp.w0
    c_pos = 1.0 / (2.0 * w0**2)
    c_freq = math.pi**2 * w0**2 / (2.0 * (lam * z) ** 2)
    dx = x_d[0] - UX
    dy = x_d[1] - UY
    env = np.exp(-c_pos * (UX**2 + UY**2) - c_freq * (dx**2 + dy**2))
    tot = env.sum()
    if tot == 0.0:
        return 0.0
    return float(env[~valid].sum() / tot)


def to_position_domain_result(
    kernel_fn,
    inp: GaussianInput,
    x_s,
    x_d,
    z: float,
    params: TurbulenceParams,
    rtol: float = 1e-8,
) -> PropagationResult:
    """Output two-point function G(x_s, x_d, z) for a Gaussian input.

    The a-integral is analytic; the u-integral is adaptive with a 6-sigma
    truncation box and a box-doubling convergence check.
    """
    if z <= 0:
        raise DomainError("position-domain assembly requires z > 0")
    lam = params.wavelength
    val, abs_tol = _assemble(kernel_fn, inp, x_s, x_d, z, lam, rtol, widen=1.0)
    if getattr(kernel_fn, "admissible_disk", None) is None:
        # 6-sigma truncation box: check the tail by doubling the box.
        val2, _ = _assemble(kernel_fn, inp, x_s, x_d, z, lam, rtol, widen=2.0)
        if abs(val - val2) > 20.0 * abs_tol:
            raise QuadratureError(
                f"u-integral truncation not converged: |dG| = {abs(val - val2):.3e}",
                best=val2,
                err_estimate=abs(val - val2),
            )
        val = val2
    excl = _excluded_fraction(kernel_fn, inp, np.asarray(x_d, float), z, lam)
    return PropagationResult(value=complex(val), excluded_fraction=excl)


def to_position_domain(
    kernel_fn,
    inp: GaussianInput,
    x_s,
    x_d,
    z: float,
    params: TurbulenceParams,
    rtol: float = 1e-8,
) -> complex:
    return to_position_domain_result(kernel_fn, inp, x_s, x_d, z, params, rtol).value


def observable_coherence(
    x1,
    x2,
    z: float,
    kernel_fn,
    inp: GaussianInput,
    params: TurbulenceParams,
    rtol: float = 1e-8,
) -> complex:
    """G expressed in detector coordinates: x_s = (x1+x2)/2, x_d = x1-x2."""
    x1 = np.asarray(x1, dtype=np.float64).reshape(2)
    x2 = np.asarray(x2, dtype=np.float64).reshape(2)
    return to_position_domain(
        kernel_fn, inp, 0.5 * (x1 + x2), x1 - x2, z, params, rtol
    )


def to_position_domain_grid(
    psi: GridState,
    kernel_fn,
    x_s,
    x_d,
    z: float,
    params: TurbulenceParams,
) -> complex:
    """Assembly for an arbitrary pure-state input sampled on a grid.

    ``psi`` holds the input field on a position grid (<= 128 x 128).  The
    a-integral of the assembly becomes, per frequency-difference node u, a
    cross-ambiguity sum

        A(u, q) = sum_w psi(w + u/2) conj(psi(w - u/2)) e^{i 2 pi w.q} dA

    evaluated at q = (x_d - u)/(lambda z) on the even-pixel u-lattice (so
    the half-shifts stay on the grid).  O(n^4); provided for completeness,
    Gaussian inputs should use `to_position_domain`.
    """
    if psi.domain_tag != "position":
        raise GridGeometryError("grid input must be a position-domain field")
    nx, ny = psi.shape
    if nx > 128 or ny > 128:
        raise GridGeometryError("grid-input path is limited to 128 x 128 samples")
    if z <= 0:
        raise DomainError("position-domain assembly requires z > 0")
    lam = params.wavelength
    hx, hy = psi.spacing
    wx, wy = psi.coords()
    ax_s = np.asarray(x_s, dtype=np.float64).reshape(2)
    ax_d = np.asarray(x_d, dtype=np.float64).reshape(2)
    f = psi.samples
    total = 0.0 + 0.0j
    cell = hx * hy
    u_cell = (2.0 * hx) * (2.0 * hy)

    def shifted_product(m_x: int, m_y: int) -> np.ndarray:
        """psi(w + u/2) conj(psi(w - u/2)) on the w grid, u/2 = (m_x, m_y) px."""
        out = np.zeros_like(f)
        ax, ay = abs(m_x), abs(m_y)
        if nx - 2 * ax <= 0 or ny - 2 * ay <= 0:
            return out
        mid_x, mid_y = slice(ax, nx - ax), slice(ay, ny - ay)
        plus_x = slice(ax + m_x, nx - ax + m_x)
        minus_x = slice(ax - m_x, nx - ax - m_x)
        plus_y = slice(ay + m_y, ny - ay + m_y)
        minus_y = slice(ay - m_y, ny - ay - m_y)
        out[mid_x, mid_y] = f[plus_x, plus_y] * np.conj(f[minus_x, minus_y])
        return out

    for mx in range(-(nx // 2) + 1, nx // 2):
        for my in range(-(ny // 2) + 1, ny // 2):
            u = np.array([2.0 * mx * hx, 2.0 * my * hy])
            prod = shifted_product(mx, my)
            q = (ax_d - u) / (lam * z)
            amb = cell * np.sum(
                prod * np.exp(2j * math.pi * (wx * q[0] + wy * q[1]))
            )
            if amb == 0.0:
                continue
            tval, valid = kernel_fn(u.reshape(1, 2), ax_d, z)
            if not valid[0]:
                continue
            total += (
                u_cell
                * tval[0]
                * amb
                * np.exp(-2j * math.pi * (ax_s @ q))
            )
    return complex(total / (lam * z) ** 2)
