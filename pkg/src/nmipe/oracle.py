"""Independent numerical ground truth: ODE integration and quadrature.

``integrate_pointwise`` solves the pointwise second-order evolution
equation  d2 rho/dz2 = K(z) rho  with the two physical initial conditions
rho(0) = 1, rho'(0) = 0, using an adaptive Dormand-Prince 5(4) pair with
cubic-Hermite dense output.  It is the reference against which both
closed-form kernels are validated.

``quad_adaptive_1d`` / ``quad_adaptive_2d`` are adaptive Gauss-Kronrod
integrators (G7/K15 and their tensor product) used as oracles for every
closed form in the package.  Integrands must accept numpy arrays; panels
are evaluated in batches so Python-level overhead stays small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError, StepSizeError

__all__ = [
    "OdeSolution",
    "integrate_pointwise",
    "quad_adaptive_1d",
    "quad_adaptive_2d",
]

# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4, for the embedded error estimate
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


@dataclass(frozen=True)
class OdeSolution:
    """Sampled solution of d2 rho/dz2 = K(z) rho, rho(0)=1, rho'(0)=0."""

    z_samples: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray

    def value_at_end(self) -> float:
        return float(self.values[-1])


def _hermite_eval(z, z0, z1, y0, y1, d0, d1):
    """Cubic Hermite interpolation on [z0, z1]."""
    h = z1 - z0
    s = (z - z0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def _gl_nodes(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _picard_bootstrap(k_of_z, h0: float):
    """Two Picard iterates of the integral form over [0, h0].

    Written for kernels behaving like z^(2/3) at the origin (where K' is
    unbounded): the substitution z = w^3 renders the integrands smooth, so
    fixed-order Gauss-Legendre converges at spectral rate.

    Returns (rho(h0), rho'(h0)).
    """
    xg, wg = _gl_nodes(48)
    wtop = h0 ** (1.0 / 3.0)

    def k_sub(w):
        return np.asarray(k_of_z(w**3)) * 3.0 * w * w

    # I2(u) = int_0^u (u - s) K(s) ds via s = w^3
    def i2(u):
        wu = u ** (1.0 / 3.0)
        w = 0.5 * wu * (xg + 1.0)
        f = (u - w**3) * k_sub(w)
        return 0.5 * wu * float(np.dot(wg, f))

    w = 0.5 * wtop * (xg + 1.0)
    kw = k_sub(w)
    i2_nodes = np.array([i2(float(wi**3)) for wi in w])
    rho_h = 1.0 + i2(h0) + 0.5 * wtop * float(np.dot(wg, (h0 - w**3) * kw * i2_nodes))
    # rho'(h) = int_0^h K(s) rho(s) ds, with rho ~ 1 + I2
    drho_h = 0.5 * wtop * float(np.dot(wg, kw * (1.0 + i2_nodes)))
    return rho_h, drho_h


def integrate_pointwise(
    k_of_z,
    z_end: float,
    tol: float,
    z_eval=None,
    singular_origin: bool = False,
) -> OdeSolution:
    """Integrate d2 rho/dz2 = K(z) rho from z=0 with rho=1, rho'=0.

    Parameters
    ----------
    k_of_z : callable
        Real-valued kernel K(z), continuous on [0, z_end].
    z_end : float
        End of the integration interval (> 0).
    tol : float
        Local error tolerance (used as both absolute and relative scale).
    z_eval : array_like, optional
        Sample points in [0, z_end] for dense output.  Defaults to the
        accepted step points.
    singular_origin : bool
        Set when K ~ z^(2/3) at the origin (unbounded K'); the first step
        is then taken with a series bootstrap instead of a Runge-Kutta
        step.

    Raises
    ------
    StepSizeError
        If the required step size underflows.
    """
    if z_end <= 0:
        raise ValueError("z_end must be > 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")

    def f(z, y):
        return np.array([y[1], k_of_z(z) * y[0]])

    zs = [0.0]
    ys = [np.array([1.0, 0.0])]
    ds = [f(0.0, ys[0])]

    z = 0.0
    y = ys[0]
    if singular_origin:
        h0 = min(1e-3 * z_end, max(tol, 1e-14) ** (3.0 / 16.0))
        rho_h, drho_h = _picard_bootstrap(k_of_z, h0)
        z = h0
        y = np.array([rho_h, drho_h])
        zs.append(z)
        ys.append(y)
        ds.append(f(z, y))

    k1 = f(z, y)
    h = min(z_end - z, 0.1 * z_end, (tol ** (1 / 5)) * z_end * 0.1 + 1e-6 * z_end)
    min_h = 1e-14 * z_end
    max_steps = 10_000_000
    steps = 0
    while z < z_end:
        if h < min_h:
            raise StepSizeError(f"step size underflow at z = {z:g}")
        steps += 1
        if steps > max_steps:
            raise StepSizeError("step limit exceeded")
        h = min(h, z_end - z)
        k = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * kk for a, kk in zip(_DP_A[i], k))
            k.append(f(z + _DP_C[i] * h, yi))
        y_new = y + h * sum(b * kk for b, kk in zip(_DP_B5, k) if b != 0.0)
        err_vec = h * sum(e * kk for e, kk in zip(_DP_E, k) if e != 0.0)
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
        if err <= 1.0:
            z += h
            y = y_new
            k1 = k[6]  # FSAL
            zs.append(z)
            ys.append(y.copy())
            ds.append(k1.copy())
        factor = 0.9 * (max(err, 1e-10)) ** (-0.2)
        h *= min(5.0, max(0.2, factor))

    zs = np.array(zs)
    ys = np.array(ys)
    ds = np.array(ds)

    if z_eval is None:
        return OdeSolution(zs, ys[:, 0].copy(), ys[:, 1].copy())

    z_eval = np.atleast_1d(np.asarray(z_eval, dtype=np.float64))
    if np.any(z_eval < 0) or np.any(z_eval > z_end * (1 + 1e-12)):
        raise ValueError("z_eval samples must lie in [0, z_end]")
    vals = np.empty_like(z_eval)
    dervs = np.empty_like(z_eval)
    idx = np.searchsorted(zs, z_eval, side="right") - 1
    idx = np.clip(idx, 0, len(zs) - 2)
    for n, (ze, i) in enumerate(zip(z_eval, idx)):
        vals[n] = _hermite_eval(
            ze, zs[i], zs[i + 1], ys[i, 0], ys[i + 1, 0], ys[i, 1], ys[i + 1, 1]
        )
        dervs[n] = _hermite_eval(
            ze, zs[i], zs[i + 1], ys[i, 1], ys[i + 1, 1], ds[i, 1], ds[i + 1, 1]
        )
    return OdeSolution(z_eval, vals, dervs)


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15 nodes and weights (on [-1, 1])

_K15_X = np.array(
    [
        -0.9914553711208126,
        -0.9491079123427585,
        -0.8648644233597691,
        -0.7415311855993945,
        -0.5860872354676911,
        -0.4058451513773972,
        -0.2077849550078985,
        0.0,
        0.2077849550078985,
        0.4058451513773972,
        0.5860872354676911,
        0.7415311855993945,
        0.8648644233597691,
        0.9491079123427585,
        0.9914553711208126,
    ]
)
_K15_W = np.array(
    [
        0.022935322010529224,
        0.06309209262997856,
        0.10479001032225019,
        0.14065325971552592,
        0.1690047266392679,
        0.19035057806478542,
        0.20443294007529889,
        0.20948214108472782,
        0.20443294007529889,
        0.19035057806478542,
        0.1690047266392679,
        0.14065325971552592,
        0.10479001032225019,
        0.06309209262997856,
        0.022935322010529224,
    ]
)
# Gauss-7 weights on the odd Kronrod nodes (others zero)
_G7_W = np.zeros(15)
_G7_W[1::2] = [
    0.1294849661688697,
    0.27970539148927664,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.27970539148927664,
    0.1294849661688697,
]


def quad_adaptive_1d(f, a: float, b: float, tol: float, points=None, max_panels=20000):
    """Adaptive Gauss-Kronrod quadrature of a vectorized integrand on [a, b].

    ``points`` lists known interior break locations (cusps) used for the
    initial partition.  Returns the integral with estimated absolute error
    <= tol; raises :class:`QuadratureError` (carrying the best estimate)
    otherwise.
    """
    if b == a:
        return 0.0
    edges = [a, b]
    if points is not None:
        edges += [p for p in points if min(a, b) < p < max(a, b)]
    edges = sorted(set(edges)) if b > a else sorted(set(edges), reverse=True)
    lo = np.array(edges[:-1], dtype=np.float64)
    hi = np.array(edges[1:], dtype=np.float64)

    def eval_panels(lo, hi):
        mid = 0.5 * (lo + hi)
        hw = 0.5 * (hi - lo)
        x = mid[:, None] + hw[:, None] * _K15_X[None, :]
        fx = np.asarray(f(x.ravel())).reshape(x.shape)
        k15 = (fx * _K15_W[None, :]).sum(axis=1) * hw
        g7 = (fx * _G7_W[None, :]).sum(axis=1) * hw
        return k15, np.abs(k15 - g7)

    vals, errs = eval_panels(lo, hi)
    while True:
        total = vals.sum()
        total_err = errs.sum()
        if total_err <= tol:
            return complex(total) if np.iscomplexobj(vals) else float(total)
        if len(lo) >= max_panels:
            raise QuadratureError(
                f"1-D quadrature: {len(lo)} panels, err ~ {total_err:.3e} > {tol:.3e}",
                best=float(np.real(total)) if not np.iscomplexobj(vals) else complex(total),
                err_estimate=float(total_err),
            )
        # Split every panel carrying more than its share of the error.
        share = max(tol / (2 * len(lo)), float(total_err) * 1e-3 / len(lo))
        split = errs > share
        if not split.any():
            split = errs == errs.max()
        keep = ~split
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[keep], lo[split], mid])
        new_hi = np.concatenate([hi[keep], mid, hi[split]])
        new_vals, new_errs = eval_panels(
            np.concatenate([lo[split], mid]), np.concatenate([mid, hi[split]])
        )
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])
        lo, hi = new_lo, new_hi


def quad_adaptive_2d(f, domain, tol: float, initial_split: int = 1, max_panels=40000):
    """Adaptive tensor Gauss-Kronrod quadrature on a rectangle.

    ``domain`` is ((x0, x1), (y0, y1)); ``f(x, y)`` must accept equal-shape
    arrays.  The y-limits may be callables y0(x), y1(x), in which case the
    region is mapped onto a rectangle by y = y0 + s (y1 - y0), s in [0, 1]
    (this handles triangles without a discontinuous indicator).  Panels
    failing the local error share are split into four.  ``initial_split``
    pre-partitions each axis, which helps integrands with interior cusp
    lines.
    """
    (x0, x1), (y0, y1) = domain
    if callable(y0) or callable(y1):
        ylo = y0 if callable(y0) else (lambda x, _v=y0: np.full_like(x, _v))
        yhi = y1 if callable(y1) else (lambda x, _v=y1: np.full_like(x, _v))

        def f_mapped(x, s):
            lo_ = ylo(x)
            width = yhi(x) - lo_
            return f(x, lo_ + s * width) * width

        return quad_adaptive_2d(
            f_mapped, ((x0, x1), (0.0, 1.0)), tol, initial_split, max_panels
        )
    n0 = max(1, int(initial_split))
    ex = np.linspace(x0, x1, n0 + 1)
    ey = np.linspace(y0, y1, n0 + 1)
    lo = np.stack([np.repeat(ex[:-1], n0), np.tile(ey[:-1], n0)], axis=1)
    hi = np.stack([np.repeat(ex[1:], n0), np.tile(ey[1:], n0)], axis=1)

    wk = _K15_W[:, None] * _K15_W[None, :]
    wg = _G7_W[:, None] * _G7_W[None, :]

    def eval_panels(lo, hi):
        midx = 0.5 * (lo[:, 0] + hi[:, 0])
        midy = 0.5 * (lo[:, 1] + hi[:, 1])
        hwx = 0.5 * (hi[:, 0] - lo[:, 0])
        hwy = 0.5 * (hi[:, 1] - lo[:, 1])
        X = midx[:, None, None] + hwx[:, None, None] * _K15_X[None, :, None]
        Y = midy[:, None, None] + hwy[:, None, None] * _K15_X[None, None, :]
        X, Y = np.broadcast_arrays(X, Y)
        fx = np.asarray(f(X.ravel(), Y.ravel())).reshape(X.shape)
        area = hwx * hwy
        k = (fx * wk[None, :, :]).sum(axis=(1, 2)) * area
        g = (fx * wg[None, :, :]).sum(axis=(1, 2)) * area
        return k, np.abs(k - g)

    vals, errs = eval_panels(lo, hi)
    while True:
        total = vals.sum()
        total_err = errs.sum()
        if total_err <= tol:
            return complex(total) if np.iscomplexobj(vals) else float(total)
        if len(lo) >= max_panels:
            raise QuadratureError(
                f"2-D quadrature: {len(lo)} panels, err ~ {total_err:.3e} > {tol:.3e}",
                best=complex(total) if np.iscomplexobj(vals) else float(total),
                err_estimate=float(total_err),
            )
        share = max(tol / (2 * len(lo)), float(total_err) * 1e-3 / len(lo))
        split = errs > share
        if not split.any():
            split = errs == errs.max()
        keep = ~split
        slo, shi = lo[split], hi[split]
        mid = 0.5 * (slo + shi)
        quads_lo = [
            slo,
            np.stack([mid[:, 0], slo[:, 1]], axis=1),
            np.stack([slo[:, 0], mid[:, 1]], axis=1),
            mid,
        ]
        quads_hi = [
            mid,
            np.stack([shi[:, 0], mid[:, 1]], axis=1),
            np.stack([mid[:, 0], shi[:, 1]], axis=1),
            shi,
        ]
        new_lo = np.concatenate(quads_lo)
        new_hi = np.concatenate(quads_hi)
        new_vals, new_errs = eval_panels(new_lo, new_hi)
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
