"""Special-function kernels used by the closed-form propagation solutions.

Everything here is self-contained (no scipy): Gamma, Bessel functions of
fractional order, the specific Gauss hypergeometric 2F1 that shows up in
the weak-turbulence kernel, and the auxiliary integral

    aux_integral(A, B) = int_0^1 (A^2 + B^2 xi^2)^(1/3) dxi .

Bessel functions use the ascending power series for small argument and the
Hankel asymptotic expansion for large argument.  The hypergeometric uses
the direct Gauss series near zero, a Pfaff transformation for moderate
negative argument and the 1/x connection formula for large negative
argument, so the full range x in [-1e8, 0] is covered to ~1e-12 relative.

All functions are pure and accept scalars or numpy arrays in the numeric
argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, PoleError

__all__ = [
    "BesselOrder",
    "gamma_fn",
    "bessel_j",
    "bessel_y",
    "hyp2f1_kernel",
    "aux_integral",
]

# Crossover between the ascending series and the Hankel expansion.  At 14
# the series (summed in 80-bit floats) still has ~1e-13 relative accuracy
# and the asymptotic optimal-truncation error e^(-2x) is ~7e-13.
_SERIES_ASYMPTOTIC_CROSSOVER = 14.0

_MAX_SERIES_TERMS = 200
_MAX_ASYMPTOTIC_TERMS = 40


@dataclass(frozen=True)
class BesselOrder:
    """Exact rational Bessel order, so nu -> nu + 1 is exact."""

    nu: Fraction

    def __post_init__(self):
        if not isinstance(self.nu, Fraction):
            object.__setattr__(self, "nu", Fraction(self.nu))

    def __float__(self) -> float:
        return float(self.nu)

    def __add__(self, other) -> "BesselOrder":
        return BesselOrder(self.nu + Fraction(other))

    def __neg__(self) -> "BesselOrder":
        return BesselOrder(-self.nu)

    @property
    def is_integer(self) -> bool:
        return self.nu.denominator == 1


def _as_order(nu) -> Fraction:
    if isinstance(nu, BesselOrder):
        return nu.nu
    return Fraction(nu)


def gamma_fn(x: float) -> float:
    """Gamma function on the real line.

    Raises :class:`PoleError` at the poles (non-positive integers).
    """
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma pole at x = {x:g}")
    return math.gamma(x)


def _bessel_j_series(nu: float, x: np.ndarray) -> np.ndarray:
    """Ascending series, evaluated in extended precision.

    J_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_k (-(x/2)^2)^k / (k! (nu+1)..(nu+k))
    """
    xl = x.astype(np.longdouble)
    q = -(xl / 2.0) ** 2
    term = np.ones_like(xl)
    acc = np.ones_like(xl)
    for k in range(1, _MAX_SERIES_TERMS):
        term = term * q / (k * (nu + k))
        acc += term
        if np.all(np.abs(term) <= 1e-24 * np.abs(acc)):
            break
    # Prefactor (x/2)^nu / Gamma(nu+1); nu+1 > -1 never hits a pole for the
    # fractional orders used here.
    pref = (xl / 2.0) ** np.longdouble(nu) / np.longdouble(math.gamma(nu + 1.0))
    return (pref * acc).astype(np.float64)


def _hankel_pq(nu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P and Q sums of the Hankel asymptotic expansion, truncated per-element
    at the smallest term."""
    mu = 4.0 * nu * nu
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    last_mag = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _MAX_ASYMPTOTIC_TERMS):
        term = term * (mu - (2 * k - 1) ** 2) * inv8x / k
        mag = np.abs(term)
        # Freeze elements once their terms start growing: the asymptotic
        # series must be stopped at (just before) its smallest term.
        grow = mag >= last_mag
        active &= ~grow
        if not active.any():
            break
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            sign = -1.0 if (k // 2) % 2 else 1.0
            q = q + sign * contrib
        else:
            sign = -1.0 if (k // 2) % 2 else 1.0
            p = p + sign * contrib
        last_mag = np.where(active, mag, last_mag)
    return p, q


def _bessel_jy_asymptotic(nu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p, q = _hankel_pq(nu, x)
    omega = x - (0.5 * nu + 0.25) * math.pi
    amp = np.sqrt(2.0 / (math.pi * x))
    j = amp * (p * np.cos(omega) - q * np.sin(omega))
    y = amp * (p * np.sin(omega) + q * np.cos(omega))
    return j, y


def _bessel_j_impl(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = x < _SERIES_ASYMPTOTIC_CROSSOVER
    if small.any():
        out[small] = _bessel_j_series(nu, x[small])
    if (~small).any():
        out[~small] = _bessel_jy_asymptotic(nu, x[~small])[0]
    return out


def bessel_j(nu, x):
    """Bessel function of the first kind, fractional real order.

    Domain: x >= 0 (x > 0 when nu < 0, where J_nu diverges at the origin).
    """
    order = _as_order(nu)
    nu_f = float(order)
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise DomainError("bessel_j requires x >= 0")
    zero = xa == 0.0
    if np.any(zero) and nu_f < 0:
        raise DomainError("bessel_j diverges at x = 0 for negative order")
    out = np.zeros_like(xa)
    pos = ~zero
    if pos.any():
        out[pos] = _bessel_j_impl(nu_f, xa[pos])
    if np.any(zero):
        out[zero] = 1.0 if nu_f == 0.0 else 0.0
    return float(out[0]) if scalar else out


def bessel_y(nu, x):
    """Bessel function of the second kind, non-integer real order.

    Uses Y_nu = (J_nu cos(nu pi) - J_{-nu}) / sin(nu pi) in the series
    region and the Hankel expansion directly for large argument.
    Domain: x > 0.
    """
    order = _as_order(nu)
    if order.denominator == 1:
        raise DomainError("bessel_y implemented for non-integer orders only")
    nu_f = float(order)
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa <= 0):
        raise DomainError("bessel_y requires x > 0")
    out = np.empty_like(xa)
    small = xa < _SERIES_ASYMPTOTIC_CROSSOVER
    if small.any():
        xs = xa[small]
        jp = _bessel_j_series(nu_f, xs)
        jm = _bessel_j_series(-nu_f, xs)
        out[small] = (jp * math.cos(nu_f * math.pi) - jm) / math.sin(nu_f * math.pi)
    if (~small).any():
        out[~small] = _bessel_jy_asymptotic(nu_f, xa[~small])[1]
    return float(out[0]) if scalar else out


def _gauss_series(a: float, b: float, c: float, w: np.ndarray) -> np.ndarray:
    """Plain Gauss series sum_n (a)_n (b)_n / ((c)_n n!) w^n for |w| < ~0.7."""
    term = np.ones_like(w)
    acc = np.ones_like(w)
    for n in range(400):
        term = term * ((a + n) * (b + n)) / ((c + n) * (1.0 + n)) * w
        acc += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
            break
    return acc


# Connection coefficient Gamma(3/2)Gamma(-5/6)/Gamma(-1/3) for the |x|->inf
# expansion of 2F1(-1/3,1/2;3/2;x); the companion coefficient is exactly 3/5.
_C2 = math.gamma(1.5) * math.gamma(-5.0 / 6.0) / math.gamma(-1.0 / 3.0)


def hyp2f1_kernel(x):
    """The hypergeometric 2F1[(-1/3, 1/2), (3/2), x] for x <= 0.

    This is the fixed-parameter function appearing in the weak-turbulence
    kernel; it equals aux_integral(1, B)/1 with x = -B^2.  Three regimes:

    * x in (-1/4, 0]: direct Gauss series,
    * x in [-2, -1/4]: Pfaff transform to argument x/(x-1) in (0, 2/3],
    * x < -2: 1/x connection formula (second series terminates because one
      upper parameter becomes zero).
    """
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa > 0):
        raise DomainError("hyp2f1_kernel requires x <= 0")
    out = np.empty_like(xa)

    direct = xa > -0.25
    pfaff = (~direct) & (xa >= -2.0)
    conn = xa < -2.0

    if direct.any():
        out[direct] = _gauss_series(-1.0 / 3.0, 0.5, 1.5, xa[direct])
    if pfaff.any():
        xs = xa[pfaff]
        w = xs / (xs - 1.0)
        out[pfaff] = (1.0 - xs) ** (1.0 / 3.0) * _gauss_series(-1.0 / 3.0, 1.0, 1.5, w)
    if conn.any():
        xs = xa[conn]
        w = 1.0 / xs
        f = _gauss_series(-1.0 / 3.0, -5.0 / 6.0, 1.0 / 6.0, w)
        out[conn] = 0.6 * (-xs) ** (1.0 / 3.0) * f + _C2 / np.sqrt(-xs)
    return float(out[0]) if scalar else out


def aux_integral(A, B):
    """int_0^1 (A^2 + B^2 xi^2)^(1/3) dxi for A, B >= 0.

    Evaluated through the 2F1 closed form; the two dual hypergeometric
    representations are selected so the series argument never approaches
    the unit circle:

    * B <= A:  A^(2/3) * 2F1[(-1/3,1/2),(3/2), -B^2/A^2]
    * B > A:   (3/5) B^(2/3) * 2F1-tilde(-A^2/B^2) + C2 * A^(5/3)/B

    where 2F1-tilde is 2F1[(-1/3,-5/6),(1/6),.] evaluated via its Pfaff
    transform.  Endpoints are exact: aux(A,0) = A^(2/3), aux(0,B) =
    (3/5) B^(2/3).
    """
    Aa = np.asarray(A, dtype=np.float64)
    Ba = np.asarray(B, dtype=np.float64)
    scalar = Aa.ndim == 0 and Ba.ndim == 0
    Aa, Ba = np.atleast_1d(np.broadcast_arrays(Aa, Ba)[0].copy()), np.atleast_1d(
        np.broadcast_arrays(Aa, Ba)[1].copy()
    )
    if np.any(Aa < 0) or np.any(Ba < 0):
        raise DomainError("aux_integral requires A >= 0 and B >= 0")
    out = np.zeros(Aa.shape, dtype=np.float64)

    a_dom = (Ba <= Aa) & (Aa > 0)
    b_dom = Ba > Aa
    if a_dom.any():
        r = Ba[a_dom] / Aa[a_dom]
        out[a_dom] = Aa[a_dom] ** (2.0 / 3.0) * hyp2f1_kernel(-(r * r))
    if b_dom.any():
        r = Aa[b_dom] / Ba[b_dom]
        w = -(r * r)
        # Pfaff on 2F1(-1/3,-5/6;1/6;w): (1-w)^(1/3) 2F1(-1/3,1;1/6;w/(w-1))
        wp = w / (w - 1.0)
        f = (1.0 - w) ** (1.0 / 3.0) * _gauss_series(-1.0 / 3.0, 1.0, 1.0 / 6.0, wp)
        out[b_dom] = 0.6 * Ba[b_dom] ** (2.0 / 3.0) * f + _C2 * r ** (5.0 / 3.0) * Ba[
            b_dom
        ] ** (2.0 / 3.0)
    # A == B == 0 stays 0.
    return float(out[0]) if scalar else out
