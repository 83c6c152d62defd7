"""Kolmogorov turbulence spectra, structure functions and normalization.

The refractive-index power spectral density follows the Kolmogorov form

    Phi_n(K) = 0.033 (2 pi)^3 Cn2 |K|^(-11/3)

with K = 2 pi A the propagation-vector magnitude, and the structure
function D_n(dX) = Cn2 |dX|^(2/3).  The marginal spectrum Phi_1 is the
z-frequency integral of Phi_n and has the closed form

    Phi_1(a) = 0.033 (2 pi)^(-2/3) Cn2 |a|^(-8/3) sqrt(pi) G(4/3)/G(11/6),

which the tests validate against direct quadrature.  The finite spectral
combination Q(x) = (1/2) Cn2 |x|^(2/3) is exposed instead of the divergent
total power integral of Phi_1.

Units are SI throughout: Cn2 in m^(-2/3), lengths in m, spatial
frequencies in 1/m.  Dimensionless quantities live in NormalizedParams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "TurbulenceParams",
    "NormalizedParams",
    "phi_n",
    "phi_1",
    "d_n",
    "q_fn",
    "phase_psd_markov",
    "normalize",
    "PHI1_COEFF",
]

# Phi_1(a) = PHI1_COEFF * Cn2 * |a|^(-8/3); the Gamma-function ratio comes
# from integrating (|a|^2 + c^2)^(-11/6) over the axial frequency c.
PHI1_COEFF = (
    0.033
    * (2.0 * math.pi) ** (-2.0 / 3.0)
    * math.sqrt(math.pi)
    * math.gamma(4.0 / 3.0)
    / math.gamma(11.0 / 6.0)
)


@dataclass(frozen=True)
class TurbulenceParams:
    """Physical scenario: structure constant, wavelength, beam waist."""

    cn2: float  # refractive-index structure constant, m^(-2/3)
    wavelength: float  # optical wavelength, m
    w0: float  # beam waist radius, m

    def __post_init__(self):
        if self.cn2 < 0:
            raise DomainError("cn2 must be >= 0")
        if self.wavelength <= 0:
            raise DomainError("wavelength must be > 0")
        if self.w0 <= 0:
            raise DomainError("w0 must be > 0")

    @property
    def k(self) -> float:
        """Wavenumber 2 pi / lambda."""
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class NormalizedParams:
    """Dimensionless scenario parameters.

    t       normalized propagation distance, lambda z / (pi w0^2)
    turb_T  normalized turbulence strength, Cn2 w0^(2/3)
    theta   Gaussian beam divergence angle, lambda / (pi w0)
    g       coupling constant, 4 turb_T / theta^4
    beta    modified-solution constant 3 pi sqrt(Cn2) / (2 lambda^2), m^(-7/3)
    k       wavenumber, 1/m
    """

    t: float
    turb_T: float
    theta: float
    g: float
    beta: float
    k: float


def phi_n(k_vec_mag, cn2: float):
    """Kolmogorov refractive-index power spectral density at |K| > 0."""
    k_vec_mag = np.asarray(k_vec_mag, dtype=np.float64)
    if np.any(k_vec_mag <= 0):
        raise DomainError("phi_n has a non-integrable pole at |K| = 0")
    return 0.033 * (2.0 * math.pi) ** 3 * cn2 * k_vec_mag ** (-11.0 / 3.0)


def phi_1(a_mag, cn2: float):
    """Marginal spectrum: integral of phi_n(2 pi (a, c)) over c, |a| > 0."""
    a_mag = np.asarray(a_mag, dtype=np.float64)
    if np.any(a_mag <= 0):
        raise DomainError("phi_1 has a non-integrable pole at |a| = 0")
    return PHI1_COEFF * cn2 * a_mag ** (-8.0 / 3.0)


def d_n(delta_mag, cn2: float):
    """Refractive-index structure function Cn2 |dX|^(2/3)."""
    delta_mag = np.asarray(delta_mag, dtype=np.float64)
    if np.any(delta_mag < 0):
        raise DomainError("separation must be >= 0")
    return cn2 * delta_mag ** (2.0 / 3.0)


def q_fn(x_vec, cn2: float) -> float:
    """The finite spectral combination Q(x) = (1/2) Cn2 |x|^(2/3).

    Q is the bracketed integral of Phi_1 against 1 - exp(-i 2 pi x.u);
    the subtraction renders it finite despite the infrared pole of Phi_1.
    """
    x = np.asarray(x_vec, dtype=np.float64)
    r = float(np.sqrt(np.dot(x, x)))
    return 0.5 * cn2 * r ** (2.0 / 3.0)


def phase_psd_markov(a_mag: float, z: float, params: TurbulenceParams) -> float:
    """Markov-limit phase power spectral density z k^2 Phi_n(2 pi a).

    Provided for comparison with the delta-correlated treatment; the rest
    of the package never uses it.
    """
    if z < 0:
        raise DomainError("z must be >= 0")
    if z == 0.0:
        # Avoid the phi_n pole check when the prefactor is already zero.
        if a_mag <= 0:
            raise DomainError("phase_psd_markov requires |a| > 0")
        return 0.0
    return float(z * params.k**2 * phi_n(2.0 * math.pi * a_mag, params.cn2))


def normalize(params: TurbulenceParams, z: float = 0.0) -> NormalizedParams:
    """Dimensionless parameters for a scenario at propagation distance z."""
    if z < 0:
        raise DomainError("z must be >= 0")
    lam, w0 = params.wavelength, params.w0
    t = lam * z / (math.pi * w0**2)
    turb_t = params.cn2 * w0 ** (2.0 / 3.0)
    theta = lam / (math.pi * w0)
    g = 4.0 * turb_t / theta**4
    beta = 3.0 * math.pi * math.sqrt(params.cn2) / (2.0 * lam**2)
    return NormalizedParams(t=t, turb_T=turb_t, theta=theta, g=g, beta=beta, k=params.k)
