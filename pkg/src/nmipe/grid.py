"""Complex-valued sampled states on uniform 2-D grids.

A :class:`GridState` stores samples at coordinates origin + index*spacing
(index = 0..n-1 per axis) together with a domain tag that distinguishes
position-domain from spatial-frequency-domain data.  The Fourier pipelines
assume the usual cyclic-DFT pairing: a frequency grid of n samples at
spacing h is dual to position samples at spacing 1/(n h).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridGeometryError

__all__ = ["GridState", "centered_grid", "dual_coords"]

_TAGS = ("position", "frequency")


@dataclass
class GridState:
    samples: np.ndarray  # complex, shape (nx, ny)
    origin: np.ndarray  # (2,)
    spacing: np.ndarray  # (2,), > 0
    domain_tag: str

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(2)
        self.spacing = np.asarray(self.spacing, dtype=np.float64).reshape(2)
        if self.samples.ndim != 2:
            raise GridGeometryError("samples must be a 2-D array")
        if np.any(self.spacing <= 0):
            raise GridGeometryError("spacing must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise GridGeometryError("samples must be finite")
        if self.domain_tag not in _TAGS:
            raise GridGeometryError(f"domain_tag must be one of {_TAGS}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape

    def axis_coords(self, axis: int) -> np.ndarray:
        n = self.samples.shape[axis]
        return self.origin[axis] + self.spacing[axis] * np.arange(n)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (indexing='ij') of the sample coordinates."""
        return np.meshgrid(self.axis_coords(0), self.axis_coords(1), indexing="ij")

    def with_samples(self, samples: np.ndarray) -> "GridState":
        return GridState(samples, self.origin.copy(), self.spacing.copy(), self.domain_tag)


def centered_grid(n: int, spacing: float, domain_tag: str) -> "GridState":
    """Zero-filled n x n grid symmetric about the origin."""
    origin = np.array([-(n // 2) * spacing, -(n // 2) * spacing])
    return GridState(
        np.zeros((n, n), dtype=np.complex128),
        origin,
        np.array([spacing, spacing]),
        domain_tag,
    )


def dual_coords(grid: GridState) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate-domain coordinates of the cyclic DFT of ``grid``.

    Returned in numpy fft (wrapped) ordering: axis frequencies
    fftfreq(n, d=spacing).
    """
    nx, ny = grid.shape
    fx = np.fft.fftfreq(nx, d=grid.spacing[0])
    fy = np.fft.fftfreq(ny, d=grid.spacing[1])
    return np.meshgrid(fx, fy, indexing="ij")
