"""Spectral texture statistics.

The high-frequency ratio of a plane is the share of spectral power that an
ideal high-pass filter keeps, with the cutoff at half the distance from the
spectrum center to its corner. Flat images score 0, pure noise close to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Spectrum:
    """Centered 2-D DFT, scaled by 1/(H*W); DC sits at (H//2, W//2)."""

    coeffs: np.ndarray  # (H, W) complex128

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    def power(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2


def dft2d(plane) -> Spectrum:
    p = np.asarray(plane, np.float64)
    if p.ndim != 2 or p.size == 0:
        raise ValueError("dft2d expects a non-empty 2-D plane")
    h, w = p.shape
    return Spectrum(np.fft.fftshift(np.fft.fft2(p)) / (h * w))


def cutoff_d0(width: int, height: int) -> float:
    """High-pass cutoff radius: half the center-to-corner distance."""
    return 0.5 * math.hypot(height / 2.0, width / 2.0)


def _radius_grid(height, width):
    u = np.arange(height, dtype=np.float64)[:, None] - height / 2.0
    v = np.arange(width, dtype=np.float64)[None, :] - width / 2.0
    return np.hypot(u, v)


def high_freq_ratio(plane) -> float:
    """Fraction of spectral power strictly beyond the cutoff radius.

    Invariant under per-pixel scaling; raises on an all-zero plane (the
    ratio is 0/0 there).
    """
    spec = dft2d(plane)
    p = spec.power()
    total = p.sum()
    if total == 0.0:
        raise ValueError("all-zero plane has no defined high-frequency ratio")
    d = _radius_grid(spec.height, spec.width)
    high = p[d > cutoff_d0(spec.width, spec.height)].sum()
    return float(high / total)
