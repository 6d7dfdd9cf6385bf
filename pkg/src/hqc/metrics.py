"""Reference quality metrics: PSNR, PSNR on studio luma, SSIM, bits/pixel."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import RasterImage, to_luma, to_ycbcr_y_studio

_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2


def bpp(width: int, height: int, encoded_bytes: int) -> float:
    """Compression rate in bits per pixel: 8 * bytes / (W * H)."""
    if width < 1 or height < 1:
        raise ValueError("empty image")
    if encoded_bytes < 0:
        raise ValueError("negative byte size")
    return 8.0 * encoded_bytes / (width * height)


def _as_samples(x) -> np.ndarray:
    a = x.data if isinstance(x, RasterImage) else np.asarray(x)
    return a.astype(np.float64)


def psnr(a, b) -> float:
    """Peak SNR over all samples jointly, peak 255. Identical inputs -> inf."""
    xa, xb = _as_samples(a), _as_samples(b)
    if xa.shape != xb.shape:
        raise ValueError(f"shape mismatch {xa.shape} vs {xb.shape}")
    err = float(np.mean((xa - xb) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / err)


def psnr_y(a, b) -> float:
    """PSNR on the studio-swing luma plane of two RGB images (peak 255)."""
    ya = to_ycbcr_y_studio(a)
    yb = to_ycbcr_y_studio(b)
    if ya.shape != yb.shape:
        raise ValueError(f"shape mismatch {ya.shape} vs {yb.shape}")
    err = float(np.mean((ya - yb) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / err)


def _gauss_window(n=11, sigma=1.5):
    g = np.exp(-0.5 * ((np.arange(n) - (n - 1) / 2.0) / sigma) ** 2)
    return g / g.sum()


def _local_mean(x, g):
    # separable valid-mode correlation
    t = sliding_window_view(x, len(g), axis=0) @ g
    return sliding_window_view(t, len(g), axis=1) @ g


def ssim(a, b, shave: int = 0) -> float:
    """Mean SSIM, 11x11 Gaussian window (sigma 1.5), valid windows only.

    Inputs are float planes or images; 3-channel images are compared on the
    full-range luma plane. `shave` crops that many border pixels first.
    """
    xa, xb = _as_samples(a), _as_samples(b)
    if xa.ndim == 3:
        xa, xb = to_luma(a), to_luma(b)
    if xa.shape != xb.shape:
        raise ValueError(f"shape mismatch {xa.shape} vs {xb.shape}")
    if xa.ndim != 2:
        raise ValueError("ssim expects planes or 3-channel images")
    if shave:
        if shave < 0 or 2 * shave >= min(xa.shape):
            raise ValueError(f"bad shave {shave} for shape {xa.shape}")
        xa = xa[shave:-shave, shave:-shave]
        xb = xb[shave:-shave, shave:-shave]
    if min(xa.shape) < 11:
        raise ValueError("image smaller than the 11x11 SSIM window")

    g = _gauss_window()
    mu1 = _local_mean(xa, g)
    mu2 = _local_mean(xb, g)
    s11 = _local_mean(xa * xa, g) - mu1 * mu1
    s22 = _local_mean(xb * xb, g) - mu2 * mu2
    s12 = _local_mean(xa * xb, g) - mu1 * mu2
    num = (2.0 * mu1 * mu2 + _SSIM_C1) * (2.0 * s12 + _SSIM_C2)
    den = (mu1 * mu1 + mu2 * mu2 + _SSIM_C1) * (s11 + s22 + _SSIM_C2)
    return float(np.mean(num / den))
