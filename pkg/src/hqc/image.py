"""8-bit raster images: file I/O, colour planes and bicubic resampling.

Images are numpy uint8 arrays, (H, W) for grayscale or (H, W, 3) for RGB,
wrapped in RasterImage together with the on-disk byte size (needed for
bits-per-pixel statistics). Analysis code works on float64 planes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as _PIL

from .kernels import resize_pass


class ImageFormatError(ValueError):
    """File could not be loaded: wrong container, bit depth or corrupt data."""


@dataclass
class RasterImage:
    data: np.ndarray                    # (H, W) or (H, W, 3) uint8
    encoded_bytes: int | None = None    # source file size, when known

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {a.dtype}")
        if a.ndim == 3 and a.shape[2] == 1:
            a = a[:, :, 0]
        if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) samples, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("empty image")
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3


def load_image(path) -> RasterImage:
    """Load a PNG or baseline JPEG file as 8-bit gray or RGB.

    Palette/alpha images are flattened to RGB; 16-bit and float inputs are
    refused (this toolkit is 8-bit end to end). Raises ImageFormatError for
    anything unreadable.
    """
    try:
        with _PIL.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise ImageFormatError(f"{path}: unsupported format {im.format!r}")
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N", "F"):
                raise ImageFormatError(f"{path}: unsupported bit depth (mode {im.mode})")
            if im.mode != "L":
                im = im.convert("RGB")
            data = np.asarray(im, np.uint8)
    except ImageFormatError:
        raise
    except Exception as e:  # Pillow raises a zoo of types for corrupt files
        raise ImageFormatError(f"{path}: {e}") from e
    return RasterImage(data, encoded_bytes=os.path.getsize(path))


def save_image(img: RasterImage, path) -> None:
    """Write as PNG (the only lossless format we emit; reruns are byte-stable)."""
    path = os.fspath(path)
    if not path.lower().endswith(".png"):
        raise ValueError(f"save_image writes PNG only, got {path!r}")
    _PIL.fromarray(img.data).save(path, "PNG")


def to_luma(img) -> np.ndarray:
    """Full-range BT.601 luma plane (float64): 0.299 R + 0.587 G + 0.114 B.

    Grayscale images pass through as float64. This is the plane all spectral
    statistics are computed on.
    """
    a = img.data if isinstance(img, RasterImage) else np.asarray(img)
    if a.ndim == 2:
        return a.astype(np.float64)
    a = a.astype(np.float64)
    return 0.299 * a[:, :, 0] + 0.587 * a[:, :, 1] + 0.114 * a[:, :, 2]


def to_ycbcr_y_studio(img) -> np.ndarray:
    """Studio-swing BT.601 luma: 16 + (65.481 R + 128.553 G + 24.966 B) / 255.

    Computed as (65481 R + 128553 G + 24966 B) / 255000 + 16: the products are
    exact integers in float64, so pixels whose real-valued luma coincides get
    bitwise-equal results (a luma-identical pair must yield MSE exactly 0).
    """
    a = img.data if isinstance(img, RasterImage) else np.asarray(img)
    if a.ndim != 3:
        raise ValueError("studio luma needs a 3-channel image")
    a = a.astype(np.float64)
    return (65481.0 * a[:, :, 0] + 128553.0 * a[:, :, 1] + 24966.0 * a[:, :, 2]) / 255000.0 + 16.0


# --------- bicubic resampling ---------

def _keys_kernel(x):
    # cubic convolution, a = -0.5
    x = np.abs(x)
    return np.where(
        x <= 1.0,
        (1.5 * x - 2.5) * x * x + 1.0,
        np.where(x < 2.0, ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0, 0.0),
    )


def _cubic_taps(n_in, n_out, antialias):
    """Tap indices and normalized weights for one separable resampling pass.

    Pixel centers align via (i + 0.5)/scale - 0.5. When antialiasing a
    downscale, the kernel is stretched by in/out so it acts as a low-pass
    filter. Out-of-range taps clamp to the edge (replicate padding).
    """
    scale = n_out / n_in
    fscale = max(1.0, 1.0 / scale) if antialias else 1.0
    support = 2.0 * fscale
    centers = (np.arange(n_out, dtype=np.float64) + 0.5) / scale - 0.5
    first = np.ceil(centers - support).astype(np.int64)
    ntaps = int(2 * support) + 1
    offsets = np.arange(ntaps, dtype=np.int64)
    taps = first[:, None] + offsets[None, :]
    w = _keys_kernel((taps - centers[:, None]) / fscale)
    w /= w.sum(axis=1, keepdims=True)
    idx = np.clip(taps, 0, n_in - 1)
    return np.ascontiguousarray(idx), np.ascontiguousarray(w)


def _resize_plane(plane, out_w, out_h, antialias):
    src = np.ascontiguousarray(plane, np.float64)
    if out_h != src.shape[0]:
        idx, w = _cubic_taps(src.shape[0], out_h, antialias)
        src = resize_pass(src, idx, w)
    if out_w != src.shape[1]:
        idx, w = _cubic_taps(src.shape[1], out_w, antialias)
        src = resize_pass(np.ascontiguousarray(src.T), idx, w).T
    return np.ascontiguousarray(src)


def resize_bicubic(img, out_w: int, out_h: int, antialias: bool = True):
    """Separable cubic-convolution resize (a = -0.5).

    With antialias=True (the default) downscales widen the kernel by the
    inverse scale; upscales are plain interpolation either way. RasterImage
    input returns a RasterImage (values clamped to [0, 255] and rounded);
    float plane input returns a float64 plane, unclamped.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"bad output size {out_w}x{out_h}")
    if isinstance(img, RasterImage):
        a = img.data.astype(np.float64)
        if a.ndim == 2:
            out = _resize_plane(a, out_w, out_h, antialias)
        else:
            out = np.stack(
                [_resize_plane(a[:, :, c], out_w, out_h, antialias) for c in range(3)],
                axis=2,
            )
        return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))
    plane = np.asarray(img, np.float64)
    if plane.ndim != 2:
        raise ValueError("float input must be a 2-D plane")
    return _resize_plane(plane, out_w, out_h, antialias)
