"""Degradation synthesis for restoration training pairs.

Four task families, each with a small set of standard severity levels:
super-resolution (bicubic downscale x2/x3/x4), additive white Gaussian
noise (sigma 15/25/50), JPEG compression through the in-repo codec
(quality 10/20/30/40) and synthetic rain streaks. Pass extended=True on a
DegradationSpec to run levels outside the standard sets.

Everything is seeded and reproducible; the per-image seed for a corpus run
derives from (global seed, task, level, image id) so adding or removing
images never shifts anybody else's noise.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import jpeg
from .image import RasterImage, resize_bicubic

SR_SCALES = (2, 3, 4)
NOISE_SIGMAS = (15, 25, 50)
JPEG_QUALITIES = (10, 20, 30, 40)
TASKS = ("sr", "denoise", "dejpeg", "derain")


@dataclass(frozen=True)
class RainParams:
    density: float = 0.05     # fraction of seed pixels that start a streak
    angle: float = 75.0       # streak direction, degrees from horizontal
    streak_length: int = 21   # motion-blur extent in pixels
    intensity: float = 0.8    # brightness scale of the streak layer

    def __post_init__(self):
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must be in [0, 1], got {self.density}")
        if self.streak_length < 1:
            raise ValueError(f"streak_length must be >= 1, got {self.streak_length}")
        if not 0.0 < self.intensity <= 1.0:
            raise ValueError(f"intensity must be in (0, 1], got {self.intensity}")

    def label(self) -> str:
        return f"d{self.density:g}_a{self.angle:g}_l{self.streak_length}_i{self.intensity:g}"


@dataclass(frozen=True)
class DegradationSpec:
    task: str
    level: object = None      # int scale / sigma / quality, or RainParams
    seed: int = 0
    extended: bool = False    # allow levels outside the standard sets

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        if self.task == "derain":
            lv = self.level if self.level is not None else RainParams()
            if isinstance(lv, dict):
                lv = RainParams(**lv)
            if not isinstance(lv, RainParams):
                raise ValueError(f"derain level must be RainParams, got {type(lv).__name__}")
            object.__setattr__(self, "level", lv)
            return
        if not isinstance(self.level, (int, np.integer)) or isinstance(self.level, bool):
            raise ValueError(f"{self.task} level must be an integer, got {self.level!r}")
        lv = int(self.level)
        standard = {"sr": SR_SCALES, "denoise": NOISE_SIGMAS, "dejpeg": JPEG_QUALITIES}[self.task]
        if not self.extended and lv not in standard:
            raise ValueError(
                f"{self.task} level {lv} not in the standard set {standard} "
                f"(pass extended=True to override)")
        if self.task == "sr" and lv < 2:
            raise ValueError(f"sr scale must be >= 2, got {lv}")
        if self.task == "denoise" and lv <= 0:
            raise ValueError(f"noise sigma must be positive, got {lv}")
        if self.task == "dejpeg" and not 1 <= lv <= 100:
            raise ValueError(f"jpeg quality must be 1..100, got {lv}")
        object.__setattr__(self, "level", lv)

    def level_label(self) -> str:
        if self.task == "sr":
            return f"x{self.level}"
        if self.task == "denoise":
            return f"sigma{self.level}"
        if self.task == "dejpeg":
            return f"q{self.level}"
        return self.level.label()


def degrade_sr(img: RasterImage, scale: int) -> RasterImage:
    """Bicubic downscale to (W//s, H//s) with antialias pre-filtering."""
    if img.width < scale or img.height < scale:
        raise ValueError(f"image {img.width}x{img.height} too small for x{scale}")
    return resize_bicubic(img, img.width // scale, img.height // scale, antialias=True)


def degrade_noise(img: RasterImage, sigma: float, seed: int) -> RasterImage:
    """Additive white Gaussian noise, rounded and clamped back to 8 bits."""
    rng = np.random.default_rng(seed)
    noisy = img.data.astype(np.float64) + rng.normal(0.0, sigma, img.data.shape)
    return RasterImage(np.clip(np.rint(noisy), 0, 255).astype(np.uint8))


def degrade_jpeg(img: RasterImage, quality: int) -> RasterImage:
    """Round trip through the in-repo baseline JPEG codec."""
    return RasterImage(jpeg.decode(jpeg.encode(img, quality)))


def _motion_taps(length: int, angle_deg: float):
    """Integer (dy, dx) offsets of a centered line, equal weights."""
    if length == 1:
        return [(0, 0, 1.0)]
    theta = math.radians(angle_deg)
    half = (length - 1) / 2.0
    pts = set()
    for t in np.linspace(-half, half, length):
        pts.add((int(round(-t * math.sin(theta))), int(round(t * math.cos(theta)))))
    w = 1.0 / len(pts)
    return [(dy, dx, w) for dy, dx in sorted(pts)]


def _shift_add(acc, src, dy, dx, w):
    h, w_ = src.shape
    ys = slice(max(dy, 0), min(h + dy, h))
    xs = slice(max(dx, 0), min(w_ + dx, w_))
    yo = slice(max(-dy, 0), min(h - dy, h))
    xo = slice(max(-dx, 0), min(w_ - dx, w_))
    acc[ys, xs] += w * src[yo, xo]


def degrade_rain(img: RasterImage, params: RainParams, seed: int) -> RasterImage:
    """Additive rain streaks: thresholded uniform seeds, motion-blurred.

    The streak layer is nonnegative, so the output mean never drops below
    the input mean; density 0 is an exact no-op.
    """
    rng = np.random.default_rng(seed)
    u = rng.random((img.height, img.width))
    seeds = (u > 1.0 - params.density).astype(np.float64)
    layer = np.zeros_like(seeds)
    for dy, dx, w in _motion_taps(params.streak_length, params.angle):
        _shift_add(layer, seeds, dy, dx, w)
    layer *= params.intensity * 255.0
    if img.channels == 3:
        layer = layer[:, :, None]
    out = img.data.astype(np.float64) + layer
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def make_pair(img: RasterImage, spec: DegradationSpec):
    """Build (degraded, target). Target is the pristine input for every task;
    for super-resolution the degraded side is smaller by the scale factor."""
    if spec.task == "sr":
        return degrade_sr(img, spec.level), img
    if spec.task == "denoise":
        return degrade_noise(img, float(spec.level), spec.seed), img
    if spec.task == "dejpeg":
        return degrade_jpeg(img, spec.level), img
    return degrade_rain(img, spec.level, spec.seed), img


def pair_seed(global_seed: int, task: str, level_label: str, image_id: str) -> int:
    """Stable per-image seed; independent of traversal order and worker count."""
    h = hashlib.blake2b(f"{global_seed}|{task}|{level_label}|{image_id}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")
