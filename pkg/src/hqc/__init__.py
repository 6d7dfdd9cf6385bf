"""High-quality corpus curation, degradation synthesis, and routed-expert
kernels for image restoration datasets."""

from .curation import (
    REFERENCE_CORPUS,
    TAXONOMY,
    CurationPolicy,
    ImageRecord,
    analyze_record,
    apply_hard_filters,
    balance_frequency,
    balance_semantics,
    corpus_summary,
    curate,
    diversity_entropy,
    freq_band_split,
    split_benchmark,
)
from .degrade import (
    JPEG_QUALITIES,
    NOISE_SIGMAS,
    SR_SCALES,
    TASKS,
    DegradationSpec,
    RainParams,
    degrade_jpeg,
    degrade_noise,
    degrade_rain,
    degrade_sr,
    make_pair,
    pair_seed,
)
from .freq import Spectrum, cutoff_d0, dft2d, high_freq_ratio
from .image import (
    ImageFormatError,
    RasterImage,
    load_image,
    resize_bicubic,
    save_image,
    to_luma,
)
from .jpeg import JpegError
from .jpeg import decode as jpeg_decode
from .jpeg import encode as jpeg_encode
from .jpeg import quality_tables
from .kernels import BACKEND
from .metrics import bpp, psnr, psnr_y, ssim

__version__ = "0.1.0"

__all__ = [
    "__version__", "BACKEND",
    "ImageFormatError", "RasterImage", "load_image", "save_image",
    "to_luma", "resize_bicubic",
    "Spectrum", "dft2d", "cutoff_d0", "high_freq_ratio",
    "bpp", "psnr", "psnr_y", "ssim",
    "JpegError", "jpeg_encode", "jpeg_decode", "quality_tables",
    "DegradationSpec", "RainParams", "TASKS", "SR_SCALES", "NOISE_SIGMAS",
    "JPEG_QUALITIES", "degrade_sr", "degrade_noise", "degrade_jpeg",
    "degrade_rain", "make_pair", "pair_seed",
    "ImageRecord", "CurationPolicy", "TAXONOMY", "REFERENCE_CORPUS",
    "analyze_record", "apply_hard_filters", "balance_frequency",
    "balance_semantics", "curate", "corpus_summary", "diversity_entropy",
    "freq_band_split", "split_benchmark",
]
