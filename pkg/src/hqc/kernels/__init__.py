"""Kernel backend selection.

The Cython extension is preferred when built; HQC_PURE=1 (or a missing
build) selects the numpy/pure-Python fallback. Both expose the same three
functions with identical semantics.
"""

import importlib
import os

from . import fallback

_native = None
if not os.environ.get("HQC_PURE"):
    try:
        _native = importlib.import_module("._native", __name__)
    except ImportError:
        _native = None

_impl = _native if _native is not None else fallback

BACKEND = "native" if _impl is not fallback else "fallback"

resize_pass = _impl.resize_pass
huff_encode_scan = _impl.huff_encode_scan
huff_decode_scan = _impl.huff_decode_scan


def backends():
    """Every available backend module, keyed by name (for benchmarks/tests)."""
    out = {"fallback": fallback}
    if _native is not None:
        out["native"] = _native
    return out
