import math

import numpy as np
import pytest
from PIL import Image
import io

from hqc import jpeg
from hqc.image import RasterImage
from hqc.kernels import backends
from hqc.metrics import psnr

# ITU T.81 Annex K base quantization tables, transcribed here by hand so the
# package constants are checked against an independent copy.
ANNEX_K_LUMA = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
]).reshape(8, 8)

ANNEX_K_CHROMA = np.array([
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
]).reshape(8, 8)


def test_quality_50_is_annex_k():
    qy, qc = jpeg.quality_tables(50)
    assert np.array_equal(qy, ANNEX_K_LUMA)
    assert np.array_equal(qc, ANNEX_K_CHROMA)


def test_quality_scaling_spot_values():
    # q=10: scale 500 -> floor(16*5 + 0.5) = 80
    qy, _ = jpeg.quality_tables(10)
    assert qy[0, 0] == 80
    # q=90: scale 20 -> floor(16*0.2 + 0.5) = 3
    qy, _ = jpeg.quality_tables(90)
    assert qy[0, 0] == 3
    # q=100: scale 0 -> everything clamps to 1
    qy, qc = jpeg.quality_tables(100)
    assert (qy == 1).all() and (qc == 1).all()
    with pytest.raises(ValueError):
        jpeg.quality_tables(0)
    with pytest.raises(ValueError):
        jpeg.quality_tables(101)


def predicted_constant(c, quality):
    """Exact decode prediction for a constant-c image.

    Gray c has zero chroma, so only the luma DC survives: the orthonormal
    DCT of a constant 8x8 block is 8*(c-128) at DC, quantized with rint and
    reconstructed as rint(q*Q00/8 + 128), clipped.
    """
    q00 = int(jpeg.quality_tables(quality)[0][0, 0])
    qdc = np.rint(8.0 * (c - 128.0) / q00)
    val = np.rint(qdc * q00 / 8.0 + 128.0)
    return int(np.clip(val, 0, 255))


@pytest.mark.parametrize("c", [0, 64, 128, 200, 255])
@pytest.mark.parametrize("quality", [10, 30, 50, 75, 95])
def test_constant_image_decodes_to_predicted_value(c, quality):
    img = np.full((32, 32, 3), c, np.uint8)
    out = jpeg.decode(jpeg.encode(RasterImage(img), quality))
    assert out.shape == img.shape
    assert out.min() == out.max() == predicted_constant(c, quality)


def test_mid_gray_survives_every_quality():
    img = np.full((16, 16, 3), 128, np.uint8)
    for q in range(1, 101):
        out = jpeg.decode(jpeg.encode(RasterImage(img), q))
        assert out.min() == out.max() == 128


def test_roundtrip_psnr_monotone_nondecreasing(small_rgb):
    vals = []
    for q in (10, 20, 30, 40, 75, 95):
        out = jpeg.decode(jpeg.encode(small_rgb, q))
        vals.append(psnr(RasterImage(out), small_rgb))
    assert all(b >= a for a, b in zip(vals, vals[1:])), vals
    assert vals[-1] > 30.0


def test_odd_sizes_roundtrip(rng):
    img = rng.integers(0, 256, (17, 13, 3), np.uint8)
    for q in (40, 92):     # 4:2:0 and 4:4:4 paths
        out = jpeg.decode(jpeg.encode(RasterImage(img), q))
        assert out.shape == img.shape


def test_gray_roundtrip(rng):
    img = np.clip(rng.normal(128, 30, (24, 24)), 0, 255).astype(np.uint8)
    out = jpeg.decode(jpeg.encode(RasterImage(img), 85))
    assert out.shape == img.shape
    assert psnr(RasterImage(out), RasterImage(img)) > 30.0


def test_encode_is_deterministic(small_rgb):
    assert jpeg.encode(small_rgb, 35) == jpeg.encode(small_rgb, 35)


# --------- interchange with an independent codec ---------

def test_pillow_decodes_our_stream(small_rgb):
    data = jpeg.encode(small_rgb, 75)
    theirs = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
    ours = jpeg.decode(data)
    assert theirs.shape == ours.shape
    assert psnr(RasterImage(theirs), RasterImage(ours)) > 40.0


def test_we_decode_pillow_stream(small_rgb):
    buf = io.BytesIO()
    Image.fromarray(small_rgb.data).save(buf, "JPEG", quality=75)
    data = buf.getvalue()
    theirs = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
    ours = jpeg.decode(data)
    assert theirs.shape == ours.shape
    assert psnr(RasterImage(theirs), RasterImage(ours)) > 40.0


# --------- stream structure and errors ---------

def _segments(data):
    """(marker, payload_length) list up to SOS."""
    assert data[:2] == b"\xff\xd8"
    pos = 2
    segs = []
    while pos < len(data):
        assert data[pos] == 0xFF
        marker = data[pos + 1]
        if marker == 0xD9:
            segs.append((marker, 0))
            break
        ln = int.from_bytes(data[pos + 2:pos + 4], "big")
        segs.append((marker, ln))
        if marker == 0xDA:
            break
        pos += 2 + ln
    return segs


def test_stream_structure(small_rgb):
    data = jpeg.encode(small_rgb, 35)
    assert data[:2] == b"\xff\xd8" and data[-2:] == b"\xff\xd9"
    segs = _segments(data)
    markers = [m for m, _ in segs]
    assert markers[0] == 0xE0 and data[6:11] == b"JFIF\x00"
    assert markers.count(0xDB) >= 1      # quantization tables
    assert 0xC0 in markers               # baseline frame header
    assert markers.count(0xC4) >= 1      # Huffman tables
    assert markers[-1] == 0xDA


def test_gray_stream_has_one_component(rng):
    img = np.full((8, 8), 90, np.uint8)
    data = jpeg.encode(RasterImage(img), 50)
    segs = _segments(data)
    sof_at = data.index(b"\xff\xc0")
    assert data[sof_at + 9] == 1         # component count byte of SOF0


def test_decode_rejects_garbage():
    with pytest.raises(jpeg.JpegError):
        jpeg.decode(b"not a jpeg at all")
    with pytest.raises(jpeg.JpegError):
        jpeg.decode(b"\xff\xd8\xff\xd9")     # no frame at all


def test_decode_rejects_truncated_scan(small_rgb):
    data = jpeg.encode(small_rgb, 60)
    with pytest.raises(jpeg.JpegError):
        jpeg.decode(data[:len(data) // 2])


def test_decode_rejects_progressive():
    # SOI + minimal SOF2 header: progressive is out of scope
    sof2 = b"\xff\xc2" + (11).to_bytes(2, "big") + bytes([8, 0, 8, 0, 8, 1, 1, 0x11, 0])
    with pytest.raises(jpeg.JpegError):
        jpeg.decode(b"\xff\xd8" + sof2 + b"\xff\xd9")


# --------- backend equivalence ---------

def test_backends_produce_identical_bytes(small_rgb, monkeypatch):
    impls = backends()
    if len(impls) < 2:
        pytest.skip("only one kernel backend available")
    streams = {}
    for name, mod in impls.items():
        monkeypatch.setattr(jpeg, "huff_encode_scan", mod.huff_encode_scan)
        streams[name] = jpeg.encode(small_rgb, 45)
    assert streams["native"] == streams["fallback"]


def test_backends_decode_identically(small_rgb, monkeypatch):
    impls = backends()
    if len(impls) < 2:
        pytest.skip("only one kernel backend available")
    data = jpeg.encode(small_rgb, 45)
    outs = {}
    for name, mod in impls.items():
        monkeypatch.setattr(jpeg, "huff_decode_scan", mod.huff_decode_scan)
        outs[name] = jpeg.decode(data)
    assert np.array_equal(outs["native"], outs["fallback"])
