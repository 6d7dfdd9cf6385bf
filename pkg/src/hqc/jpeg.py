"""Baseline JPEG encoder/decoder (8-bit, Huffman, 4:2:0 or 4:4:4).

Small in-repo codec so the compression degradation is bit-reproducible and
its quantization behaviour is pinned: quality q maps to a table scale of
5000/q below 50 and 200-2q at or above, applied to the standard base tables
(round half up, clamped to [1, 255]). q=50 therefore encodes with the base
tables exactly. Chroma is subsampled 4:2:0 below q=90, kept 4:4:4 above.

The entropy coder lives in hqc.kernels (native or fallback, byte-identical).
"""

from __future__ import annotations

import struct

import numpy as np

from .image import RasterImage
from .kernels import huff_decode_scan, huff_encode_scan


class JpegError(ValueError):
    """Malformed or unsupported JPEG data."""


# --------- standard tables ---------

BASE_LUMA_QT = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
], np.int32).reshape(8, 8)

BASE_CHROMA_QT = np.array([
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
], np.int32).reshape(8, 8)

# zigzag slot of each natural position; ZZ_ORDER inverts it
_ZIGZAG_SLOT = np.array([
    0, 1, 5, 6, 14, 15, 27, 28,
    2, 4, 7, 13, 16, 26, 29, 42,
    3, 8, 12, 17, 25, 30, 41, 43,
    9, 11, 18, 24, 31, 40, 44, 53,
    10, 19, 23, 32, 39, 45, 52, 54,
    20, 22, 33, 38, 46, 51, 55, 60,
    21, 34, 37, 47, 50, 56, 59, 61,
    35, 36, 48, 49, 57, 58, 62, 63,
])
ZZ_ORDER = np.argsort(_ZIGZAG_SLOT)  # zigzag slot -> natural index

_DC_LUMA = (
    (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_DC_CHROMA = (
    (0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_AC_LUMA = (
    (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D),
    (0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
     0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
     0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
     0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
     0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
     0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
     0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
     0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
     0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
     0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
     0xF9, 0xFA),
)
_AC_CHROMA = (
    (0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77),
    (0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
     0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
     0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
     0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
     0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
     0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
     0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
     0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
     0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
     0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
     0xF9, 0xFA),
)


def quality_scale(quality: int) -> float:
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be 1..100, got {quality}")
    return 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality


def quality_tables(quality: int):
    """Scaled (luma, chroma) quantization tables, natural order, int32."""
    s = quality_scale(quality)

    def scaled(base):
        return np.clip(np.floor(base * s / 100.0 + 0.5), 1, 255).astype(np.int32)

    return scaled(BASE_LUMA_QT), scaled(BASE_CHROMA_QT)


# --------- DCT / color ---------

def _dct_matrix():
    x = np.arange(8, dtype=np.float64)
    m = np.cos((2.0 * x[None, :] + 1.0) * x[:, None] * np.pi / 16.0) * 0.5
    m[0, :] = np.sqrt(1.0 / 8.0)
    return m


_DCT_M = _dct_matrix()


def _rgb_to_ycc(a):
    r, g, b = a[:, :, 0], a[:, :, 1], a[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 + (b - y) * (0.5 / (1.0 - 0.114))
    cr = 128.0 + (r - y) * (0.5 / (1.0 - 0.299))
    return y, cb, cr


def _ycc_to_rgb(y, cb, cr):
    r = y + (2.0 - 2.0 * 0.299) * (cr - 128.0)
    b = y + (2.0 - 2.0 * 0.114) * (cb - 128.0)
    g = (y - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([r, g, b], axis=2)


def _pad_to(plane, mult):
    h, w = plane.shape
    ph = (mult - h % mult) % mult
    pw = (mult - w % mult) % mult
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _box2(p):
    if p.shape[0] % 2 or p.shape[1] % 2:
        p = _pad_to(p, 2)
    return 0.25 * (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2])


def _up2(p):
    # triangular 3/4-1/4 doubling along axis 0 (matches common "fancy" upsampling)
    out = np.empty((p.shape[0] * 2, p.shape[1]), np.float64)
    prev = np.vstack([p[:1], p[:-1]])
    nxt = np.vstack([p[1:], p[-1:]])
    out[0::2] = 0.75 * p + 0.25 * prev
    out[1::2] = 0.75 * p + 0.25 * nxt
    return out


def _to_blocks(plane):
    h, w = plane.shape
    bv, bh = h // 8, w // 8
    return plane.reshape(bv, 8, bh, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8), bv, bh


def _from_blocks(blocks, bv, bh):
    return blocks.reshape(bv, bh, 8, 8).transpose(0, 2, 1, 3).reshape(bv * 8, bh * 8)


def _fdct_quant(plane, qtab):
    """Level shift, blockwise DCT, quantize; (n, 64) int32 in zigzag order."""
    blocks, bv, bh = _to_blocks(plane - 128.0)
    coef = np.einsum("ij,bjk,lk->bil", _DCT_M, blocks, _DCT_M, optimize=True)
    q = np.rint(coef / qtab).astype(np.int32)
    return q.reshape(-1, 64)[:, ZZ_ORDER], bv, bh


def _dequant_idct(units, qtab, bv, bh):
    flat = np.zeros((units.shape[0], 64), np.float64)
    flat[:, ZZ_ORDER] = units
    coef = flat.reshape(-1, 8, 8) * qtab
    blocks = np.einsum("ji,bjk,kl->bil", _DCT_M, coef, _DCT_M, optimize=True) + 128.0
    return _from_blocks(blocks, bv, bh)


# --------- encoder ---------

def _enc_table(counts, values):
    codes = np.zeros(256, np.uint32)
    sizes = np.zeros(256, np.uint8)
    code = 0
    i = 0
    for ln in range(1, 17):
        for _ in range(counts[ln - 1]):
            codes[values[i]] = code
            sizes[values[i]] = ln
            code += 1
            i += 1
        code <<= 1
    return codes, sizes


def _stack_enc(luma, chroma):
    lc, ls = _enc_table(*luma)
    cc, cs = _enc_table(*chroma)
    return np.stack([lc, cc]), np.stack([ls, cs])


_DC_CODES, _DC_SIZES = _stack_enc(_DC_LUMA, _DC_CHROMA)
_AC_CODES, _AC_SIZES = _stack_enc(_AC_LUMA, _AC_CHROMA)


def _seg(marker, payload=b""):
    return bytes([0xFF, marker]) + struct.pack(">H", len(payload) + 2) + payload


def encode(img, quality: int) -> bytes:
    """Encode gray or RGB samples as a baseline JFIF stream."""
    a = img.data if isinstance(img, RasterImage) else np.asarray(img)
    if a.dtype != np.uint8 or a.ndim not in (2, 3):
        raise ValueError("encode expects uint8 (H, W) or (H, W, 3) samples")
    h, w = a.shape[:2]
    qy, qc = quality_tables(quality)
    gray = a.ndim == 2
    sub420 = (not gray) and quality < 90

    if gray:
        yp = a.astype(np.float64)
        yu, bv, bh = _fdct_quant(_pad_to(yp, 8), qy)
        units = yu
        n = units.shape[0]
        unit_tables = np.zeros(n, np.uint8)
        unit_comps = np.zeros(n, np.uint8)
        comps = [(1, 0x11, 0)]
    else:
        y, cb, cr = _rgb_to_ycc(a.astype(np.float64))
        if sub420:
            yu, ybv, ybh = _fdct_quant(_pad_to(y, 16), qy)
            cbu, cbv, cbh = _fdct_quant(_pad_to(_box2(cb), 8), qc)
            cru, _, _ = _fdct_quant(_pad_to(_box2(cr), 8), qc)
            mv, mh = ybv // 2, ybh // 2
            y4 = yu.reshape(mv, 2, mh, 2, 64).transpose(0, 2, 1, 3, 4).reshape(mv * mh, 4, 64)
            units = np.concatenate(
                [y4, cbu.reshape(mv * mh, 1, 64), cru.reshape(mv * mh, 1, 64)], axis=1
            ).reshape(-1, 64)
            unit_tables = np.tile(np.array([0, 0, 0, 0, 1, 1], np.uint8), mv * mh)
            unit_comps = np.tile(np.array([0, 0, 0, 0, 1, 2], np.uint8), mv * mh)
            comps = [(1, 0x22, 0), (2, 0x11, 1), (3, 0x11, 1)]
        else:
            yu, bv, bh = _fdct_quant(_pad_to(y, 8), qy)
            cbu, _, _ = _fdct_quant(_pad_to(cb, 8), qc)
            cru, _, _ = _fdct_quant(_pad_to(cr, 8), qc)
            units = np.stack([yu, cbu, cru], axis=1).reshape(-1, 64)
            n_mcu = yu.shape[0]
            unit_tables = np.tile(np.array([0, 1, 1], np.uint8), n_mcu)
            unit_comps = np.tile(np.array([0, 1, 2], np.uint8), n_mcu)
            comps = [(1, 0x11, 0), (2, 0x11, 1), (3, 0x11, 1)]

    scan = huff_encode_scan(np.ascontiguousarray(units, np.int32), unit_tables, unit_comps,
                            _DC_CODES, _DC_SIZES, _AC_CODES, _AC_SIZES)

    out = bytearray()
    out += b"\xFF\xD8"
    out += _seg(0xE0, b"JFIF\x00" + bytes([1, 1, 0]) + struct.pack(">HH", 1, 1) + bytes([0, 0]))
    dqt = bytes([0]) + bytes(qy.reshape(64)[ZZ_ORDER].astype(np.uint8))
    if not gray:
        dqt += bytes([1]) + bytes(qc.reshape(64)[ZZ_ORDER].astype(np.uint8))
    out += _seg(0xDB, dqt)
    sof = struct.pack(">BHHB", 8, h, w, len(comps))
    for cid, hv, qidx in comps:
        sof += bytes([cid, hv, qidx])
    out += _seg(0xC0, sof)
    dht = b""
    tables = [(0x00, _DC_LUMA), (0x10, _AC_LUMA)]
    if not gray:
        tables += [(0x01, _DC_CHROMA), (0x11, _AC_CHROMA)]
    for tid, (counts, values) in tables:
        dht += bytes([tid]) + bytes(counts) + bytes(values)
    out += _seg(0xC4, dht)
    sos = bytes([len(comps)])
    for cid, _, qidx in comps:
        tsel = 0x00 if qidx == 0 else 0x11
        sos += bytes([cid, tsel])
    sos += bytes([0, 63, 0])
    out += _seg(0xDA, sos)
    out += scan
    out += b"\xFF\xD9"
    return bytes(out)


# --------- decoder ---------

def _dec_table(counts, values):
    mincode = np.zeros(17, np.int32)
    maxcode = np.full(17, -1, np.int32)
    valptr = np.zeros(17, np.int32)
    code = 0
    k = 0
    for ln in range(1, 17):
        n = counts[ln - 1]
        if n:
            valptr[ln] = k
            mincode[ln] = code
            maxcode[ln] = code + n - 1
            code += n
            k += n
        code <<= 1
    return mincode, maxcode, valptr, np.asarray(values, np.uint8)


def _stack_dec(pair0, pair1):
    rows = [_dec_table(*pair0), _dec_table(*pair1)]
    width = max(len(r[3]) for r in rows)
    mins = np.stack([r[0] for r in rows])
    maxs = np.stack([r[1] for r in rows])
    vals = np.stack([r[2] for r in rows])
    syms = np.zeros((2, width), np.uint8)
    for i, r in enumerate(rows):
        syms[i, : len(r[3])] = r[3]
    return mins, maxs, vals, syms


def decode(data: bytes) -> np.ndarray:
    """Decode a baseline JPEG stream to uint8 samples ((H, W) or (H, W, 3))."""
    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise JpegError("not a JPEG stream")
    pos = 2
    qt = {}
    dc_tabs = {}
    ac_tabs = {}
    sof = None
    restart = 0
    scan_info = None
    scan_bytes = None
    n = len(data)

    while pos < n:
        if data[pos] != 0xFF:
            raise JpegError(f"expected marker at offset {pos}")
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            raise JpegError("truncated stream")
        marker = data[pos]
        pos += 1
        if marker == 0xD9:  # EOI
            break
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:
            continue
        if pos + 2 > n:
            raise JpegError("truncated segment header")
        ln = struct.unpack(">H", data[pos:pos + 2])[0]
        payload = data[pos + 2:pos + ln]
        pos += ln
        if marker == 0xDB:
            p = 0
            while p < len(payload):
                pq, tq = payload[p] >> 4, payload[p] & 0x0F
                if pq != 0:
                    raise JpegError("16-bit quantization tables unsupported")
                tab = np.zeros(64, np.float64)
                tab[ZZ_ORDER] = np.frombuffer(payload[p + 1:p + 65], np.uint8)
                qt[tq] = tab.reshape(8, 8)
                p += 65
        elif marker == 0xC4:
            p = 0
            while p < len(payload):
                tc, th = payload[p] >> 4, payload[p] & 0x0F
                counts = list(payload[p + 1:p + 17])
                nv = sum(counts)
                values = list(payload[p + 17:p + 17 + nv])
                (dc_tabs if tc == 0 else ac_tabs)[th] = (counts, values)
                p += 17 + nv
        elif marker == 0xC0:
            prec, h, w, nc = struct.unpack(">BHHB", payload[:6])
            if prec != 8:
                raise JpegError("only 8-bit precision supported")
            comps = []
            for i in range(nc):
                cid, hv, tq = payload[6 + 3 * i: 9 + 3 * i]
                comps.append((cid, hv >> 4, hv & 0x0F, tq))
            sof = (h, w, comps)
        elif marker in (0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise JpegError("only baseline (SOF0) streams supported")
        elif marker == 0xDD:
            restart = struct.unpack(">H", payload[:2])[0]
        elif marker == 0xDA:
            nc = payload[0]
            scan_info = [(payload[1 + 2 * i], payload[2 + 2 * i] >> 4, payload[2 + 2 * i] & 0x0F)
                         for i in range(nc)]
            end = pos
            while end < n - 1:
                if data[end] == 0xFF and data[end + 1] != 0x00 and not (0xD0 <= data[end + 1] <= 0xD7):
                    break
                end += 1
            scan_bytes = data[pos:end]
            pos = end
        # APPn/COM and anything else: skipped

    if sof is None or scan_info is None:
        raise JpegError("missing SOF or SOS segment")
    h, w, comps = sof
    if len(comps) not in (1, 3):
        raise JpegError(f"unsupported component count {len(comps)}")

    samp = [(c[1], c[2]) for c in comps]
    if len(comps) == 3 and samp not in ([(2, 2), (1, 1), (1, 1)], [(1, 1), (1, 1), (1, 1)]):
        raise JpegError(f"unsupported sampling factors {samp}")

    table_of = {}
    for cid, dct, act in scan_info:
        table_of[cid] = (dct, act)

    if len(comps) == 1:
        bv, bh = -(-h // 8), -(-w // 8)
        n_mcu = bv * bh
        per = [1]
        pat_tables = [table_of[comps[0][0]][0]]
        pat_comps = [0]
    elif samp[0] == (2, 2):
        mv, mh = -(-h // 16), -(-w // 16)
        n_mcu = mv * mh
        per = [4, 1, 1]
        pat_tables = [table_of[comps[0][0]][0]] * 4 + [table_of[comps[1][0]][0], table_of[comps[2][0]][0]]
        pat_comps = [0, 0, 0, 0, 1, 2]
    else:
        bv, bh = -(-h // 8), -(-w // 8)
        n_mcu = bv * bh
        per = [1, 1, 1]
        pat_tables = [table_of[c[0]][0] for c in comps]
        pat_comps = [0, 1, 2]

    u_per_mcu = sum(per)
    unit_tables = np.tile(np.asarray(pat_tables, np.uint8), n_mcu)
    unit_comps = np.tile(np.asarray(pat_comps, np.uint8), n_mcu)

    def dec_stack(tabs):
        if 1 in tabs:
            return _stack_dec(tabs[0], tabs[1])
        return _stack_dec(tabs[0], tabs[0])

    dmin, dmax, dval, dsym = dec_stack(dc_tabs)
    amin, amax, aval, asym = dec_stack(ac_tabs)

    def entropy_decode(chunk, nu):
        try:
            return huff_decode_scan(chunk, nu, unit_tables[:nu], unit_comps[:nu],
                                    dmin, dmax, dval, dsym, amin, amax, aval, asym)
        except ValueError as e:
            raise JpegError(str(e)) from e

    if restart:
        # split on restart markers; DC predictors reset at each boundary
        chunks = []
        start = 0
        i = 0
        while i < len(scan_bytes) - 1:
            if scan_bytes[i] == 0xFF and 0xD0 <= scan_bytes[i + 1] <= 0xD7:
                chunks.append(scan_bytes[start:i])
                start = i + 2
                i += 2
            else:
                i += 1
        chunks.append(scan_bytes[start:])
        parts = []
        done = 0
        for ch in chunks:
            todo = min(restart, n_mcu - done)
            if todo <= 0:
                break
            parts.append(entropy_decode(ch, todo * u_per_mcu))
            done += todo
        if done != n_mcu:
            raise JpegError("restart segments do not cover the image")
        units = np.concatenate(parts)
    else:
        units = entropy_decode(scan_bytes, n_mcu * u_per_mcu)

    if len(comps) == 1:
        plane = _dequant_idct(units, qt[comps[0][3]], bv, bh)
        return np.clip(np.rint(plane[:h, :w]), 0, 255).astype(np.uint8)

    if samp[0] == (2, 2):
        g = units.reshape(n_mcu, 6, 64)
        yb = g[:, :4].reshape(mv, mh, 2, 2, 64).transpose(0, 2, 1, 3, 4).reshape(-1, 64)
        y = _dequant_idct(yb, qt[comps[0][3]], 2 * mv, 2 * mh)[:h, :w]
        ch2, cw2 = -(-h // 2), -(-w // 2)
        cb = _dequant_idct(g[:, 4], qt[comps[1][3]], mv, mh)[:ch2, :cw2]
        cr = _dequant_idct(g[:, 5], qt[comps[2][3]], mv, mh)[:ch2, :cw2]
        cb = _up2(_up2(cb).T).T[:h, :w]
        cr = _up2(_up2(cr).T).T[:h, :w]
    else:
        g = units.reshape(n_mcu, 3, 64)
        y = _dequant_idct(g[:, 0], qt[comps[0][3]], bv, bh)[:h, :w]
        cb = _dequant_idct(g[:, 1], qt[comps[1][3]], bv, bh)[:h, :w]
        cr = _dequant_idct(g[:, 2], qt[comps[2][3]], bv, bh)[:h, :w]

    rgb = _ycc_to_rgb(y, cb, cr)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
