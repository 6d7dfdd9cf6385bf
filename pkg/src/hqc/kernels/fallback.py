"""Pure numpy/Python implementations of the hot kernels.

Reference semantics for the Cython module in _native.pyx; both must produce
identical bytes for the entropy coder and matching floats (up to summation
order) for the resampler. Selected automatically when the extension is not
built, or forced with HQC_PURE=1.
"""

import numpy as np


def resize_pass(src, idx, w):
    """Resample rows of `src` (H, W) float64 to (idx.shape[0], W).

    idx/w hold per-output-row tap indices into src and their weights.
    """
    out = np.zeros((idx.shape[0], src.shape[1]), np.float64)
    for t in range(idx.shape[1]):
        out += src[idx[:, t], :] * w[:, t, None]
    return out


# --------- JPEG entropy coding ---------
# units: (N, 64) int32 quantized coefficients in zigzag order, DC first.
# unit_tables: (N,) uint8 Huffman table pair per unit (0 luma, 1 chroma).
# unit_comps: (N,) uint8 DC predictor slot per unit (component index).


def huff_encode_scan(units, unit_tables, unit_comps, dc_codes, dc_sizes, ac_codes, ac_sizes):
    out = bytearray()
    bitbuf = 0
    nbits = 0

    def put(code, size):
        nonlocal bitbuf, nbits
        bitbuf = ((bitbuf << size) | code) & 0xFFFFFFFFFFFF
        nbits += size
        while nbits >= 8:
            nbits -= 8
            b = (bitbuf >> nbits) & 0xFF
            out.append(b)
            if b == 0xFF:
                out.append(0)

    pred = [0, 0, 0, 0]
    n = units.shape[0]
    for u in range(n):
        zz = units[u]
        t = unit_tables[u]
        c = unit_comps[u]
        dc = int(zz[0])
        diff = dc - pred[c]
        pred[c] = dc
        mag = diff if diff >= 0 else -diff
        cat = mag.bit_length()
        put(int(dc_codes[t, cat]), int(dc_sizes[t, cat]))
        if cat:
            bits = diff if diff >= 0 else diff + (1 << cat) - 1
            put(bits & ((1 << cat) - 1), cat)
        run = 0
        for k in range(1, 64):
            v = int(zz[k])
            if v == 0:
                run += 1
                continue
            while run > 15:
                put(int(ac_codes[t, 0xF0]), int(ac_sizes[t, 0xF0]))
                run -= 16
            mag = v if v >= 0 else -v
            cat = mag.bit_length()
            sym = (run << 4) | cat
            put(int(ac_codes[t, sym]), int(ac_sizes[t, sym]))
            bits = v if v >= 0 else v + (1 << cat) - 1
            put(bits & ((1 << cat) - 1), cat)
            run = 0
        if run:
            put(int(ac_codes[t, 0x00]), int(ac_sizes[t, 0x00]))
    if nbits:
        pad = 8 - nbits
        put((1 << pad) - 1, pad)
    return bytes(out)


def huff_decode_scan(data, n_units, unit_tables, unit_comps,
                     dc_min, dc_max, dc_val, dc_sym,
                     ac_min, ac_max, ac_val, ac_sym):
    units = np.zeros((n_units, 64), np.int32)
    pos = 0
    bitbuf = 0
    nbits = 0
    nbytes = len(data)

    def fill(need):
        nonlocal pos, bitbuf, nbits
        while nbits < need:
            if pos >= nbytes:
                raise ValueError("truncated scan data")
            b = data[pos]
            pos += 1
            if b == 0xFF:
                if pos >= nbytes or data[pos] != 0x00:
                    raise ValueError("unexpected marker inside scan")
                pos += 1
            bitbuf = ((bitbuf << 8) | b) & 0xFFFFFFFFFFFF
            nbits += 8

    def receive(size):
        nonlocal nbits
        if size == 0:
            return 0
        fill(size)
        nbits -= size
        return (bitbuf >> nbits) & ((1 << size) - 1)

    def decode(tmin, tmax, tval, tsym):
        nonlocal nbits
        fill(1)
        nbits -= 1
        code = (bitbuf >> nbits) & 1
        ln = 1
        while code > tmax[ln]:
            fill(1)
            nbits -= 1
            code = (code << 1) | ((bitbuf >> nbits) & 1)
            ln += 1
            if ln > 16:
                raise ValueError("invalid Huffman code")
        return int(tsym[tval[ln] + code - tmin[ln]])

    def extend(bits, cat):
        if cat and bits < (1 << (cat - 1)):
            return bits - (1 << cat) + 1
        return bits

    pred = [0, 0, 0, 0]
    for u in range(n_units):
        t = unit_tables[u]
        c = unit_comps[u]
        cat = decode(dc_min[t], dc_max[t], dc_val[t], dc_sym[t])
        diff = extend(receive(cat), cat)
        pred[c] += diff
        units[u, 0] = pred[c]
        k = 1
        while k < 64:
            sym = decode(ac_min[t], ac_max[t], ac_val[t], ac_sym[t])
            run = sym >> 4
            cat = sym & 0x0F
            if cat == 0:
                if run == 15:
                    k += 16
                    continue
                break  # EOB
            k += run
            if k > 63:
                raise ValueError("coefficient run past end of block")
            units[u, k] = extend(receive(cat), cat)
            k += 1
    return units
