# cython: boundscheck=False, wraparound=False, cdivision=True
"""Native versions of the hot kernels (see fallback.py for the reference
semantics). The entropy coder must stay byte-identical to the fallback."""

import numpy as np


def resize_pass(double[:, ::1] src, long long[:, ::1] idx, double[:, ::1] w):
    cdef Py_ssize_t outh = idx.shape[0]
    cdef Py_ssize_t taps = idx.shape[1]
    cdef Py_ssize_t width = src.shape[1]
    out = np.zeros((outh, width), np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, t, x, r
    cdef double ww
    with nogil:
        for i in range(outh):
            for t in range(taps):
                ww = w[i, t]
                if ww == 0.0:
                    continue
                r = <Py_ssize_t> idx[i, t]
                for x in range(width):
                    o[i, x] += src[r, x] * ww
    return out


cdef struct BitWriter:
    unsigned long long buf
    int nbits


def huff_encode_scan(int[:, ::1] units,
                     unsigned char[::1] unit_tables,
                     unsigned char[::1] unit_comps,
                     unsigned int[:, ::1] dc_codes, unsigned char[:, ::1] dc_sizes,
                     unsigned int[:, ::1] ac_codes, unsigned char[:, ::1] ac_sizes):
    cdef Py_ssize_t n = units.shape[0]
    cdef Py_ssize_t cap = 1 << 16
    out_arr = np.empty(cap, np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t pos = 0
    cdef BitWriter bw
    bw.buf = 0
    bw.nbits = 0
    cdef int pred[4]
    pred[0] = pred[1] = pred[2] = pred[3] = 0
    cdef Py_ssize_t u, k
    cdef int t, c, dc, diff, v, mag, cat, run, sym, bits
    cdef unsigned char b

    for u in range(n):
        # each unit emits at most ~420 bytes; grow well ahead of that
        if pos + 1024 > cap:
            cap *= 2
            new_arr = np.empty(cap, np.uint8)
            new_arr[:pos] = out_arr[:pos]
            out_arr = new_arr
            out = out_arr
        t = unit_tables[u]
        c = unit_comps[u]
        dc = units[u, 0]
        diff = dc - pred[c]
        pred[c] = dc
        mag = diff if diff >= 0 else -diff
        cat = 0
        while mag >> cat:
            cat += 1
        bw.buf = ((bw.buf << dc_sizes[t, cat]) | dc_codes[t, cat]) & 0xFFFFFFFFFFFFULL
        bw.nbits += dc_sizes[t, cat]
        while bw.nbits >= 8:
            bw.nbits -= 8
            b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
            out[pos] = b
            pos += 1
            if b == 0xFF:
                out[pos] = 0
                pos += 1
        if cat:
            bits = diff if diff >= 0 else diff + (1 << cat) - 1
            bw.buf = ((bw.buf << cat) | <unsigned int> (bits & ((1 << cat) - 1))) & 0xFFFFFFFFFFFFULL
            bw.nbits += cat
            while bw.nbits >= 8:
                bw.nbits -= 8
                b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
                out[pos] = b
                pos += 1
                if b == 0xFF:
                    out[pos] = 0
                    pos += 1
        run = 0
        for k in range(1, 64):
            v = units[u, k]
            if v == 0:
                run += 1
                continue
            while run > 15:
                bw.buf = ((bw.buf << ac_sizes[t, 0xF0]) | ac_codes[t, 0xF0]) & 0xFFFFFFFFFFFFULL
                bw.nbits += ac_sizes[t, 0xF0]
                while bw.nbits >= 8:
                    bw.nbits -= 8
                    b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
                    out[pos] = b
                    pos += 1
                    if b == 0xFF:
                        out[pos] = 0
                        pos += 1
                run -= 16
            mag = v if v >= 0 else -v
            cat = 0
            while mag >> cat:
                cat += 1
            sym = (run << 4) | cat
            bw.buf = ((bw.buf << ac_sizes[t, sym]) | ac_codes[t, sym]) & 0xFFFFFFFFFFFFULL
            bw.nbits += ac_sizes[t, sym]
            while bw.nbits >= 8:
                bw.nbits -= 8
                b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
                out[pos] = b
                pos += 1
                if b == 0xFF:
                    out[pos] = 0
                    pos += 1
            bits = v if v >= 0 else v + (1 << cat) - 1
            bw.buf = ((bw.buf << cat) | <unsigned int> (bits & ((1 << cat) - 1))) & 0xFFFFFFFFFFFFULL
            bw.nbits += cat
            while bw.nbits >= 8:
                bw.nbits -= 8
                b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
                out[pos] = b
                pos += 1
                if b == 0xFF:
                    out[pos] = 0
                    pos += 1
            run = 0
        if run:
            bw.buf = ((bw.buf << ac_sizes[t, 0x00]) | ac_codes[t, 0x00]) & 0xFFFFFFFFFFFFULL
            bw.nbits += ac_sizes[t, 0x00]
            while bw.nbits >= 8:
                bw.nbits -= 8
                b = <unsigned char> ((bw.buf >> bw.nbits) & 0xFF)
                out[pos] = b
                pos += 1
                if b == 0xFF:
                    out[pos] = 0
                    pos += 1
    if bw.nbits:
        # pad the final partial byte with 1-bits
        b = <unsigned char> (((bw.buf << (8 - bw.nbits)) | ((1 << (8 - bw.nbits)) - 1)) & 0xFF)
        out[pos] = b
        pos += 1
        if b == 0xFF:
            out[pos] = 0
            pos += 1
    return bytes(out_arr[:pos].tobytes())


def huff_decode_scan(const unsigned char[::1] data, Py_ssize_t n_units,
                     unsigned char[::1] unit_tables,
                     unsigned char[::1] unit_comps,
                     int[:, ::1] dc_min, int[:, ::1] dc_max, int[:, ::1] dc_val,
                     unsigned char[:, ::1] dc_sym,
                     int[:, ::1] ac_min, int[:, ::1] ac_max, int[:, ::1] ac_val,
                     unsigned char[:, ::1] ac_sym):
    units_arr = np.zeros((n_units, 64), np.int32)
    cdef int[:, ::1] units = units_arr
    cdef Py_ssize_t nbytes = data.shape[0]
    cdef Py_ssize_t pos = 0
    cdef unsigned long long bitbuf = 0
    cdef int nbits = 0
    cdef int pred[4]
    pred[0] = pred[1] = pred[2] = pred[3] = 0
    cdef Py_ssize_t u
    cdef int t, c, cat, diff, run, sym, k, ln, code, bits
    cdef unsigned char byte

    for u in range(n_units):
        t = unit_tables[u]
        c = unit_comps[u]

        # ---- DC symbol
        while nbits < 1:
            if pos >= nbytes:
                raise ValueError("truncated scan data")
            byte = data[pos]
            pos += 1
            if byte == 0xFF:
                if pos >= nbytes or data[pos] != 0x00:
                    raise ValueError("unexpected marker inside scan")
                pos += 1
            bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
            nbits += 8
        nbits -= 1
        code = <int> ((bitbuf >> nbits) & 1)
        ln = 1
        while code > dc_max[t, ln]:
            while nbits < 1:
                if pos >= nbytes:
                    raise ValueError("truncated scan data")
                byte = data[pos]
                pos += 1
                if byte == 0xFF:
                    if pos >= nbytes or data[pos] != 0x00:
                        raise ValueError("unexpected marker inside scan")
                    pos += 1
                bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
                nbits += 8
            nbits -= 1
            code = (code << 1) | <int> ((bitbuf >> nbits) & 1)
            ln += 1
            if ln > 16:
                raise ValueError("invalid Huffman code")
        cat = dc_sym[t, dc_val[t, ln] + code - dc_min[t, ln]]
        if cat:
            while nbits < cat:
                if pos >= nbytes:
                    raise ValueError("truncated scan data")
                byte = data[pos]
                pos += 1
                if byte == 0xFF:
                    if pos >= nbytes or data[pos] != 0x00:
                        raise ValueError("unexpected marker inside scan")
                    pos += 1
                bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
                nbits += 8
            nbits -= cat
            bits = <int> ((bitbuf >> nbits) & ((1 << cat) - 1))
            diff = bits - (1 << cat) + 1 if bits < (1 << (cat - 1)) else bits
        else:
            diff = 0
        pred[c] += diff
        units[u, 0] = pred[c]

        # ---- AC symbols
        k = 1
        while k < 64:
            while nbits < 1:
                if pos >= nbytes:
                    raise ValueError("truncated scan data")
                byte = data[pos]
                pos += 1
                if byte == 0xFF:
                    if pos >= nbytes or data[pos] != 0x00:
                        raise ValueError("unexpected marker inside scan")
                    pos += 1
                bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
                nbits += 8
            nbits -= 1
            code = <int> ((bitbuf >> nbits) & 1)
            ln = 1
            while code > ac_max[t, ln]:
                while nbits < 1:
                    if pos >= nbytes:
                        raise ValueError("truncated scan data")
                    byte = data[pos]
                    pos += 1
                    if byte == 0xFF:
                        if pos >= nbytes or data[pos] != 0x00:
                            raise ValueError("unexpected marker inside scan")
                        pos += 1
                    bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
                    nbits += 8
                nbits -= 1
                code = (code << 1) | <int> ((bitbuf >> nbits) & 1)
                ln += 1
                if ln > 16:
                    raise ValueError("invalid Huffman code")
            sym = ac_sym[t, ac_val[t, ln] + code - ac_min[t, ln]]
            run = sym >> 4
            cat = sym & 0x0F
            if cat == 0:
                if run == 15:
                    k += 16
                    continue
                break
            k += run
            if k > 63:
                raise ValueError("coefficient run past end of block")
            while nbits < cat:
                if pos >= nbytes:
                    raise ValueError("truncated scan data")
                byte = data[pos]
                pos += 1
                if byte == 0xFF:
                    if pos >= nbytes or data[pos] != 0x00:
                        raise ValueError("unexpected marker inside scan")
                    pos += 1
                bitbuf = ((bitbuf << 8) | byte) & 0xFFFFFFFFFFFFULL
                nbits += 8
            nbits -= cat
            bits = <int> ((bitbuf >> nbits) & ((1 << cat) - 1))
            units[u, k] = bits - (1 << cat) + 1 if bits < (1 << (cat - 1)) else bits
            k += 1
    return units_arr
