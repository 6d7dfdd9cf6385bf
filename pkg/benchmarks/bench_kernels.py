"""Times the compiled kernels against the pure-Python fallback.

Runs each hot path (bicubic resize passes, JPEG entropy encode/decode) under
every available backend and prints a small table. Usage:

    python benchmarks/bench_kernels.py [--side 1024] [--repeat 5]
"""

import argparse
import time

import numpy as np

import hqc.image
import hqc.jpeg
from hqc.image import RasterImage, resize_bicubic
from hqc.kernels import backends


def build_image(side):
    rng = np.random.default_rng(0)
    y, x = np.mgrid[0:side, 0:side]
    base = (x * 3 + y * 2) % 256
    grain = rng.normal(0.0, 20.0, (side, side, 3))
    return RasterImage(np.clip(base[..., None] + grain, 0, 255).astype(np.uint8))


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--side", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    img = build_image(args.side)
    impls = backends()
    saved = (hqc.image.resize_pass, hqc.jpeg.huff_encode_scan,
             hqc.jpeg.huff_decode_scan)
    rows = []
    try:
        for name in sorted(impls):
            mod = impls[name]
            hqc.image.resize_pass = mod.resize_pass
            hqc.jpeg.huff_encode_scan = mod.huff_encode_scan
            hqc.jpeg.huff_decode_scan = mod.huff_decode_scan
            stream = hqc.jpeg.encode(img, 75)
            rows.append((
                name,
                best_of(lambda: resize_bicubic(img, args.side // 2, args.side // 2),
                        args.repeat),
                best_of(lambda: hqc.jpeg.encode(img, 75), args.repeat),
                best_of(lambda: hqc.jpeg.decode(stream), args.repeat),
            ))
    finally:
        hqc.image.resize_pass, hqc.jpeg.huff_encode_scan, \
            hqc.jpeg.huff_decode_scan = saved

    print(f"{args.side}x{args.side} RGB, best of {args.repeat}")
    print(f"{'backend':10}  {'resize /2':>10}  {'jpeg enc':>10}  {'jpeg dec':>10}")
    for name, tr, te, td in rows:
        print(f"{name:10}  {tr * 1e3:8.1f}ms  {te * 1e3:8.1f}ms  {td * 1e3:8.1f}ms")
    if len(rows) == 2:
        by = {r[0]: r[1:] for r in rows}
        ratios = [f / n for f, n in zip(by["fallback"], by["native"])]
        print(f"{'speedup':10}  {ratios[0]:9.1f}x  {ratios[1]:9.1f}x  {ratios[2]:9.1f}x")


if __name__ == "__main__":
    main()
