import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqc.freq import Spectrum, cutoff_d0, dft2d, high_freq_ratio


def naive_dft2(plane):
    """Textbook double-sum DFT, centered and normalized like dft2d.

    The shift is plain index rolling (np.fft.fftshift does no arithmetic),
    so the transform itself is computed independently of numpy.fft.
    """
    h, w = plane.shape
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    out = np.zeros((h, w), np.complex128)
    for u in range(h):
        for v in range(w):
            phase = np.exp(-2j * np.pi * (u * ys / h + v * xs / w))
            out[u, v] = (plane * phase).sum()
    return np.fft.fftshift(out) / (h * w)


def test_matches_naive_dft(rng):
    for _ in range(10):
        h = int(rng.integers(1, 17))
        w = int(rng.integers(1, 17))
        plane = rng.uniform(-100.0, 100.0, (h, w))
        got = dft2d(plane).coeffs
        want = naive_dft2(plane)
        scale = max(1.0, np.abs(want).max())
        assert np.abs(got - want).max() <= 1e-9 * scale


def test_parseval(rng):
    plane = rng.uniform(0.0, 255.0, (12, 9))
    spec = dft2d(plane)
    # with the 1/(HW) normalization: sum |F|^2 = sum |f|^2 / (HW)
    assert np.isclose(spec.power().sum(), (plane ** 2).sum() / plane.size, rtol=1e-12)


def test_dc_lands_at_center():
    plane = np.full((6, 10), 3.0)
    spec = dft2d(plane)
    assert abs(spec.coeffs[3, 5] - 3.0) < 1e-12
    rest = np.abs(spec.coeffs).sum() - abs(spec.coeffs[3, 5])
    assert rest < 1e-12


def test_impulse_8x8_ratio_is_39_64():
    plane = np.zeros((8, 8))
    plane[0, 0] = 1.0
    # impulse spreads energy evenly over all 64 bins; counting bins with
    # hypot(u-4, v-4) > 0.5*hypot(4,4) by hand gives 39
    assert abs(high_freq_ratio(plane) - 39.0 / 64.0) <= 1e-12


def test_impulse_bin_count_oracle():
    d0 = cutoff_d0(8, 8)
    n_high = sum(1 for u in range(8) for v in range(8)
                 if math.hypot(u - 4, v - 4) > d0)
    assert n_high == 39


def test_constant_ratio_zero():
    assert high_freq_ratio(np.full((16, 16), 200.0)) == 0.0


def test_zero_plane_raises():
    with pytest.raises(ValueError):
        high_freq_ratio(np.zeros((8, 8)))


def test_cutoff_value():
    assert cutoff_d0(8, 8) == 0.5 * math.hypot(4.0, 4.0)
    assert cutoff_d0(100, 60) == 0.5 * math.hypot(30.0, 50.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3),
       st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_scale_invariance(scale, seed):
    plane = np.random.default_rng(seed).uniform(1.0, 255.0, (9, 7))
    base = high_freq_ratio(plane)
    assert abs(high_freq_ratio(plane * scale) - base) <= 1e-9


def test_spectrum_power_and_validation(rng):
    plane = rng.uniform(0.0, 1.0, (4, 4))
    spec = dft2d(plane)
    assert np.allclose(spec.power(), np.abs(spec.coeffs) ** 2)
    with pytest.raises(ValueError):
        dft2d(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        dft2d(np.zeros((2, 2, 2)))
