import numpy as np
import pytest

from csdeflect import wavelet

# orthogonal Daubechies 16-tap (8 vanishing moments) decomposition low-pass,
# extremal phase, as tabulated in standard wavelet references
DB8_REFERENCE = np.array([
    -0.00011747678400228192, 0.0006754494059985568, -0.0003917403729959771,
    -0.00487035299301066, 0.008746094047015655, 0.013981027917015516,
    -0.04408825393106472, -0.01736930100202211, 0.128747426620186,
    0.00047248457399797254, -0.2840155429624281, -0.015829105256023893,
    0.5853546836548691, 0.6756307362980128, 0.3128715909144659,
    0.05441584224308161,
])


def test_daubechies_filter_matches_reference_table():
    h = wavelet.daubechies_lowpass(16)
    assert np.max(np.abs(h - DB8_REFERENCE)) < 1e-12


def test_quadrature_conditions():
    h = wavelet.daubechies_lowpass(16)
    g = wavelet.quadrature_mirror(h)
    assert abs(h.sum() - np.sqrt(2)) < 1e-12
    for k in range(8):
        # orthonormal to its own even shifts and to the high-pass shifts
        assert abs(h[2 * k:] @ h[: 16 - 2 * k] - (k == 0)) < 1e-12
        assert abs(h[2 * k:] @ g[: 16 - 2 * k]) < 1e-12
    assert abs(g.sum()) < 1e-12


def test_filter_errors():
    with pytest.raises(wavelet.FrameError):
        wavelet.daubechies_lowpass(7)


def test_band_count_and_levels_error():
    cfg = wavelet.FrameConfig(levels=3)
    assert wavelet.analysis(np.zeros((64, 64)), cfg).shape == (10, 64, 64)
    with pytest.raises(wavelet.FrameError):
        wavelet.analysis(np.zeros((4, 4)), cfg)
    with pytest.raises(wavelet.FrameError):
        wavelet.synthesis(np.zeros((4, 64, 64)), cfg)


@pytest.mark.parametrize("levels", [1, 2, 3])
def test_parseval_and_round_trip(levels):
    cfg = wavelet.FrameConfig(levels=levels)
    rng = np.random.default_rng(levels)
    for _ in range(10):
        s = rng.standard_normal((64, 64))
        c = wavelet.analysis(s, cfg)
        assert abs(np.linalg.norm(c) / np.linalg.norm(s) - 1) < 1e-10
        assert np.max(np.abs(wavelet.synthesis(c, cfg) - s)) < 1e-10


def test_adjoint_identity():
    cfg = wavelet.FrameConfig()
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = rng.standard_normal((32, 32))
        c = rng.standard_normal((cfg.n_bands, 32, 32))
        lhs = np.sum(wavelet.analysis(s, cfg) * c)
        rhs = np.sum(s * wavelet.synthesis(c, cfg))
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_constant_image_only_in_approximation():
    c = wavelet.analysis(np.full((32, 32), 2.5))
    assert np.max(np.abs(c[:-1])) < 1e-12
    assert np.allclose(c[-1], 2.5)


def test_translation_covariance():
    a = np.zeros((32, 32))
    a[3, 7] = 1.0
    b = np.roll(a, (5, -2), axis=(0, 1))
    ca, cb = wavelet.analysis(a), wavelet.analysis(b)
    assert np.allclose(np.roll(ca, (5, -2), axis=(1, 2)), cb, atol=1e-12)


def test_matches_direct_a_trous_convolution():
    # periodic a-trous filtering in the signal domain, first level HL band
    h = wavelet.daubechies_lowpass(16) / np.sqrt(2)
    g = wavelet.quadrature_mirror(wavelet.daubechies_lowpass(16)) / np.sqrt(2)
    n = 32
    s = np.random.default_rng(0).standard_normal((n, n))

    def circ(x, f, axis):
        out = np.zeros_like(x)
        for k, fk in enumerate(f):
            out += fk * np.roll(x, k, axis=axis)
        return out

    lh = circ(circ(s, h, 0), g, 1)
    hl = circ(circ(s, g, 0), h, 1)
    c = wavelet.analysis(s, wavelet.FrameConfig(levels=1))
    assert np.allclose(c[0], lh, atol=1e-12)
    assert np.allclose(c[1], hl, atol=1e-12)


def test_zero_coefficients_give_zero():
    assert np.all(wavelet.synthesis(np.zeros((7, 16, 16))) == 0)
