"""Undecimated 2-D wavelet tight frame with periodic boundaries.

Bands are computed in the Fourier domain: at level ``j`` the 1-D filters are
dilated by ``2**j`` (a trous) and scaled by ``1/sqrt(2)``, so that the squared
frequency responses of all bands sum to one and synthesis is the exact
adjoint and left inverse of analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np


class FrameError(ValueError):
    pass


@lru_cache(maxsize=None)
def daubechies_lowpass(taps: int = 16) -> np.ndarray:
    """Extremal-phase orthogonal Daubechies low-pass filter, ``sum(h) = sqrt(2)``.

    Built by spectral factorization: the roots of the half-band polynomial are
    mapped to the z-plane and the ones inside the unit circle are kept.
    """
    if taps < 2 or taps % 2:
        raise FrameError("Daubechies filters have an even number of taps")
    p = taps // 2
    # P(y) = sum_k C(p-1+k, k) y^k, highest degree first for np.roots
    coeffs = [comb(p - 1 + k, k) for k in range(p)][::-1]
    h = np.poly1d([1.0])
    for _ in range(p):
        h = h * np.poly1d([1.0, 1.0])
    if p > 1:
        for y in np.roots(coeffs):
            # y = (2 - z - 1/z) / 4  <=>  z^2 - (2 - 4y) z + 1 = 0
            zs = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            z = zs[np.argmin(np.abs(zs))]
            h = h * np.poly1d([1.0, -z])
    c = np.real(h.coeffs)
    c = c * np.sqrt(2.0) / c.sum()
    return c[::-1].copy()


def quadrature_mirror(h: np.ndarray) -> np.ndarray:
    n = len(h)
    return np.array([(-1) ** k * h[n - 1 - k] for k in range(n)])


@dataclass(frozen=True)
class FrameConfig:
    taps: int = 16
    levels: int = 2
    family: str = "daubechies-extremal-phase"
    boundary: str = "periodic"

    @property
    def n_bands(self) -> int:
        return 3 * self.levels + 1


def _dilated_response(taps: np.ndarray, n: int, level: int) -> np.ndarray:
    """DFT on a length-n periodic grid of the filter upsampled by 2**level."""
    k = np.arange(n)
    phase = np.exp(-2j * np.pi * np.outer(k, np.arange(len(taps)) * 2 ** level) / n)
    return phase @ taps / np.sqrt(2.0)


@lru_cache(maxsize=32)
def _band_responses(n: int, cfg: FrameConfig) -> np.ndarray:
    if cfg.levels < 1:
        raise FrameError("levels must be >= 1")
    if 2 ** cfg.levels > n:
        raise FrameError(f"{cfg.levels} levels too deep for a {n}x{n} grid")
    h = daubechies_lowpass(cfg.taps)
    g = quadrature_mirror(h)
    nh = n // 2 + 1  # rfft2 half-plane along the last axis
    bands = []
    approx = np.ones((n, nh), dtype=complex)
    for j in range(cfg.levels):
        lo = _dilated_response(h, n, j)
        hi = _dilated_response(g, n, j)
        lo_r, hi_r = lo[:nh], hi[:nh]
        bands.append(approx * np.outer(lo, hi_r))
        bands.append(approx * np.outer(hi, lo_r))
        bands.append(approx * np.outer(hi, hi_r))
        approx = approx * np.outer(lo, lo_r)
    bands.append(approx)
    out = np.stack(bands)
    out.setflags(write=False)
    return out


def analysis(s, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """Frame coefficients ``Psi^* s`` as a ``(3*levels + 1, n, n)`` stack.

    Bands are ordered level by level (LH, HL, HH) and end with the coarse
    approximation.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise FrameError(f"expected a square image, got {s.shape}")
    n = s.shape[0]
    resp = _band_responses(n, cfg)
    return np.fft.irfft2(resp * np.fft.rfft2(s), s=(n, n))


def synthesis(coeffs, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """Adjoint of :func:`analysis`; also its left inverse (tight frame)."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 3 or c.shape[0] != cfg.n_bands:
        raise FrameError(f"expected {cfg.n_bands} bands, got shape {c.shape}")
    n = c.shape[1]
    resp = _band_responses(n, cfg)
    return np.fft.irfft2((np.conj(resp) * np.fft.rfft2(c)).sum(axis=0), s=(n, n))
