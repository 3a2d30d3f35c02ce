"""Object-level characterization from per-pixel deflections.

Centroid maps store offsets in SLM pixels in array-axis order ``(row, col)``;
CSV export names the column component ``r_x`` and the row component ``r_y``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import smashed, solver
from .simulator import InstrumentGeometry, MeasurementSet


class CharacterizeError(ValueError):
    pass


@dataclass
class CentroidMap:
    grid: tuple
    r_map: np.ndarray  # (rows, cols, 2)
    valid: np.ndarray  # (rows, cols) bool
    peak: np.ndarray  # (rows, cols)

    @property
    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.r_map, axis=-1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k_row,k_col,r_x,r_y,magnitude,valid\n")
        mag = self.magnitude
        for i in range(self.grid[0]):
            for j in range(self.grid[1]):
                ry, rx = self.r_map[i, j]
                buf.write(f"{i},{j},{rx:.17g},{ry:.17g},{mag[i, j]:.17g},{int(self.valid[i, j])}\n")
        return buf.getvalue()

    def to_array(self) -> np.ndarray:
        """``(rows, cols, 4)`` stack of ``r_y, r_x, magnitude, valid``."""
        return np.concatenate((self.r_map, self.magnitude[..., None],
                               self.valid[..., None].astype(float)), axis=-1)

    def errors(self, truth) -> np.ndarray:
        """Per-pixel Euclidean distance to ground-truth offsets."""
        return np.linalg.norm(self.r_map - np.asarray(truth), axis=-1)


def centroid_map(Y: MeasurementSet, rho=3.0, method="compressed", calib=None,
                 solver_cfg=None, chunk=256) -> CentroidMap:
    """Per-pixel deflections from an MMV acquisition.

    ``method="compressed"`` runs the smashed filter on every column;
    ``"reconstruct"`` solves for each spectrum first (with the calibrated
    bias and radius when ``calib`` is given) and filters the result.
    """
    rows, cols = Y.grid
    if rows * cols != Y.n_columns:
        raise CharacterizeError(f"grid {Y.grid} does not match {Y.n_columns} columns")
    if method not in ("compressed", "reconstruct"):
        raise CharacterizeError(f"unknown centroid method {method!r}")
    op = Y.op
    b = calib.bias(op) if calib is not None else None
    r = np.full((Y.n_columns, 2), np.nan)
    valid = np.zeros(Y.n_columns, dtype=bool)
    peak = np.zeros(Y.n_columns)
    for start in range(0, Y.n_columns, chunk):
        idx = np.arange(start, min(start + chunk, Y.n_columns))
        Z = Y.debiased(idx)
        if method == "compressed":
            if b is not None:
                Z = Z - b[:, None] / np.sqrt(op.N)
            images = np.moveaxis(smashed.backproject(Z, op), -1, 0)
        else:
            eps = calib.epsilon(op.M) if calib is not None else 0.0
            images = np.array([solver.reconstruct(Z[:, j], op, b, eps, solver_cfg).spectrum
                               for j in range(len(idx))])
        for j, est in zip(idx, smashed.locate_batch(images, rho)):
            if est is None:
                continue
            r[j] = est.offset
            valid[j] = est.valid
            peak[j] = est.peak
    return CentroidMap(grid=(rows, cols), r_map=r.reshape(rows, cols, 2),
                       valid=valid.reshape(rows, cols), peak=peak.reshape(rows, cols))


@dataclass
class ConeFit:
    slope: float
    apex: tuple
    n_valid: int


def _box_mean(img, ok, size):
    # mean over valid pixels of a size x size neighbourhood
    h = size // 2
    v = np.pad(np.where(ok, img, 0.0), h)
    c = np.pad(ok.astype(float), h)
    win_v = np.lib.stride_tricks.sliding_window_view(v, (size, size)).sum(axis=(-1, -2))
    win_c = np.lib.stride_tricks.sliding_window_view(c, (size, size)).sum(axis=(-1, -2))
    return win_v / np.maximum(win_c, 1.0)


def cone_fit(cmap: CentroidMap, smooth: int = 1) -> ConeFit:
    """Least-squares slope of ``||r_k|| = m d_k`` about a fixed apex.

    The apex is the valid pixel whose ``smooth x smooth`` neighbourhood has the
    smallest mean magnitude (``smooth=1``: the raw minimum). ``d_k`` is the
    distance in CCD pixels from the apex; the slope is in SLM pixels per CCD
    pixel.
    """
    if smooth < 1 or smooth % 2 == 0:
        raise CharacterizeError("smooth must be a positive odd window size")
    mag = cmap.magnitude
    ok = cmap.valid & np.isfinite(mag)
    if ok.sum() < 3:
        raise CharacterizeError("cone fit needs at least 3 valid pixels")
    score = _box_mean(mag, ok, smooth) if smooth > 1 else mag
    masked = np.where(ok, score, np.inf)
    apex = np.unravel_index(int(np.argmin(masked)), mag.shape)
    i, j = np.indices(mag.shape)
    d = np.hypot(i - apex[0], j - apex[1])[ok]
    den = (d * d).sum()
    if den == 0:
        raise CharacterizeError("degenerate cone fit: all distances are zero")
    m = float((mag[ok] * d).sum() / den)
    return ConeFit(slope=m, apex=(int(apex[0]), int(apex[1])), n_valid=int(ok.sum()))


def dioptric_power(m_o, geometry: InstrumentGeometry = InstrumentGeometry()) -> float:
    """Lens power in dioptres from the cone slope (SLM px per CCD px)."""
    return float(m_o * (geometry.slm_pitch / geometry.ccd_pitch) / geometry.f_schlieren)


def tv_norm(image, margin=0) -> float:
    """Isotropic total variation with forward differences and replicated edges.

    ``margin`` pixels are dropped on every side first.
    """
    img = np.asarray(image, dtype=np.float64)
    if margin:
        img = img[margin:-margin, margin:-margin]
    if img.ndim != 2 or min(img.shape) < 2:
        raise CharacterizeError(f"TV needs an image of at least 2x2, got {img.shape}")
    dy = np.diff(img, axis=0, append=img[-1:, :])
    dx = np.diff(img, axis=1, append=img[:, -1:])
    return float(np.hypot(dx, dy).sum())


PSS_PHASES = np.array([0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi])


def pss_patterns(Lambda, n_side, axis):
    """The four sinusoidal SLM patterns ``(1 + sin(2 pi x / Lambda + xi)) / 2``."""
    x = np.arange(n_side) - n_side // 2
    prof = 0.5 * (1 + np.sin(2 * np.pi * x[None, :] / Lambda + PSS_PHASES[:, None]))
    if axis == 0:
        return prof[:, :, None] * np.ones((1, 1, n_side))
    return prof[:, None, :] * np.ones((1, n_side, 1))


def pss_measure(spectrum, Lambda, noise=None, seed=0):
    """Four-step phase-shifting readings, shape ``(2, 4)`` (row axis, col axis)."""
    s = np.asarray(spectrum, dtype=np.float64)
    n = s.shape[0]
    out = np.empty((2, 4))
    rng = np.random.default_rng(seed)
    for ax in (0, 1):
        pats = pss_patterns(Lambda, n, ax)
        if noise is None or noise.is_zero:
            out[ax] = (pats * s).sum(axis=(1, 2))
        else:
            ns = rng.normal(noise.mu_s, np.sqrt(noise.var_s), (4,) + s.shape)
            out[ax] = (pats * (s + ns)).sum(axis=(1, 2)) + rng.normal(noise.mu, np.sqrt(noise.var), 4)
    return out


@dataclass
class PSSEstimate:
    r: np.ndarray
    amplitude: np.ndarray
    unreliable: np.ndarray


def pss_estimate(y, Lambda, hint, min_amplitude=1e-9) -> PSSEstimate:
    """Deflection from four-phase readings ``y[..., 4]`` with a coarse hint.

    For ``y(xi) = a + a sin(theta + xi)``, ``y(0) - y(pi) = 2a sin(theta)`` and
    ``y(pi/2) - y(3pi/2) = 2a cos(theta)``. The hint selects the period.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != 4:
        raise CharacterizeError("PSS needs four phase-shifted readings per axis")
    sin_part = y[..., 0] - y[..., 2]
    cos_part = y[..., 1] - y[..., 3]
    phase = np.arctan2(sin_part, cos_part)
    amp = 0.5 * np.hypot(sin_part, cos_part)
    offset = 0.25 * y.sum(axis=-1)
    base = Lambda * phase / (2 * np.pi)
    r = base + Lambda * np.round((np.asarray(hint, dtype=float) - base) / Lambda)
    unreliable = (amp <= min_amplitude) | (amp < 1e-3 * np.abs(offset))
    return PSSEstimate(r=r, amplitude=amp, unreliable=unreliable)
