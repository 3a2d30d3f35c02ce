"""Synthetic deflection spectra and noisy MMV acquisitions.

Spectra live on an ``n_side x n_side`` SLM grid whose spectral origin (zero
deflection) is the pixel ``(n_side // 2, n_side // 2)``. Spot offsets ``r``
are expressed in SLM pixels relative to that origin, in array-axis order.
CCD pixels are indexed ``(row, col)`` on a ``grid`` whose optical axis sits at
its geometric center.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import sensing


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class InstrumentGeometry:
    f_schlieren: float = 0.050
    slm_pitch: float = 36e-6
    ccd_pitch: float = 7.8989e-6
    n_side: int = 64

    def __post_init__(self):
        if min(self.f_schlieren, self.slm_pitch, self.ccd_pitch, self.n_side) <= 0:
            raise SceneError("geometry parameters must be strictly positive")

    @property
    def origin(self) -> np.ndarray:
        return np.array([self.n_side // 2, self.n_side // 2], dtype=float)

    def slope_for_power(self, power: float) -> float:
        """Radial slope of ``|r_k|`` (SLM px per CCD px) produced by a thin lens."""
        return power * self.f_schlieren * self.ccd_pitch / self.slm_pitch


@dataclass(frozen=True)
class NoiseModel:
    """Means and variances of the signal noise and measurement noise."""

    mu_s: float = 0.0
    var_s: float = 0.0
    mu: float = 0.0
    var: float = 0.0

    def __post_init__(self):
        if self.var_s < 0 or self.var < 0:
            raise SceneError("noise variances must be nonnegative")

    @classmethod
    def table1(cls) -> "NoiseModel":
        return cls(mu_s=1.1313e-4, var_s=7.8747e-4, mu=3.0999, var=1.0936)

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls()

    @property
    def is_zero(self) -> bool:
        return self == NoiseModel()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SceneModel:
    """What the instrument looks at.

    ``kind`` is one of ``multi-spot`` (same spectrum at every CCD pixel),
    ``plano-convex`` (thin lens of ``power`` dioptres), ``grating-lens``
    (lens plus a radial sawtooth deflection) or ``no-object`` (PSF at the
    origin).
    """

    kind: str = "no-object"
    positions: tuple = ()
    amplitude: float = 1.0
    rho: float = 3.0
    power: float = 0.0
    grating_period: float = 8.0
    grating_depth: float = 2.0
    psf_width: float = 3.0
    grid: tuple = (1, 1)

    KINDS = ("multi-spot", "plano-convex", "grating-lens", "no-object")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SceneError(f"unknown scene kind {self.kind!r}")
        if self.rho <= 0 or self.psf_width <= 0:
            raise SceneError("spot widths must be positive")
        if not np.isfinite(self.power):
            raise SceneError("lens power must be finite")
        if self.kind == "grating-lens" and self.grating_period <= 0:
            raise SceneError("grating period must be positive")

    @property
    def n_pixels(self) -> int:
        return int(self.grid[0] * self.grid[1])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["positions"] = [list(map(float, p)) for p in self.positions]
        if not np.isscalar(self.amplitude):
            d["amplitude"] = [float(a) for a in self.amplitude]
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneModel":
        d = dict(d)
        d["positions"] = tuple(tuple(p) for p in d.get("positions", ()))
        d["grid"] = tuple(d.get("grid", (1, 1)))
        if isinstance(d.get("amplitude"), list):
            d["amplitude"] = tuple(d["amplitude"])
        return cls(**d)


def gaussian_spots(positions, amplitude=1.0, rho=3.0, n_side=64) -> np.ndarray:
    """Sum of isotropic Gaussian spots at absolute grid ``positions``.

    ``amplitude`` may be a scalar or one value per spot.
    """
    if rho <= 0:
        raise SceneError("rho must be positive")
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    amps = np.broadcast_to(np.asarray(amplitude, dtype=float), (len(pos),))
    if np.any(pos < 0) or np.any(pos > n_side - 1):
        raise SceneError("spot position outside the spectral grid")
    ax = np.arange(n_side, dtype=float)
    out = np.zeros((n_side, n_side))
    for (p0, p1), a in zip(pos, amps):
        out += a * np.outer(np.exp(-(ax - p0) ** 2 / (2 * rho**2)),
                            np.exp(-(ax - p1) ** 2 / (2 * rho**2)))
    return out


def random_spot_positions(q: int, n_side: int, seed: int, margin: float = 8.0) -> np.ndarray:
    """``q`` spot centers drawn uniformly away from the grid border."""
    if q < 0 or n_side - 1 - 2 * margin < 0:
        raise SceneError(f"cannot place {q} spots {margin} px away from the border of a {n_side} grid")
    rng = np.random.default_rng(seed)
    return rng.uniform(margin, n_side - 1 - margin, size=(q, 2))


def _sawtooth(x, period):
    return x / period - np.floor(x / period)


def ccd_offsets(grid) -> np.ndarray:
    """CCD offsets from the optical axis, in CCD pixels, shape ``grid + (2,)``."""
    rows, cols = grid
    i, j = np.meshgrid(np.arange(rows) - (rows - 1) / 2.0,
                       np.arange(cols) - (cols - 1) / 2.0, indexing="ij")
    return np.stack((i, j), axis=-1)


def spot_offsets(scene: SceneModel, geometry: InstrumentGeometry) -> np.ndarray:
    """Ground-truth spot offsets ``r_k`` (SLM px) for every CCD pixel.

    Multi-spot scenes report their dominant (largest-amplitude) spot, the
    one a single-spot localizer should find.
    """
    d = ccd_offsets(scene.grid)
    if scene.kind == "no-object":
        return np.zeros_like(d)
    if scene.kind == "multi-spot":
        if not scene.positions:
            return np.zeros_like(d)
        amps = np.broadcast_to(np.asarray(scene.amplitude, dtype=float), (len(scene.positions),))
        main = np.asarray(scene.positions[int(np.argmax(amps))], dtype=float)
        return np.broadcast_to(main - geometry.origin, d.shape).copy()
    r = geometry.slope_for_power(scene.power) * d
    if scene.kind == "grating-lens":
        dist = np.linalg.norm(d, axis=-1, keepdims=True)
        unit = np.divide(d, dist, out=np.zeros_like(d), where=dist > 0)
        r = r + scene.grating_depth * _sawtooth(dist, scene.grating_period) * unit
    return r


def _render_offset(r, width, amplitude, geometry):
    center = geometry.origin + r
    half = geometry.n_side // 2
    if np.any(np.abs(r) > half - 1):
        raise SceneError(f"deflection {r} exceeds the SLM region (half-width {half}); "
                         "the lens power is too large for this grid")
    return gaussian_spots([center], amplitude, width, geometry.n_side)


def spectrum_for_pixel(scene: SceneModel, geometry: InstrumentGeometry, k) -> np.ndarray:
    """Spectrum seen by CCD pixel ``k = (row, col)``."""
    rows, cols = scene.grid
    if not (0 <= k[0] < rows and 0 <= k[1] < cols):
        raise SceneError(f"CCD pixel {k} outside grid {scene.grid}")
    if scene.kind == "multi-spot":
        if not scene.positions:
            return np.zeros((geometry.n_side, geometry.n_side))
        return gaussian_spots(scene.positions, scene.amplitude, scene.rho, geometry.n_side)
    r = spot_offsets(scene, geometry)[k[0], k[1]]
    return _render_offset(r, scene.psf_width, scene.amplitude, geometry)


def scene_spectra(scene: SceneModel, geometry: InstrumentGeometry, columns=None) -> np.ndarray:
    """``(N, len(columns))`` matrix of vectorized spectra in row-major CCD order."""
    cols = range(scene.n_pixels) if columns is None else columns
    out = []
    for c in cols:
        k = divmod(int(c), scene.grid[1])
        out.append(spectrum_for_pixel(scene, geometry, k).ravel())
    return np.array(out).T.reshape(geometry.n_side**2, -1)


@dataclass
class MeasurementSet:
    """``(M + 1) x N_C`` acquisition: M pattern rows then the all-ones row."""

    Y: np.ndarray
    op: sensing.SensingOperator
    grid: tuple = (1, 1)
    seed: int = 0
    scene: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.op.M

    @property
    def n_columns(self) -> int:
        return self.Y.shape[1]

    @property
    def y_opt(self) -> np.ndarray:
        return self.Y[: self.M]

    @property
    def y_on(self) -> np.ndarray:
        return self.Y[self.M]

    def debiased(self, columns=None) -> np.ndarray:
        """Debiased measurements ``(2 y - y_on) / sqrt(N)`` per column."""
        Y = self.Y if columns is None else self.Y[:, columns]
        return sensing.debias(Y[: self.M], Y[self.M], self.op.N)

    def subsample(self, M: int) -> "MeasurementSet":
        """Keep the first M pattern rows (nested operators share a seed)."""
        op = self.op.subsample(M)
        Y = np.vstack((self.Y[:M], self.Y[self.M : self.M + 1]))
        return MeasurementSet(Y, op, self.grid, self.seed, self.scene, self.noise)

    def sidecar(self) -> dict:
        return {
            "M": self.M,
            "N_C": self.n_columns,
            "n_side": self.op.n_side,
            "seed": self.seed,
            "grid": list(self.grid),
            "sensing": self.op.descriptor(),
            "scene": self.scene,
            "noise": self.noise,
        }


def _column_noise(seed, col, N, M, noise: NoiseModel):
    rng = np.random.default_rng([seed, col])
    ns = rng.normal(noise.mu_s, np.sqrt(noise.var_s), N)
    n = rng.normal(noise.mu, np.sqrt(noise.var), M)
    # 1^T n_s' for an independent signal-noise draw, plus its own n'
    ns_on = rng.normal(N * noise.mu_s, np.sqrt(N * noise.var_s))
    n_on = rng.normal(noise.mu, np.sqrt(noise.var))
    return ns, n, ns_on + n_on


def acquire_mmv(spectra, op: sensing.SensingOperator, noise: NoiseModel = NoiseModel(),
                seed: int = 0, columns=None) -> np.ndarray:
    """Noisy MMV acquisition ``Y = Phi_opt (S + N_s) + N`` plus the all-ones row.

    Each column draws its noise from ``(seed, column index)`` so that results
    do not depend on how columns are batched. ``columns`` gives the global
    column indices of ``spectra`` (defaults to ``0..N_C-1``).
    """
    S = np.asarray(spectra, dtype=np.float64)
    if S.ndim == 1:
        S = S[:, None]
    if S.shape[0] != op.N:
        raise sensing.SensingError(f"spectra have {S.shape[0]} rows, operator expects {op.N}")
    n_c = S.shape[1]
    cols = np.arange(n_c) if columns is None else np.asarray(columns)
    Y = np.empty((op.M + 1, n_c))
    if noise.is_zero:
        Y[: op.M] = sensing.apply_opt(op, S)
        Y[op.M] = S.sum(axis=0)
        return Y
    Sn = S.copy()
    on = np.empty(n_c)
    meas = np.empty((op.M, n_c))
    for j, c in enumerate(cols):
        ns, n, on_noise = _column_noise(seed, int(c), op.N, op.M, noise)
        Sn[:, j] += ns
        meas[:, j] = n
        on[j] = on_noise
    Y[: op.M] = sensing.apply_opt(op, Sn) + meas
    Y[op.M] = S.sum(axis=0) + on
    return Y


def acquire_scene(scene: SceneModel, geometry: InstrumentGeometry, op: sensing.SensingOperator,
                  noise: NoiseModel = NoiseModel(), seed: int = 0, chunk: int = 512) -> MeasurementSet:
    """Render every CCD pixel of ``scene`` and acquire it, column block by block."""
    if geometry.n_side != op.n_side:
        raise sensing.SensingError("geometry and sensing operator disagree on n_side")
    n_c = scene.n_pixels
    Y = np.empty((op.M + 1, n_c))
    for start in range(0, n_c, chunk):
        cols = np.arange(start, min(start + chunk, n_c))
        Y[:, cols] = acquire_mmv(scene_spectra(scene, geometry, cols), op, noise, seed, cols)
    return MeasurementSet(Y, op, tuple(scene.grid), seed, scene.to_dict(), noise.to_dict())


def acquire_single_pattern(spectra, pattern: str, noise: NoiseModel = NoiseModel(),
                           seed: int = 0) -> np.ndarray:
    """One calibration row per CCD pixel under an ``"opaque"`` or ``"ones"`` pattern."""
    S = np.atleast_2d(np.asarray(spectra, dtype=np.float64).T).T
    N, n_c = S.shape
    out = np.empty(n_c)
    for c in range(n_c):
        rng = np.random.default_rng([seed, c, 1 if pattern == "opaque" else 2])
        n = rng.normal(noise.mu, np.sqrt(noise.var))
        if pattern == "opaque":
            out[c] = n
        elif pattern == "ones":
            out[c] = S[:, c].sum() + rng.normal(N * noise.mu_s, np.sqrt(N * noise.var_s)) + n
        else:
            raise SceneError(f"unknown calibration pattern {pattern!r}")
    return out


def coarse_pixel_average(Y, window) -> np.ndarray:
    """Mean of the measurement columns in ``window`` (a coarse CCD pixel)."""
    Y = Y.Y if isinstance(Y, MeasurementSet) else np.asarray(Y)
    idx = list(window)
    if not idx:
        raise SceneError("empty averaging window")
    return Y[:, idx].mean(axis=1)
