"""Nonnegative analysis basis pursuit denoising by Chambolle-Pock.

Solves::

    min_s ||Psi^* s||_1  s.t.  ||(sqrt(N) z - b) - sqrt(N) Phi_ss s||_2 <= eps,  s >= 0

where ``z`` are debiased measurements (``sensing.debias``) and ``b``, ``eps``
come from calibration in instrument scale. Internally the constraint is
divided by ``sqrt(N)`` so that the stacked operator ``K = [Psi^*; Phi_ss]``
has norm at most ``sqrt(2)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import sensing, wavelet

log = logging.getLogger(__name__)


def prox_l1(u, gamma):
    """Soft thresholding ``(|u| - gamma)_+ sign(u)``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    u = np.asarray(u, dtype=np.float64)
    return np.sign(u) * np.maximum(np.abs(u) - gamma, 0.0)


def proj_l2ball(u, center, radius):
    """Euclidean projection onto ``{v : ||v - center|| <= radius}``."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    u = np.asarray(u, dtype=np.float64)
    d = u - center
    nrm = np.linalg.norm(d)
    if nrm <= radius:
        return u.copy()
    return center + d * (radius / nrm)


def proj_nonneg(u):
    return np.maximum(np.asarray(u, dtype=np.float64), 0.0)


def output_snr(s_true, s_hat) -> float:
    """``20 log10(||s|| / ||s - s_hat||)`` in dB; ``inf`` on exact recovery."""
    s_true = np.asarray(s_true, dtype=np.float64)
    ref = np.linalg.norm(s_true)
    if ref == 0:
        raise ValueError("output SNR undefined for a zero reference")
    err = np.linalg.norm(s_true - np.asarray(s_hat, dtype=np.float64))
    if err == 0:
        return float("inf")
    return float(20.0 * np.log10(ref / err))


@dataclass
class SolverConfig:
    tau: float | None = None
    sigma_step: float | None = None
    theta: float = 1.0
    step_ratio: float = 1000.0
    max_iters: int = 5000
    rel_tol: float = 1e-4
    min_iters: int = 10
    polish_iters: int = 500
    feas_atol: float = 1e-7
    frame: wavelet.FrameConfig = field(default_factory=wavelet.FrameConfig)


@dataclass
class ReconstructionResult:
    spectrum: np.ndarray
    iterations: int
    rel_change: float
    residual: float
    epsilon: float
    objective: float
    converged: bool

    def metrics(self) -> dict:
        return {
            "iterations": self.iterations,
            "rel_change": self.rel_change,
            "residual": self.residual,
            "epsilon": self.epsilon,
            "objective": self.objective,
            "converged": self.converged,
        }


_NORM_CACHE: dict = {}


def stacked_norm(op: sensing.SensingOperator, frame: wavelet.FrameConfig) -> float:
    """``||K||`` for ``K = [Psi^*; Phi_ss]`` by power iteration (cached per shape)."""
    key = (op.descriptor()["seed"], op.n_side, op.M, op.plain, frame)
    if key not in _NORM_CACHE:
        n = op.n_side

        def fwd(x):
            return x

        def gram(x):
            img = x.reshape(n, n)
            return (img + sensing.adjoint_ss(op, sensing.apply_ss(op, x)).reshape(n, n)).ravel()

        # Psi Psi^* = I, so K^T K = I + Phi^T Phi
        _NORM_CACHE[key] = sensing.operator_norm(fwd, gram, op.N, iters=200)
    return _NORM_CACHE[key]


def objective(s, frame: wavelet.FrameConfig = wavelet.FrameConfig()) -> float:
    return float(np.abs(wavelet.analysis(s, frame)).sum())


def fidelity_residual(z, op, b, s) -> float:
    """``||(sqrt(N) z - b) - sqrt(N) Phi_ss s||`` in instrument scale."""
    rootN = np.sqrt(op.N)
    return float(np.linalg.norm(rootN * np.asarray(z) - b - rootN * sensing.apply_ss(op, np.ravel(s))))


def _project_fidelity(x, op, center, radius):
    # rows of Phi_ss are orthonormal, so the projection onto
    # {s : ||Phi_ss s - center|| <= radius} only rescales the residual
    r = sensing.apply_ss(op, x.ravel()) - center
    nr = np.linalg.norm(r)
    if nr <= radius:
        return x
    return x - sensing.adjoint_ss(op, r * (1.0 - radius / nr)).reshape(x.shape)


def _polish(x, op, center, radius, cfg):
    """Alternate fidelity and nonnegativity projections until both hold."""
    target = radius * (1 + 5e-4) + cfg.feas_atol
    for _ in range(cfg.polish_iters):
        if np.linalg.norm(sensing.apply_ss(op, x.ravel()) - center) <= target:
            break
        x = proj_nonneg(_project_fidelity(x, op, center, radius))
    return x


def reconstruct(z, op: sensing.SensingOperator, b=None, epsilon: float = 0.0,
                cfg: SolverConfig | None = None, x0=None) -> ReconstructionResult:
    """Recover a nonnegative spectrum from debiased measurements ``z``.

    ``b`` (length M) and ``epsilon`` are in instrument scale, as produced by
    :mod:`csdeflect.calibration`; ``b=None`` means no bias.
    """
    cfg = cfg or SolverConfig()
    frame = cfg.frame
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (op.M,):
        raise sensing.SensingError(f"expected {op.M} measurements, got {z.shape}")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    n = op.n_side
    rootN = np.sqrt(op.N)
    b = np.zeros(op.M) if b is None else np.asarray(b, dtype=np.float64)
    center = z - b / rootN
    radius = epsilon / rootN
    # the problem is positively homogeneous in (center, radius): solve at unit scale
    scale = float(np.linalg.norm(center))
    if scale <= radius or scale == 0.0:
        x = np.zeros((n, n))
        return ReconstructionResult(spectrum=x, iterations=0, rel_change=0.0,
                                    residual=fidelity_residual(z, op, b, x),
                                    epsilon=float(epsilon), objective=0.0, converged=True)
    center = center / scale
    radius = radius / scale

    L = stacked_norm(op, frame)
    root_ratio = np.sqrt(cfg.step_ratio)
    tau = cfg.tau if cfg.tau is not None else 0.99 / (L * root_ratio)
    sig = cfg.sigma_step if cfg.sigma_step is not None else 0.99 * root_ratio / L
    assert tau * sig * L * L < 1.0, "step sizes violate the convergence condition"

    if x0 is None:
        x = proj_nonneg(sensing.adjoint_ss(op, center)).reshape(n, n)
    else:
        x = np.array(x0, dtype=np.float64).reshape(n, n) / scale
    xbar = x.copy()
    p = np.zeros((frame.n_bands, n, n))
    q = np.zeros(op.M)

    rel = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        # dual of ||.||_1 : projection onto the l_inf unit ball
        p = np.clip(p + sig * wavelet.analysis(xbar, frame), -1.0, 1.0)
        # dual of the ball indicator via Moreau: v - sig * proj(v / sig)
        v = q + sig * sensing.apply_ss(op, xbar.ravel())
        q = v - sig * proj_l2ball(v / sig, center, radius)
        grad = wavelet.synthesis(p, frame) + sensing.adjoint_ss(op, q).reshape(n, n)
        x_new = proj_nonneg(x - tau * grad)
        xbar = x_new + cfg.theta * (x_new - x)
        rel = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1e-12)
        x = x_new
        if it >= cfg.min_iters and rel < cfg.rel_tol:
            break

    x = _polish(x, op, center, radius, cfg) * scale
    converged = bool(rel < cfg.rel_tol)
    if not converged:
        warnings.warn(f"Chambolle-Pock stopped at max_iters={cfg.max_iters} "
                      f"with relative change {rel:.3g}", RuntimeWarning, stacklevel=2)
    resid = fidelity_residual(z, op, b, x)
    if resid > epsilon * (1 + 1e-3) + 1e-9 * rootN:
        log.debug("fidelity residual %.4g exceeds epsilon %.4g", resid, epsilon)
    return ReconstructionResult(spectrum=x, iterations=it, rel_change=float(rel),
                                residual=resid, epsilon=float(epsilon),
                                objective=objective(x, frame), converged=converged)
