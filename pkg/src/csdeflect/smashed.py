"""Spot localization by matched filtering, directly in the compressed domain.

The correlation ``q(p) = <c, g_p>`` between a backprojection ``c`` and a
Gaussian template centered at the absolute grid position ``p`` is separable:
``q(p) = a(p0)^T C a(p1)`` with ``a(t)_i = exp(-(i - t)^2 / (2 rho^2))``.
Templates are clipped at the grid edge rather than wrapped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sensing


class NoPeakError(ValueError):
    pass


@dataclass
class CentroidEstimate:
    position: np.ndarray  # absolute sub-pixel grid position
    offset: np.ndarray  # position minus the spectral origin (the deflection r)
    peak: float
    coarse: tuple
    iterations: int
    boundary: bool = False
    moved_far: bool = False

    @property
    def valid(self) -> bool:
        return not (self.boundary or self.moved_far)


def origin(n_side: int) -> np.ndarray:
    return np.array([n_side // 2, n_side // 2], dtype=float)


def _profile(t, n_side, rho):
    i = np.arange(n_side, dtype=float)
    return np.exp(-(i - t) ** 2 / (2.0 * rho**2))


def gaussian_template(rho, r, n_side) -> np.ndarray:
    """Unit-peak Gaussian of standard deviation ``rho`` centered at origin + r."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    p = origin(n_side) + np.asarray(r, dtype=float)
    return np.outer(_profile(p[0], n_side, rho), _profile(p[1], n_side, rho))


def debias_for_filtering(y, y_on, N, b=None):
    """Debiased measurements for filtering; ``b`` (instrument scale) is optional."""
    z = sensing.debias(y, y_on, N)
    if b is not None:
        z = z - np.asarray(b, dtype=np.float64) / np.sqrt(N)
    return z


def correlation_grid(c, rho) -> np.ndarray:
    """``<c, g_p>`` for every integer position ``p`` of the grid."""
    c = np.asarray(c, dtype=np.float64)
    G = _gaussian_matrix(c.shape[0], rho)
    return G @ c @ G


def _q_and_grad(C, P, rho):
    """Correlation and its gradient for a batch ``C (K, n, n)`` at ``P (K, 2)``."""
    n = C.shape[-1]
    i = np.arange(n, dtype=float)
    u0 = i - P[:, :1]
    u1 = i - P[:, 1:]
    a0 = np.exp(-u0**2 / (2.0 * rho**2))
    a1 = np.exp(-u1**2 / (2.0 * rho**2))
    Ca1 = np.matmul(C, a1[:, :, None])[:, :, 0]
    a0C = np.matmul(a0[:, None, :], C)[:, 0, :]
    q = (a0 * Ca1).sum(axis=1)
    g0 = (a0 * u0 * Ca1).sum(axis=1) / rho**2
    g1 = (a0C * a1 * u1).sum(axis=1) / rho**2
    return q, np.stack((g0, g1), axis=1)


def refine(C, start, rho, sign=None, step0=0.5, tol=1e-4, max_iter=100):
    """Backtracking ascent of ``sign * q(p)`` for a batch of images.

    The first line search tries a move of ``step0`` px along the normalized
    gradient and halves it until the objective improves; later searches start
    from twice the last accepted step (capped at ``step0``). A pixel stops once
    no step of at least ``tol`` improves, or after ``max_iter`` iterations.
    Returns positions, correlation values and iteration counts.
    """
    C = np.asarray(C, dtype=np.float64)
    K = C.shape[0]
    hi = np.array(C.shape[1:], dtype=float) - 1.0
    p = np.array(start, dtype=float).reshape(K, 2)
    sign = np.ones(K) if sign is None else np.broadcast_to(np.asarray(sign, dtype=float), (K,))
    q, g = _q_and_grad(C, p, rho)
    q, g = sign * q, sign[:, None] * g
    t = np.full(K, float(step0))
    active = np.ones(K, dtype=bool)
    iters = np.zeros(K, dtype=int)
    for _ in range(max_iter):
        gn = np.linalg.norm(g, axis=1)
        active &= gn > 0
        if not active.any():
            break
        iters[active] += 1
        pending = np.flatnonzero(active)
        d = g[pending] / gn[pending, None]
        while pending.size:
            cand = np.clip(p[pending] + t[pending, None] * d, 0.0, hi)
            qc, gc = _q_and_grad(C[pending], cand, rho)
            qc, gc = sign[pending] * qc, sign[pending, None] * gc
            up = qc > q[pending]
            acc = pending[up]
            p[acc], q[acc], g[acc] = cand[up], qc[up], gc[up]
            t[acc] = np.minimum(2.0 * t[acc], step0)
            pending, d = pending[~up], d[~up]
            t[pending] *= 0.5
            small = t[pending] < tol
            # no improving step left: converged
            active[pending[small]] = False
            pending, d = pending[~small], d[~small]
    return p, sign * q, iters


def _gaussian_matrix(n, rho):
    i = np.arange(n, dtype=float)
    return np.exp(-(i[:, None] - i[None, :]) ** 2 / (2.0 * rho**2))


def locate_batch(C, rho) -> list:
    """Coarse integer peak of each image's correlation, then sub-pixel refinement.

    Refinement runs on a zero-padded window of half-width ``8 rho`` around
    the coarse peak; zero padding is exactly the clipped-template convention
    and the truncated Gaussian tail is below ``exp(-32)``.
    """
    C = np.asarray(C, dtype=np.float64)
    K, n = C.shape[0], C.shape[-1]
    G = _gaussian_matrix(n, rho)
    # G C G for every image with plain 2-D products (G is symmetric)
    X = (C.reshape(K * n, n) @ G).reshape(K, n, n)
    Q = (X.transpose(0, 2, 1).reshape(K * n, n) @ G).reshape(K, n, n).transpose(0, 2, 1)
    flat = np.abs(Q).reshape(K, -1)
    best = np.argmax(flat, axis=1)
    ok = flat[np.arange(K), best] > 0
    k = np.stack(np.unravel_index(best, (n, n)), axis=1)
    sign = np.where(Q.reshape(K, -1)[np.arange(K), best] >= 0, 1.0, -1.0)

    w = int(np.ceil(8 * rho))
    padded = np.zeros((K, n + 2 * w, n + 2 * w))
    padded[:, w:w + n, w:w + n] = C
    span = np.arange(2 * w + 1)
    rows = (k[:, 0, None] + span)[:, :, None]
    cols = (k[:, 1, None] + span)[:, None, :]
    win = padded[np.arange(K)[:, None, None], rows, cols]
    p, q, it = refine(win, np.full((K, 2), float(w)), rho, sign)
    p = p - w + k

    out = []
    o = origin(n)
    for j in range(K):
        if not ok[j]:
            out.append(None)
            continue
        pj = np.clip(p[j], 0.0, n - 1.0)
        out.append(CentroidEstimate(
            position=pj, offset=pj - o, peak=float(q[j]),
            coarse=(int(k[j, 0]), int(k[j, 1])), iterations=int(it[j]),
            boundary=bool(k[j].min() == 0 or k[j].max() == n - 1),
            moved_far=bool(np.max(np.abs(pj - k[j])) > 1.5)))
    return out


def locate(C, rho) -> CentroidEstimate:
    """Single-image version of :func:`locate_batch`."""
    est = locate_batch(np.asarray(C, dtype=np.float64)[None], rho)[0]
    if est is None:
        raise NoPeakError("correlation is identically zero; no spot to locate")
    return est


def centroid_direct(s_hat, rho=3.0) -> CentroidEstimate:
    """Matched-filter spot position in a (reconstructed) spectrum."""
    s = np.asarray(s_hat, dtype=np.float64)
    if s.ndim == 1:
        n = int(round(np.sqrt(s.size)))
        s = s.reshape(n, n)
    if not np.all(np.isfinite(s)):
        raise ValueError("spectrum contains non-finite values")
    return locate(s, rho)


def backproject(z, op: sensing.SensingOperator) -> np.ndarray:
    """``Phi_ss^T z`` reshaped to the spectral grid (one image per column)."""
    c = sensing.adjoint_ss(op, z)
    n = op.n_side
    return c.reshape((n, n) + c.shape[1:])


def centroid_compressed(z, op: sensing.SensingOperator, rho=3.0) -> CentroidEstimate:
    """Smashed filter: matched filtering of ``Phi_ss^T z`` without reconstruction."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (op.M,):
        raise sensing.SensingError(f"expected {op.M} measurements, got {z.shape}")
    return locate(backproject(z, op), rho)
