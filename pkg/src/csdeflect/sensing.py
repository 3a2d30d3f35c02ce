"""Spread-spectrum Hadamard sensing operator.

The compressive operator is ``Phi_ss = H_Omega^T diag(sigma)``: the spectrum is
modulated by a random sign sequence, transformed by an orthonormal
Walsh-Hadamard transform (Sylvester ordering) and restricted to the rows in
``omega``. The optical form ``Phi_opt = (sqrt(N) Phi_ss + 1 1^T) / 2`` only
contains on/off SLM pixels.

Every function accepts either a single length-N vector or an ``(N, K)`` block
of column vectors, which is how MMV acquisitions are processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SensingError(ValueError):
    """Invalid sensing configuration or operand shape."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def fwht(v):
    """Orthonormal Walsh-Hadamard transform along axis 0 (Sylvester order).

    The transform is symmetric and orthogonal, hence its own inverse.
    """
    x = np.array(v, dtype=np.float64, copy=True)
    n = x.shape[0]
    if not _is_pow2(n):
        raise SensingError(f"FWHT length must be a power of 2, got {n}")
    tail = x.shape[1:]
    y = np.empty_like(x)
    h = 1
    while h < n:
        # butterflies of span h, ping-ponging between two buffers
        xv = x.reshape((n // (2 * h), 2, h) + tail)
        yv = y.reshape((n // (2 * h), 2, h) + tail)
        np.add(xv[:, 0], xv[:, 1], out=yv[:, 0])
        np.subtract(xv[:, 0], xv[:, 1], out=yv[:, 1])
        x, y = y, x
        h *= 2
    x *= 1.0 / np.sqrt(n)
    return x


@dataclass(frozen=True)
class SensingOperator:
    """Immutable spread-spectrum operator regenerated from ``(seed, n_side, M)``."""

    seed: int
    n_side: int
    M: int
    plain: bool = False
    sigma: np.ndarray = field(repr=False, compare=False, default=None)
    omega: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def N(self) -> int:
        return self.n_side * self.n_side

    def descriptor(self) -> dict:
        return {"seed": int(self.seed), "n_side": int(self.n_side), "M": int(self.M),
                "plain": bool(self.plain)}

    @classmethod
    def from_descriptor(cls, d: dict) -> "SensingOperator":
        return build_sensing(int(d["seed"]), int(d["n_side"]), int(d["M"]),
                             plain=bool(d.get("plain", False)))

    def subsample(self, M: int) -> "SensingOperator":
        """Operator with the same seed and the first ``M`` rows of this one."""
        return build_sensing(self.seed, self.n_side, M, plain=self.plain)


def build_sensing(seed: int, n_side: int, M: int, plain: bool = False) -> SensingOperator:
    """Draw sigma (Rademacher, sigma[0] = +1) and an M-subset omega of [N].

    Omega is the first M entries of a seeded permutation of [N], so operators
    sharing a seed are nested: rows of a smaller M are a prefix of a larger M.
    ``plain=True`` sets sigma to all ones (conventional Hadamard sensing).
    """
    if not _is_pow2(n_side):
        raise SensingError(f"n_side must be a power of 2, got {n_side}")
    N = n_side * n_side
    if M < 1 or M > N:
        raise SensingError(f"invalid subsampling: M={M} for N={N}")
    rng = np.random.default_rng(seed)
    sigma = rng.choice(np.array([-1.0, 1.0]), size=N)
    sigma[0] = 1.0
    if plain:
        sigma = np.ones(N)
    omega = rng.permutation(N)[:M]
    sigma.setflags(write=False)
    omega.setflags(write=False)
    return SensingOperator(seed=seed, n_side=n_side, M=M, plain=plain,
                           sigma=sigma, omega=omega)


def _check_len(x, n, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[0] != n:
        raise SensingError(f"{what}: expected leading dimension {n}, got {x.shape}")
    return x


def _col(vec, like):
    # broadcast a length-N vector against (N,) or (N, K)
    return vec.reshape((-1,) + (1,) * (like.ndim - 1))


def apply_ss(op: SensingOperator, s):
    """``Phi_ss s``: modulate, transform, keep rows ``omega``."""
    s = _check_len(s, op.N, "apply_ss")
    if s.ndim > 2:
        raise SensingError("apply_ss expects a vector or a 2-D block")
    return fwht(_col(op.sigma, s) * s)[op.omega]


def adjoint_ss(op: SensingOperator, y):
    """``Phi_ss^T y``: zero-fill rows outside omega, transform, modulate."""
    y = _check_len(y, op.M, "adjoint_ss")
    full = np.zeros((op.N,) + y.shape[1:])
    full[op.omega] = y
    return _col(op.sigma, full) * fwht(full)


def apply_opt(op: SensingOperator, s):
    """Optical (biased, binary-pattern) measurements ``Phi_opt s``."""
    s = _check_len(s, op.N, "apply_opt")
    return 0.5 * (np.sqrt(op.N) * apply_ss(op, s) + s.sum(axis=0))


def adjoint_opt(op: SensingOperator, y):
    y = _check_len(y, op.M, "adjoint_opt")
    total = y.sum(axis=0)
    return 0.5 * (np.sqrt(op.N) * adjoint_ss(op, y) + total)


def pattern_matrix(op: SensingOperator) -> np.ndarray:
    """Materialize ``Phi_opt`` as an ``(M, N)`` array of SLM on/off patterns."""
    return apply_opt(op, np.eye(op.N)).copy()


def debias(y_opt, y_on, N: int):
    """Remove the optical bias: ``z = (2 y_opt - y_on) / sqrt(N)``.

    ``y_on`` is the measurement under the all-ones pattern (scalar, or one value
    per column for MMV blocks). Without noise ``z == Phi_ss s``.
    """
    y_opt = np.asarray(y_opt, dtype=np.float64)
    y_on = np.asarray(y_on, dtype=np.float64)
    return (2.0 * y_opt - y_on) / np.sqrt(N)


def invert_full(op: SensingOperator, y_opt):
    """Exact inverse of ``Phi_opt`` at full sampling (needs sigma[0] = +1)."""
    if op.M != op.N:
        raise SensingError(f"Phi_opt is not invertible with M={op.M} < N={op.N}")
    if op.sigma[0] != 1.0:
        raise SensingError("Phi_opt is singular unless sigma[0] = +1")
    u = adjoint_ss(op, y_opt)
    out = 2.0 * u
    out[0] = out[0] - u.sum(axis=0)
    return out / np.sqrt(op.N)


def operator_norm(apply, adjoint, n: int, iters: int = 100, seed: int = 0) -> float:
    """Largest singular value of a linear map by power iteration."""
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        w = adjoint(apply(x))
        lam_new = np.linalg.norm(w)
        if lam_new == 0:
            return 0.0
        x = w / lam_new
        if abs(lam_new - lam) <= 1e-12 * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(lam))
