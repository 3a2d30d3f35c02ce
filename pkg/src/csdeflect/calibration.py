"""Noise, PSF, bias and fidelity-radius estimation from calibration acquisitions.

Scale convention: ``z`` always denotes debiased measurements as returned by
``sensing.debias`` (so ``z = Phi_ss s`` without noise). The bias ``b`` and
the radius ``epsilon`` live in instrument scale, ``sqrt(N) z = sqrt(N) Phi_ss s
+ b + noise``, which is what the solver expects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import sensing


class CalibrationError(ValueError):
    pass


def estimate_measurement_noise(y0):
    """Mean and unbiased variance of opaque-pattern readings."""
    y0 = np.asarray(y0, dtype=np.float64).ravel()
    if y0.size < 2:
        raise CalibrationError("need at least two CCD pixels to estimate noise")
    return float(y0.mean()), float(y0.var(ddof=1))


def estimate_signal_noise_var(y1_no, var_hat, N):
    """Signal-noise variance from all-ones readings of a constant spectrum.

    Returns ``(var_s_hat, clamped)``; negative raw estimates are set to 0.
    """
    y1_no = np.asarray(y1_no, dtype=np.float64).ravel()
    if y1_no.size < 2:
        raise CalibrationError("need at least two CCD pixels to estimate noise")
    raw = (y1_no.var(ddof=1) - var_hat) / N
    return (max(0.0, float(raw)), bool(raw < 0))


def estimate_psf_and_mu_s(Y_no, op: sensing.SensingOperator, clamp=True):
    """No-object spectrum and signal-noise mean from a full-sampling acquisition.

    ``Y_no`` holds the M = N pattern rows (the all-ones row, if present, is
    ignored). Returns ``(s_no_hat, mu_s_hat, clamped)``.
    """
    if op.M != op.N:
        raise CalibrationError(f"PSF estimation requires full sampling, got M={op.M} < N={op.N}")
    Y = np.asarray(Y_no, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = Y[: op.N]
    s_tilde = sensing.invert_full(op, Y.mean(axis=1))
    mu_s = float(np.median(s_tilde))
    s_no = s_tilde - mu_s
    # the measurement-noise mean lands entirely on the first spectral pixel
    s_no[0] = 0.0
    clamped = False
    if clamp and np.any(s_no < 0):
        clamped = True
        s_no = np.maximum(s_no, 0.0)
    return s_no, mu_s, clamped


def noise_bias(op: sensing.SensingOperator, mu_s, mu):
    """``b = sqrt(N) Phi_ss (mu_s 1) + mu 1_M``."""
    return np.sqrt(op.N) * sensing.apply_ss(op, np.full(op.N, float(mu_s))) + float(mu)


def residual_norms_sq(Z_no, s_no_hat, b_hat, op: sensing.SensingOperator):
    """Per-pixel ``||sqrt(N) z_k - sqrt(N) Phi_ss s_no - b||^2``."""
    Z = np.asarray(Z_no, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != op.M:
        raise CalibrationError(f"expected {op.M} rows, got {Z.shape[0]}")
    rootN = np.sqrt(op.N)
    pred = rootN * sensing.apply_ss(op, np.ravel(s_no_hat)) + b_hat
    return ((rootN * Z - pred[:, None]) ** 2).sum(axis=0)


def estimate_epsilon(Z_no, s_no_hat, b_hat, op: sensing.SensingOperator, q=75.0):
    """Fidelity radius: square root of the ``q``-th percentile of residual energies."""
    Z = np.asarray(Z_no)
    if Z.size == 0:
        raise CalibrationError("no calibration columns")
    r2 = residual_norms_sq(Z, s_no_hat, b_hat, op)
    return float(np.sqrt(np.percentile(r2, q)))


def input_snr(z, s_ref, op: sensing.SensingOperator):
    """``20 log10(||Phi_ss s|| / ||z - Phi_ss s||)``; ``inf`` when they coincide."""
    sig = sensing.apply_ss(op, np.ravel(s_ref))
    ns = np.linalg.norm(sig)
    if ns == 0:
        raise CalibrationError("input SNR undefined for a zero reference spectrum")
    err = np.linalg.norm(np.asarray(z, dtype=np.float64) - sig)
    if err == 0:
        return float("inf")
    return float(20 * np.log10(ns / err))


@dataclass
class CalibrationReport:
    mu_hat: float
    var_hat: float
    mu_s_hat: float
    var_s_hat: float
    s_no_hat: np.ndarray
    n_c_used: int
    epsilon_by_m: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    sensing: dict = field(default_factory=dict)

    def bias(self, op: sensing.SensingOperator) -> np.ndarray:
        return noise_bias(op, self.mu_s_hat, self.mu_hat)

    def epsilon(self, M: int) -> float:
        try:
            return self.epsilon_by_m[int(M)]
        except KeyError:
            raise CalibrationError(f"no fidelity radius calibrated for M={M}; "
                                   f"available: {sorted(self.epsilon_by_m)}") from None

    def to_dict(self) -> dict:
        return {
            "mu_hat": self.mu_hat,
            "var_hat": self.var_hat,
            "mu_s_hat": self.mu_s_hat,
            "var_s_hat": self.var_s_hat,
            "s_no_max": float(np.max(self.s_no_hat)),
            "n_c_used": self.n_c_used,
            "epsilon_by_m": {str(k): v for k, v in sorted(self.epsilon_by_m.items())},
            "flags": dict(sorted(self.flags.items())),
            "sensing": self.sensing,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, s_no_hat) -> "CalibrationReport":
        return cls(mu_hat=d["mu_hat"], var_hat=d["var_hat"], mu_s_hat=d["mu_s_hat"],
                   var_s_hat=d["var_s_hat"], s_no_hat=np.asarray(s_no_hat, dtype=np.float64),
                   n_c_used=int(d["n_c_used"]),
                   epsilon_by_m={int(k): float(v) for k, v in d.get("epsilon_by_m", {}).items()},
                   flags=dict(d.get("flags", {})), sensing=dict(d.get("sensing", {})))


def calibrate(y_opaque, y_ones, Y_full, op: sensing.SensingOperator, m_list=()) -> CalibrationReport:
    """Run the whole calibration chain.

    ``Y_full`` is the ``(N + 1) x N_C`` no-object acquisition at full sampling
    (last row under the all-ones pattern). Fidelity radii are computed for
    every M in ``m_list`` from the nested row prefixes of that acquisition.
    """
    mu, var = estimate_measurement_noise(y_opaque)
    var_s, var_clamped = estimate_signal_noise_var(y_ones, var, op.N)
    Y_full = np.asarray(Y_full, dtype=np.float64)
    if Y_full.shape[0] != op.N + 1:
        raise CalibrationError("full-sampling acquisition must have N + 1 rows")
    s_no, mu_s, psf_clamped = estimate_psf_and_mu_s(Y_full[: op.N], op)
    eps = {}
    for M in sorted(set(int(m) for m in m_list)):
        sub = op.subsample(M)
        Z = sensing.debias(Y_full[:M], Y_full[op.N], op.N)
        eps[M] = estimate_epsilon(Z, s_no, noise_bias(sub, mu_s, mu), sub)
    return CalibrationReport(mu_hat=mu, var_hat=var, mu_s_hat=mu_s, var_s_hat=var_s,
                             s_no_hat=s_no, n_c_used=int(Y_full.shape[1]), epsilon_by_m=eps,
                             flags={"var_s_clamped": var_clamped, "s_no_clamped": psf_clamped},
                             sensing=op.descriptor())
