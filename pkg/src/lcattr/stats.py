"""Local variance around each test point and the outlier score built on it.

The variance of the target near x is taken as a kernel-weighted mean of
squared model residuals over a holdout set. Sums use math.fsum, so the
result does not depend on row order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import DegenerateWeightsWarning, DimensionMismatch

SIGMA2_FLOOR = 1e-8


def kernel_weights(X_ref, x_t, eta) -> np.ndarray:
    """Gaussian density N(x_ref | x_t, diag(eta)) for each reference row.

    The normalizing constant is included, so values are comparable across
    eta choices; it cancels inside weighted means.
    """
    X_ref = np.asarray(X_ref, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = np.full(x_t.shape[-1], float(eta))
    if np.any(eta <= 0):
        raise ValueError("eta entries must be positive")
    if X_ref.shape[-1] != len(x_t) or len(eta) != len(x_t):
        raise DimensionMismatch(
            f"widths disagree: refs {X_ref.shape[-1]}, point {len(x_t)}, eta {len(eta)}")
    d2 = ((X_ref - x_t) ** 2 / eta).sum(axis=-1)
    m = len(x_t)
    norm = (2.0 * np.pi) ** (-m / 2.0) / np.sqrt(np.prod(eta))
    return norm * np.exp(-0.5 * d2)


def kernel_weight(x_ref, x_t, eta) -> float:
    return float(kernel_weights(np.asarray(x_ref, dtype=float)[None, :], x_t, eta)[0])


def weighted_residual_variance(residuals, weights, *, sigma2_floor: float = SIGMA2_FLOOR) -> float:
    """Weighted mean of squared residuals, floored.

    If every weight underflowed to zero the plain mean is used instead and
    a DegenerateWeightsWarning is emitted.
    """
    residuals = np.asarray(residuals, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if residuals.shape != weights.shape or residuals.ndim != 1 or len(residuals) == 0:
        raise DimensionMismatch("residuals and weights must be equal-length nonempty vectors")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    sq = residuals * residuals
    total = math.fsum(weights.tolist())
    if total == 0.0:
        warnings.warn(
            "all kernel weights underflowed; falling back to the unweighted mean",
            DegenerateWeightsWarning,
        )
        return max(math.fsum(sq.tolist()) / len(sq), sigma2_floor)
    num = math.fsum((weights * sq).tolist())
    return max(num / total, sigma2_floor)


def local_variance(model, holdout: Dataset, x_t, eta, *,
                   sigma2_floor: float = SIGMA2_FLOOR,
                   holdout_predictions=None) -> float:
    """Kernel-weighted squared-residual variance of the target near x_t.

    holdout_predictions lets a caller that already queried the model on the
    holdout rows avoid a second pass.
    """
    if holdout.n == 0:
        raise ValueError("holdout set is empty")
    X = holdout.X
    preds = np.asarray(
        holdout_predictions if holdout_predictions is not None else model.query_batch(X),
        dtype=float,
    )
    if len(preds) != holdout.n:
        raise DimensionMismatch(f"{len(preds)} predictions for {holdout.n} holdout rows")
    w = kernel_weights(X, x_t, eta)
    return weighted_residual_variance(holdout.y - preds, w, sigma2_floor=sigma2_floor)


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2: np.ndarray
    effective_weight_mass: np.ndarray


def loo_variances(model, data: Dataset, eta, *,
                  sigma2_floor: float = SIGMA2_FLOOR) -> VarianceEstimate:
    """Per-sample local variance, leaving each sample out of its own holdout."""
    if data.n < 2:
        raise ValueError("need at least 2 samples for leave-one-out variances")
    X = data.X
    preds = np.asarray(model.query_batch(X), dtype=float)
    resid = data.y - preds
    sigma2 = np.empty(data.n)
    mass = np.empty(data.n)
    for t in range(data.n):
        keep = np.arange(data.n) != t
        w = kernel_weights(X[keep], X[t], eta)
        mass[t] = math.fsum(w.tolist())
        sigma2[t] = weighted_residual_variance(resid[keep], w, sigma2_floor=sigma2_floor)
    return VarianceEstimate(sigma2=sigma2, effective_weight_mass=mass)


@dataclass(frozen=True)
class AnomalyReport:
    per_sample_score: np.ndarray
    aggregate_score: float
    threshold: float | None = None
    flagged: tuple[str, ...] = ()


def anomaly_score(data: Dataset, predictions, sigma2, *,
                  threshold: float | None = None) -> AnomalyReport:
    """Negative Gaussian log-likelihood of each observed target.

    Per sample: 0.5*ln(2*pi*sigma2_t) + (y_t - f_t)^2 / (2*sigma2_t).
    The aggregate is the plain mean. Samples whose score exceeds the
    threshold (if given) are flagged by id.
    """
    preds = np.asarray(predictions, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    if s2.ndim == 0:
        s2 = np.full(data.n, float(s2))
    if len(preds) != data.n or len(s2) != data.n:
        raise DimensionMismatch("predictions and sigma2 must match the dataset length")
    if np.any(s2 <= 0):
        raise ValueError("sigma2 entries must be positive")
    resid = data.y - preds
    per = 0.5 * np.log(2.0 * np.pi * s2) + resid * resid / (2.0 * s2)
    flagged: tuple[str, ...] = ()
    if threshold is not None:
        flagged = tuple(s.id for s, v in zip(data.samples, per) if v > threshold)
    return AnomalyReport(
        per_sample_score=per,
        aggregate_score=float(np.mean(per)),
        threshold=threshold,
        flagged=flagged,
    )
