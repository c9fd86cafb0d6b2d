"""Proximal-gradient solver for the per-variable compensation vector.

Given samples (x_t, y_t), per-sample variances sigma2_t and a query-only
model f, it seeks the delta minimizing

    mean_t (y_t - f(x_t + delta))^2 / (2 sigma2_t)
        + lam/2 * |delta|_2^2 + nu * |delta|_1

by alternating a gradient step, with the gradient of f replaced by the
slope of a ridge fit over fresh Gaussian draws, and a soft-threshold step
for the l1 term. The step size decays geometrically, so late iterations
freeze the iterate rather than bounce around the sampled gradient noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AttributionResult, Dataset, Diagnostics, LcHyperParams, Standardizer
from .models import Model, StandardizedModel
from .surrogate import LinearFit, ridge_gradient, sample_vicinity

# consecutive small-step iterations required before declaring convergence
_PATIENCE = 3

# rng stream tags so initialization and per-iteration draws never collide
_INIT_STREAM = 0
_VICINITY_STREAM = 1


@dataclass(frozen=True)
class SolverState:
    """Snapshot of one iteration, mostly for debugging and tests."""

    delta: np.ndarray
    kappa: float
    iteration: int
    objective: float
    converged: bool


def soft_threshold(phi, threshold: float) -> np.ndarray:
    """Shrink each entry toward zero by threshold; entries inside it become 0."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    phi = np.asarray(phi, dtype=float)
    return np.sign(phi) * np.maximum(np.abs(phi) - threshold, 0.0)


def phi_update(delta_old, gradients: Sequence[LinearFit], residuals, sigma2,
               kappa: float, lam: float) -> np.ndarray:
    """Pre-shrinkage iterate: (1 - kappa*lam) delta + kappa * mean_t r_t/s2_t * beta_t."""
    delta_old = np.asarray(delta_old, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if not len(gradients) == len(residuals) == len(sigma2):
        raise ValueError("gradients, residuals and sigma2 must have one entry per sample")
    betas = np.stack([g.slope for g in gradients])
    g = (betas * (residuals / sigma2)[:, None]).mean(axis=0)
    return (1.0 - kappa * lam) * delta_old + kappa * g


def lc_objective(model: Model, data: Dataset, sigma2, delta, lam: float, nu: float) -> float:
    """Penalized mean negative-log-likelihood term evaluated at delta."""
    delta = np.asarray(delta, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    preds = np.asarray(model.query_batch(data.X + delta), dtype=float)
    resid = data.y - preds
    return float(
        np.mean(resid * resid / (2.0 * sigma2))
        + 0.5 * lam * float(delta @ delta)
        + nu * float(np.abs(delta).sum())
    )


def _penalized(resid, sigma2, delta, lam: float, nu: float) -> float:
    return float(
        np.mean(resid * resid / (2.0 * sigma2))
        + 0.5 * lam * float(delta @ delta)
        + nu * float(np.abs(delta).sum())
    )


def solve_lc(
    model: Model,
    data: Dataset,
    sigma2,
    params: LcHyperParams,
    standardizer: Standardizer | None = None,
    *,
    delta0=None,
    task_key: int = 0,
) -> AttributionResult:
    """Fit one compensation vector for all samples in `data`.

    The iteration runs in standardized coordinates when a standardizer is
    given (identity otherwise); the returned scores are mapped back to
    original feature units. delta0 overrides the default random-near-zero
    start, in standardized units. task_key decorrelates the draw streams
    of otherwise identical solves (one per sample or group in a run).

    If the iterate never settles, the delta with the best recorded
    objective is returned and diagnostics.converged is False.
    """
    m = data.m
    eta = params.eta_vector(m)
    if params.n_s < m + 1:
        raise ValueError(f"n_s={params.n_s} cannot support gradient fits in {m} dims")
    std = standardizer if standardizer is not None else Standardizer.identity(m)
    view = StandardizedModel(model, std)
    Z = std.transform(data.X)
    y = data.y
    s2 = np.asarray(sigma2, dtype=float)
    if s2.ndim == 0:
        s2 = np.full(data.n, float(s2))
    if len(s2) != data.n:
        raise ValueError(f"{len(s2)} variances for {data.n} samples")
    if np.any(s2 <= 0):
        raise ValueError("sigma2 entries must be positive")

    if delta0 is not None:
        delta = np.array(delta0, dtype=float)
        if delta.shape != (m,):
            raise ValueError(f"delta0 must have shape ({m},)")
    else:
        init_rng = np.random.default_rng([params.seed, task_key, _INIT_STREAM])
        delta = init_rng.uniform(-1e-3, 1e-3, m)

    history: list[float] = []
    best_obj = np.inf
    best_delta = delta.copy()
    streak = 0
    converged = False
    iterations = 0

    for it in range(params.max_iter):
        kappa = params.kappa0 * params.kappa_decay**it
        centers = Z + delta
        resid = y - np.asarray(view.query_batch(centers), dtype=float)
        obj = _penalized(resid, s2, delta, params.lam, params.nu)
        history.append(obj)
        if obj < best_obj:
            best_obj, best_delta = obj, delta.copy()

        fits = [
            ridge_gradient(
                sample_vicinity(
                    view, centers[t], eta, params.n_s,
                    seed=[params.seed, task_key, _VICINITY_STREAM, it, t],
                ),
                params.epsilon,
            )
            for t in range(data.n)
        ]
        phi = phi_update(delta, fits, resid, s2, kappa, params.lam)
        new_delta = soft_threshold(phi, kappa * params.nu)
        step = float(np.linalg.norm(new_delta - delta))
        delta = new_delta
        iterations = it + 1
        if step < params.delta_tol:
            streak += 1
            if streak >= _PATIENCE:
                converged = True
                break
        else:
            streak = 0

    final_resid = y - np.asarray(view.query_batch(Z + delta), dtype=float)
    final_obj = _penalized(final_resid, s2, delta, params.lam, params.nu)
    history.append(final_obj)
    if final_obj < best_obj:
        best_obj, best_delta = final_obj, delta.copy()

    if not converged:
        delta = best_delta
        reported_obj = best_obj
    else:
        reported_obj = final_obj

    return AttributionResult(
        method="lc",
        scores=delta * std.stds,
        sample_ids=data.ids,
        diagnostics=Diagnostics(
            iterations=iterations,
            objective=reported_obj,
            converged=converged,
            objective_history=tuple(history),
            delta_standardized=tuple(float(v) for v in delta),
        ),
    )
