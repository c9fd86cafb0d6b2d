"""Local linear views of a black-box model.

Two fits share the VicinitySample plumbing: a ridge fit whose slope serves
as a sampled gradient estimate, and a weighted lasso used by the local
attribution baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NoConvergence, SingularSystem

SeedLike = int | Sequence[int] | np.random.Generator


@dataclass(frozen=True)
class VicinitySample:
    """Draws around a center point and the model's values there."""

    points: np.ndarray
    values: np.ndarray
    center: np.ndarray


@dataclass(frozen=True)
class LinearFit:
    slope: np.ndarray
    intercept: float
    residual_rms: float
    sweeps: int = 0
    objective_history: tuple[float, ...] = ()


def sample_vicinity(model, center, eta, n_s: int, seed: SeedLike) -> VicinitySample:
    """n_s Gaussian draws from N(center, diag(eta)) with the model evaluated once."""
    center = np.asarray(center, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = np.full(len(center), float(eta))
    if len(eta) != len(center):
        raise DimensionMismatch(f"eta has {len(eta)} entries for width {len(center)}")
    if np.any(eta <= 0):
        raise ValueError("eta entries must be positive")
    if n_s < len(center) + 1:
        raise ValueError(f"n_s={n_s} draws cannot support a fit in {len(center)} dims")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    points = center + rng.standard_normal((n_s, len(center))) * np.sqrt(eta)
    values = np.asarray(model.query_batch(points), dtype=float)
    return VicinitySample(points=points, values=values, center=center)


def ridge_gradient(vicinity: VicinitySample, epsilon: float = 1e-6) -> LinearFit:
    """Slope of the ridge-regularized least-squares plane through the draws.

    Centering uses the draw means, and the normal matrix is the raw
    (unnormalized) outer-product sum plus epsilon on the diagonal. With
    epsilon=0 a singular system raises instead of being patched.
    """
    X = vicinity.points
    f = vicinity.values
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    xbar = X.mean(axis=0)
    fbar = f.mean()
    Xc = X - xbar
    G = Xc.T @ Xc
    G[np.diag_indices_from(G)] += epsilon
    b = Xc.T @ (f - fbar)
    try:
        slope = np.linalg.solve(G, b)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"normal matrix is singular and epsilon={epsilon}") from e
    if epsilon == 0.0 and not np.all(np.isfinite(slope)):
        raise SingularSystem("normal matrix is numerically singular")
    intercept = float(fbar - slope @ xbar)
    resid = f - intercept - X @ slope
    return LinearFit(
        slope=slope,
        intercept=intercept,
        residual_rms=float(np.sqrt(np.mean(resid * resid))),
    )


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def weighted_lasso(points, targets, weights, nu: float, *,
                   max_sweeps: int = 10_000, tol: float = 1e-8) -> LinearFit:
    """Coordinate descent for sum_m w_m (y_m - b0 - b.x_m)^2 / 2 + nu*|b|_1.

    The intercept is unpenalized and eliminated by weighted centering,
    which is exact for this objective. Convergence is max coordinate
    change below tol within one sweep; running past max_sweeps raises.
    """
    X = np.asarray(points, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2 or len(y) != len(X) or len(w) != len(X):
        raise DimensionMismatch(
            f"points {X.shape}, targets {y.shape}, weights {w.shape} do not align")
    if nu < 0:
        raise ValueError("nu must be >= 0")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with positive total")

    total = w.sum()
    xbar = (w @ X) / total
    ybar = float(w @ y) / total
    Xc = X - xbar
    yc = y - ybar
    wXc = w[:, None] * Xc
    col_scale = np.einsum("ij,ij->j", wXc, Xc)  # sum_m w_m x~_mj^2 per column

    m = X.shape[1]
    beta = np.zeros(m)
    r = yc.copy()  # residual yc - Xc @ beta, maintained incrementally
    history: list[float] = []
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        biggest = 0.0
        for j in range(m):
            if col_scale[j] <= 0.0:
                continue  # constant column: slope pinned at zero
            rho = float(wXc[:, j] @ r) + col_scale[j] * beta[j]
            bj = _soft(rho, nu) / col_scale[j]
            change = bj - beta[j]
            if change != 0.0:
                r -= Xc[:, j] * change
                beta[j] = bj
            biggest = max(biggest, abs(change))
        history.append(float(w @ (r * r) / 2.0 + nu * np.abs(beta).sum()))
        if biggest < tol:
            break
    else:
        raise NoConvergence(
            f"weighted lasso did not settle within {max_sweeps} sweeps", max_sweeps)

    intercept = ybar - float(beta @ xbar)
    resid = y - intercept - X @ beta
    return LinearFit(
        slope=beta,
        intercept=intercept,
        residual_rms=float(np.sqrt(np.mean(resid * resid))),
        sweeps=sweeps,
        objective_history=tuple(history),
    )
