"""Reference attribution methods to compare the compensation scores against.

All three treat the model as a black box. The two local-surrogate methods
score one sample at a time; aggregation helpers combine per-sample scores
into per-group summaries for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import AttributionResult, Dataset, Diagnostics, Sample, fit_standardizer
from .errors import DimensionMismatch, EmptyBackground, ExactTooLarge
from .models import Model
from .stats import kernel_weights
from .surrogate import sample_vicinity, weighted_lasso

_EXACT_WIDTH_CAP = 20  # 2^M subset evaluations; past this use monte_carlo

# rng stream tags
_BG_STREAM = 0
_PERM_STREAM = 1


def z_score(data: Dataset, sample: Sample) -> AttributionResult:
    """Per-feature standardized deviation (x_i - mean_i) / std_i over `data`."""
    std = fit_standardizer(data)
    return AttributionResult(
        method="z",
        scores=std.transform(sample.x),
        sample_ids=(sample.id,),
    )


def lime_plus(model: Model, sample: Sample, nu: float, eta, n_s: int,
              seed) -> AttributionResult:
    """Slope of a kernel-weighted lasso fit to model deviations near the sample.

    The fit targets f(x) - y over draws around x_t. Subtracting the
    constant y moves only the unpenalized intercept, so the slope is
    computed from the raw model values and y never enters it; the reported
    scores are therefore exactly unchanged under shifts of y.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = np.full(len(sample.x), float(eta))
    vic = sample_vicinity(model, sample.x, eta, n_s, seed)
    w = kernel_weights(vic.points, sample.x, eta)
    fit = weighted_lasso(vic.points, vic.values, w, nu)
    return AttributionResult(
        method="lime+",
        scores=fit.slope,
        sample_ids=(sample.id,),
        diagnostics=Diagnostics(iterations=fit.sweeps, objective=None, converged=True),
    )


@dataclass(frozen=True)
class BackgroundDistribution:
    """Where absent features are drawn from when scoring subsets.

    kind "empirical" replays dataset rows (all of them when sample_count is
    None, which keeps evaluations deterministic); kind "box" draws
    uniformly from an axis-aligned box.
    """

    kind: str
    data: Dataset | None = None
    lows: np.ndarray | None = None
    highs: np.ndarray | None = None
    sample_count: int | None = None

    @classmethod
    def empirical(cls, data: Dataset, sample_count: int | None = None) -> "BackgroundDistribution":
        if data.n == 0:
            raise EmptyBackground("empirical background dataset is empty")
        if sample_count is not None and sample_count < 1:
            raise EmptyBackground(f"sample_count={sample_count} draws nothing")
        return cls(kind="empirical", data=data, sample_count=sample_count)

    @classmethod
    def uniform_box(cls, lows, highs, sample_count: int = 256) -> "BackgroundDistribution":
        lows = np.asarray(lows, dtype=float)
        highs = np.asarray(highs, dtype=float)
        if lows.shape != highs.shape or lows.ndim != 1:
            raise DimensionMismatch("lows and highs must be equal-length vectors")
        if not np.all(np.isfinite(lows)) or not np.all(np.isfinite(highs)):
            raise ValueError("box bounds must be finite")
        if np.any(lows >= highs):
            raise ValueError("box bounds need lows < highs componentwise")
        if sample_count < 1:
            raise EmptyBackground(f"sample_count={sample_count} draws nothing")
        return cls(kind="box", lows=lows, highs=highs, sample_count=sample_count)

    def draws(self, m: int, seed) -> np.ndarray:
        if self.kind == "empirical":
            assert self.data is not None
            X = self.data.X
            if X.shape[1] != m:
                raise DimensionMismatch(f"background width {X.shape[1]}, expected {m}")
            if self.sample_count is None:
                return X.copy()
            rng = np.random.default_rng(seed)
            replace = self.sample_count > len(X)
            idx = rng.choice(len(X), size=self.sample_count, replace=replace)
            return X[idx]
        assert self.lows is not None and self.highs is not None
        if len(self.lows) != m:
            raise DimensionMismatch(f"box width {len(self.lows)}, expected {m}")
        rng = np.random.default_rng(seed)
        return rng.uniform(self.lows, self.highs, size=(int(self.sample_count), m))


def _subset_value_fn(model: Model, x_t: np.ndarray, background: np.ndarray):
    """Mean model value with the masked coordinates pinned to x_t.

    Values are cached per mask. Constant offsets (such as subtracting the
    observed target) cancel in every marginal difference, so they are left
    out entirely; this also makes the scores exactly invariant under
    target translation.
    """
    cache: dict[int, float] = {}
    m = len(x_t)

    def value(mask: int) -> float:
        got = cache.get(mask)
        if got is not None:
            return got
        H = background.copy()
        for i in range(m):
            if mask >> i & 1:
                H[:, i] = x_t[i]
        v = float(np.mean(model.query_batch(H)))
        cache[mask] = v
        return v

    return value, cache


def sv_plus(model: Model, sample: Sample, background: BackgroundDistribution,
            mode: str = "exact", *, permutations: int = 10_000,
            seed: int = 0) -> AttributionResult:
    """Shapley split of the deviation f(x_t) - y between the features.

    The coalition value of a feature set is the background-averaged model
    value with those features pinned at the sample. One set of background
    draws is shared by every coalition, so exact mode is deterministic
    given the draws. monte_carlo averages marginal contributions over
    random feature orderings instead of enumerating all 2^M coalitions.
    """
    x_t = sample.x
    m = len(x_t)
    bg = background.draws(m, [seed, _BG_STREAM])
    value, cache = _subset_value_fn(model, x_t, bg)
    full = (1 << m) - 1

    if mode == "exact":
        if m > _EXACT_WIDTH_CAP:
            raise ExactTooLarge(
                f"exact enumeration over {m} features needs 2^{m} coalition values; "
                f"the cap is {_EXACT_WIDTH_CAP}, use mode='monte_carlo'")
        fact = [math.factorial(k) for k in range(m + 1)]
        weight = [fact[k] * fact[m - k - 1] / fact[m] for k in range(m)]
        scores = np.zeros(m)
        others = list(range(m))
        for i in range(m):
            rest = [j for j in others if j != i]
            for k in range(m):
                for combo in combinations(rest, k):
                    mask = 0
                    for j in combo:
                        mask |= 1 << j
                    scores[i] += weight[k] * (value(mask | 1 << i) - value(mask))
        evaluated = len(cache)
    elif mode == "monte_carlo":
        if permutations < 1:
            raise ValueError("permutations must be >= 1")
        rng = np.random.default_rng([seed, _PERM_STREAM])
        scores = np.zeros(m)
        for _ in range(permutations):
            order = rng.permutation(m)
            mask = 0
            prev = value(0)
            for i in order:
                mask |= 1 << int(i)
                cur = value(mask)
                scores[int(i)] += cur - prev
                prev = cur
        scores /= permutations
        evaluated = len(cache)
    else:
        raise ValueError(f"unknown mode {mode!r}, expected 'exact' or 'monte_carlo'")

    # ties the telescoped total back to the deviation the split explains
    deviation = value(full) - sample.y
    return AttributionResult(
        method="sv+",
        scores=scores,
        sample_ids=(sample.id,),
        diagnostics=Diagnostics(iterations=evaluated, objective=deviation, converged=True),
    )


def aggregate_group_z(results: Sequence[AttributionResult]) -> np.ndarray:
    """Group summary for z scores: mean of absolute per-sample scores."""
    if not results:
        raise ValueError("no results to aggregate")
    return np.mean([np.abs(r.scores) for r in results], axis=0)


def aggregate_group_lime(results: Sequence[AttributionResult]) -> tuple[np.ndarray, float]:
    """Group summary for lasso slopes: their mean vector and its l2 norm."""
    if not results:
        raise ValueError("no results to aggregate")
    mean = np.mean([r.scores for r in results], axis=0)
    return mean, float(np.linalg.norm(mean))


def aggregate_group_mean(results: Sequence[AttributionResult]) -> np.ndarray:
    """Plain mean of per-sample score vectors."""
    if not results:
        raise ValueError("no results to aggregate")
    return np.mean([r.scores for r in results], axis=0)
