"""Domain types shared by every stage: samples, datasets, scaling, results.

All heavy numerics live elsewhere; this module is plain data plus the
standardization transform, which the solver and the reporting layer both
need to agree on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstantColumn, DimensionMismatch

METHODS = ("lc", "z", "lime+", "sv+")


def _float_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a flat vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sample:
    """One observation: feature vector x, observed target y, bookkeeping ids."""

    x: np.ndarray
    y: float
    id: str
    group_key: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _float_vector(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "id", str(self.id))


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of samples with a shared feature naming.

    Construction is deliberately permissive about cell values: NaN cells,
    duplicate ids and ragged rows are representable so that
    validate_dataset can report them. Matrix accessors raise if rows are
    ragged.
    """

    samples: tuple[Sample, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))

    @classmethod
    def from_arrays(
        cls,
        X,
        y,
        feature_names: Sequence[str] | None = None,
        ids: Sequence[str] | None = None,
        group_keys: Sequence[str | None] | None = None,
    ) -> "Dataset":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or len(y) != len(X):
            raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not align")
        names = tuple(feature_names) if feature_names else tuple(f"x{i}" for i in range(X.shape[1]))
        ids = [str(i) for i in range(len(X))] if ids is None else [str(s) for s in ids]
        groups = [None] * len(X) if group_keys is None else list(group_keys)
        samples = tuple(
            Sample(x=row, y=val, id=sid, group_key=g)
            for row, val, sid, g in zip(X, y, ids, groups)
        )
        return cls(samples=samples, feature_names=names)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def m(self) -> int:
        return len(self.feature_names)

    @property
    def X(self) -> np.ndarray:
        widths = {len(s.x) for s in self.samples}
        if len(widths) != 1 or widths != {self.m}:
            raise DimensionMismatch(
                f"rows have widths {sorted(widths)}, feature names give {self.m}"
            )
        out = np.stack([s.x for s in self.samples])
        out.setflags(write=False)
        return out

    @property
    def y(self) -> np.ndarray:
        out = np.array([s.y for s in self.samples])
        out.setflags(write=False)
        return out

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.samples)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        picked = tuple(self.samples[i] for i in indices)
        return Dataset(samples=picked, feature_names=self.feature_names)

    def groups(self) -> Mapping[str | None, "Dataset"]:
        """Split by group_key, preserving first-appearance order."""
        order: dict[str | None, list[int]] = {}
        for i, s in enumerate(self.samples):
            order.setdefault(s.group_key, []).append(i)
        return {k: self.subset(ix) for k, ix in order.items()}


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    message: str
    row: int | None = None
    column: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    issues: tuple[ValidationIssue, ...] = ()


def validate_dataset(data: Dataset) -> ValidationReport:
    """Check structural and value-level invariants, reporting every issue.

    Passing means: nonempty, at least two features, consistent row widths,
    all cells and targets finite, unique sample ids.
    """
    issues: list[ValidationIssue] = []
    if data.n == 0:
        issues.append(ValidationIssue("empty", "dataset has no samples"))
        return ValidationReport(passed=False, issues=tuple(issues))
    if data.m < 2:
        issues.append(ValidationIssue(
            "narrow", f"need at least 2 feature columns, got {data.m}"))
    for row, s in enumerate(data.samples):
        if len(s.x) != data.m:
            issues.append(ValidationIssue(
                "width", f"row {row} has {len(s.x)} features, expected {data.m}", row=row))
            continue
        for j, v in enumerate(s.x):
            if not np.isfinite(v):
                col = data.feature_names[j]
                issues.append(ValidationIssue(
                    "nonfinite", f"row {row} column {col!r} is {v}", row=row, column=col))
        if not np.isfinite(s.y):
            issues.append(ValidationIssue(
                "nonfinite", f"row {row} target is {s.y}", row=row))
    seen: dict[str, int] = {}
    for row, s in enumerate(data.samples):
        if s.id in seen:
            issues.append(ValidationIssue(
                "duplicate_id", f"id {s.id!r} appears at rows {seen[s.id]} and {row}", row=row))
        else:
            seen[s.id] = row
    return ValidationReport(passed=not issues, issues=tuple(issues))


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map to zero mean, unit spread, and back."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _float_vector(self.means))
        object.__setattr__(self, "stds", _float_vector(self.stds))
        if len(self.means) != len(self.stds):
            raise DimensionMismatch("means and stds differ in length")
        if np.any(self.stds <= 0):
            raise ValueError("stds must be strictly positive")

    @classmethod
    def identity(cls, m: int) -> "Standardizer":
        return cls(means=np.zeros(m), stds=np.ones(m))

    @property
    def m(self) -> int:
        return len(self.means)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        self._check(X)
        return (X - self.means) / self.stds

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        self._check(Z)
        return Z * self.stds + self.means

    def _check(self, arr: np.ndarray) -> None:
        if arr.shape[-1] != self.m:
            raise DimensionMismatch(
                f"vector width {arr.shape[-1]} does not match standardizer width {self.m}")


def fit_standardizer(data: Dataset, *, constant_floor: float | None = None) -> Standardizer:
    """Column means and sample stds (n-1 denominator) of a dataset.

    A column with std below 1e-12 raises ConstantColumn unless a
    constant_floor is supplied, in which case its std is clamped there.
    """
    if data.n < 2:
        raise ValueError("need at least 2 samples to fit a standardizer")
    X = data.X
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    for j, s in enumerate(stds):
        if s < 1e-12:
            if constant_floor is None:
                raise ConstantColumn(data.feature_names[j], float(s))
            stds = stds.copy()
            stds[j] = max(float(s), float(constant_floor))
    return Standardizer(means=means, stds=stds)


@dataclass(frozen=True)
class LcHyperParams:
    """Knobs of the compensation solver.

    lam and nu are the l2/l1 penalty strengths, kappa0 the initial step
    size with geometric decay kappa_decay per iteration. eta is the
    per-feature vicinity variance (scalar broadcasts); n_s the draw count
    per gradient estimate; epsilon the ridge term of that estimate.
    """

    lam: float = 0.5
    nu: float = 0.1
    kappa0: float = 0.1
    kappa_decay: float = 0.98
    max_iter: int = 500
    delta_tol: float = 1e-4
    epsilon: float = 1e-6
    n_s: int = 1000
    eta: float | tuple[float, ...] = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0 or self.nu < 0:
            raise ValueError("penalty strengths lam and nu must be >= 0")
        if not 0 < self.kappa0:
            raise ValueError("kappa0 must be positive")
        if not 0 < self.kappa_decay <= 1:
            raise ValueError("kappa_decay must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.delta_tol <= 0:
            raise ValueError("delta_tol must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.n_s < 2:
            raise ValueError("n_s must be >= 2")
        eta = self.eta
        if np.ndim(eta) > 0:
            eta = tuple(float(v) for v in eta)
            object.__setattr__(self, "eta", eta)
            if any(v <= 0 for v in eta):
                raise ValueError("eta entries must be positive")
        elif eta <= 0:
            raise ValueError("eta must be positive")

    def eta_vector(self, m: int) -> np.ndarray:
        if np.ndim(self.eta) == 0:
            return np.full(m, float(self.eta))
        eta = np.asarray(self.eta, dtype=float)
        if len(eta) != m:
            raise DimensionMismatch(f"eta has {len(eta)} entries for {m} features")
        return eta


@dataclass(frozen=True)
class Diagnostics:
    """Solver bookkeeping attached to every attribution result."""

    iterations: int = 0
    objective: float | None = None
    converged: bool = True
    objective_history: tuple[float, ...] | None = None
    delta_standardized: tuple[float, ...] | None = None


@dataclass(frozen=True)
class AttributionResult:
    """Per-variable scores from one method over one sample or group."""

    method: str
    scores: np.ndarray
    sample_ids: tuple[str, ...]
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        object.__setattr__(self, "scores", _float_vector(self.scores))
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))
