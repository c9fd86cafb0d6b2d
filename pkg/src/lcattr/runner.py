"""End-to-end orchestration: ingest, score, attribute, report.

run() is what the CLI calls; it is equally usable from Python. Reports
serialize to JSON with sorted keys so that identical configurations
produce byte-identical files (the wall-time entry in meta is the one
intentionally varying field).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    BackgroundDistribution,
    aggregate_group_lime,
    aggregate_group_mean,
    aggregate_group_z,
    lime_plus,
    sv_plus,
)
from .core import (
    AttributionResult,
    Dataset,
    LcHyperParams,
    METHODS,
    Sample,
    fit_standardizer,
)
from .ingest import ingest_csv
from .models import MexicanHat, StandardizedModel, parse_model_spec
from .solver import solve_lc
from .stats import AnomalyReport, anomaly_score, loo_variances

_EXACT_SV_CAP = 20

# rng stream tag composed into per-sample lasso seeds; sv+ deliberately
# shares one seed across samples so the background draws are common
_LIME_STREAM = 3


@dataclass(frozen=True)
class RunConfig:
    model: str
    data: str
    target: str
    out: str | None = None
    methods: tuple[str, ...] = ("lc",)
    group_by: str | None = None
    params: LcHyperParams = field(default_factory=LcHyperParams)
    sigma2: str | float = "loo"
    background: str = "empirical"
    threshold: float | None = None
    strict: bool = False
    workers: int = 1
    constant_floor: float | None = None
    lime_nu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}, expected a subset of {METHODS}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if isinstance(self.sigma2, str):
            if self.sigma2 != "loo":
                raise ValueError(f"sigma2 must be 'loo' or a number, got {self.sigma2!r}")
        elif float(self.sigma2) <= 0:
            raise ValueError("constant sigma2 must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class ReportRecord:
    key: str
    sample_ids: tuple[str, ...]
    outlier_score: float
    flagged: bool
    scores: dict[str, tuple[float, ...]]
    diagnostics: dict[str, dict]
    aggregates: dict[str, float]
    errors: dict[str, str]


@dataclass
class AttributionReport:
    feature_names: tuple[str, ...]
    methods: tuple[str, ...]
    grouped: bool
    records: list[ReportRecord]
    anomaly: AnomalyReport
    config: dict
    meta: dict

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "methods": list(self.methods),
            "grouped": self.grouped,
            "records": [
                {
                    "key": r.key,
                    "sample_ids": list(r.sample_ids),
                    "outlier_score": r.outlier_score,
                    "flagged": r.flagged,
                    "scores": {k: list(v) for k, v in r.scores.items()},
                    "diagnostics": r.diagnostics,
                    "aggregates": r.aggregates,
                    "errors": r.errors,
                }
                for r in self.records
            ],
            "anomaly": {
                "per_sample_score": [float(v) for v in self.anomaly.per_sample_score],
                "aggregate_score": self.anomaly.aggregate_score,
                "threshold": self.anomaly.threshold,
                "flagged": list(self.anomaly.flagged),
            },
            "config": self.config,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def any_nonconverged(self) -> bool:
        for r in self.records:
            d = r.diagnostics.get("lc")
            if d is not None and not d.get("converged", True):
                return True
        return False


def parse_background(spec: str, data: Dataset) -> BackgroundDistribution:
    """'empirical[:COUNT]' replays dataset rows; 'box:LO:HI[:COUNT]' is uniform."""
    parts = spec.split(":")
    if parts[0] == "empirical":
        count = int(parts[1]) if len(parts) > 1 else None
        return BackgroundDistribution.empirical(data, sample_count=count)
    if parts[0] == "box":
        if len(parts) not in (3, 4):
            raise ValueError(f"box background needs box:LO:HI[:COUNT], got {spec!r}")
        lo, hi = float(parts[1]), float(parts[2])
        count = int(parts[3]) if len(parts) == 4 else 256
        return BackgroundDistribution.uniform_box(
            np.full(data.m, lo), np.full(data.m, hi), sample_count=count)
    raise ValueError(f"unknown background spec {spec!r}")


def _diag_dict(result: AttributionResult) -> dict:
    d = result.diagnostics
    return {
        "iterations": d.iterations,
        "objective": d.objective,
        "converged": d.converged,
    }


def _map_ordered(fn, count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def run(config: RunConfig) -> AttributionReport:
    """Execute one full attribution pass and (if config.out is set) write it."""
    started = time.monotonic()
    model = parse_model_spec(config.model)
    data = ingest_csv(config.data, config.target, group_by=config.group_by)
    std = fit_standardizer(data, constant_floor=config.constant_floor)
    view = StandardizedModel(model, std)
    Z = std.transform(data.X)
    std_data = Dataset.from_arrays(
        Z, data.y, feature_names=data.feature_names,
        ids=data.ids, group_keys=[s.group_key for s in data.samples])

    predictions = np.asarray(model.query_batch(data.X), dtype=float)

    params = config.params
    eta = params.eta_vector(data.m)
    if config.sigma2 == "loo":
        if data.n < 2:
            raise ValueError("leave-one-out variances need at least 2 samples; "
                             "pass a constant sigma2 instead")
        # weights live in standardized coordinates; residuals are unaffected
        sigma2 = loo_variances(view, std_data, eta).sigma2
    else:
        sigma2 = np.full(data.n, float(config.sigma2))

    anomaly = anomaly_score(data, predictions, sigma2, threshold=config.threshold)
    flagged_ids = set(anomaly.flagged)

    background = None
    if "sv+" in config.methods:
        background = parse_background(config.background, data)
    lime_nu = config.lime_nu if config.lime_nu is not None else params.nu

    def baseline_scores(idx: int) -> tuple[dict, dict, dict]:
        """z / lime+ / sv+ for one sample; failures land in the errors dict."""
        sample = data.samples[idx]
        scores: dict[str, AttributionResult] = {}
        errors: dict[str, str] = {}
        if "z" in config.methods:
            try:
                scores["z"] = AttributionResult(
                    method="z", scores=std.transform(sample.x), sample_ids=(sample.id,))
            except Exception as e:
                errors["z"] = f"{type(e).__name__}: {e}"
        if "lime+" in config.methods:
            try:
                zs = Sample(x=Z[idx], y=sample.y, id=sample.id, group_key=sample.group_key)
                scores["lime+"] = lime_plus(
                    view, zs, lime_nu, eta, params.n_s,
                    seed=[params.seed, _LIME_STREAM, idx])
            except Exception as e:
                errors["lime+"] = f"{type(e).__name__}: {e}"
        if "sv+" in config.methods:
            try:
                mode = "exact" if data.m <= _EXACT_SV_CAP else "monte_carlo"
                scores["sv+"] = sv_plus(
                    model, sample, background, mode, seed=params.seed)
            except Exception as e:
                errors["sv+"] = f"{type(e).__name__}: {e}"
        diags = {k: _diag_dict(v) for k, v in scores.items()}
        return ({k: tuple(float(x) for x in v.scores) for k, v in scores.items()},
                diags, errors)

    records: list[ReportRecord] = []
    if config.group_by is None:
        def one_sample(idx: int) -> ReportRecord:
            sample = data.samples[idx]
            scores, diags, errors = baseline_scores(idx)
            aggregates: dict[str, float] = {}
            if "lc" in config.methods:
                try:
                    res = solve_lc(
                        model, data.subset([idx]), sigma2[idx:idx + 1], params,
                        standardizer=std, task_key=idx)
                    scores["lc"] = tuple(float(v) for v in res.scores)
                    diags["lc"] = _diag_dict(res)
                except Exception as e:
                    errors["lc"] = f"{type(e).__name__}: {e}"
            return ReportRecord(
                key=sample.id,
                sample_ids=(sample.id,),
                outlier_score=float(anomaly.per_sample_score[idx]),
                flagged=sample.id in flagged_ids,
                scores=scores,
                diagnostics=diags,
                aggregates=aggregates,
                errors=errors,
            )
        records = _map_ordered(one_sample, data.n, config.workers)
    else:
        group_indices: dict[str, list[int]] = {}
        for i, s in enumerate(data.samples):
            group_indices.setdefault(str(s.group_key), []).append(i)
        keys = list(group_indices)

        def one_group(gi: int) -> ReportRecord:
            key = keys[gi]
            idxs = group_indices[key]
            subset = data.subset(idxs)
            per_sample = [baseline_scores(i) for i in idxs]
            scores: dict[str, tuple[float, ...]] = {}
            diags: dict[str, dict] = {}
            aggregates: dict[str, float] = {}
            errors: dict[str, str] = {}
            for method, agg in (("z", aggregate_group_z),
                                ("lime+", None), ("sv+", aggregate_group_mean)):
                if method not in config.methods:
                    continue
                fails = [e[method] for _, _, e in per_sample if method in e]
                if fails:
                    errors[method] = fails[0]
                    continue
                results = [
                    AttributionResult(method=method, scores=np.array(s[method]),
                                      sample_ids=("x",))
                    for s, _, _ in per_sample
                ]
                if method == "lime+":
                    mean, norm = aggregate_group_lime(results)
                    scores[method] = tuple(float(v) for v in mean)
                    aggregates["lime+_mean_l2"] = norm
                else:
                    scores[method] = tuple(float(v) for v in agg(results))
            if "lc" in config.methods:
                try:
                    res = solve_lc(
                        model, subset, sigma2[idxs], params,
                        standardizer=std, task_key=gi)
                    scores["lc"] = tuple(float(v) for v in res.scores)
                    diags["lc"] = _diag_dict(res)
                    aggregates["lc_l2sq"] = float(res.scores @ res.scores)
                except Exception as e:
                    errors["lc"] = f"{type(e).__name__}: {e}"
            return ReportRecord(
                key=key,
                sample_ids=subset.ids,
                outlier_score=float(np.mean(anomaly.per_sample_score[idxs])),
                flagged=any(sid in flagged_ids for sid in subset.ids),
                scores=scores,
                diagnostics=diags,
                aggregates=aggregates,
                errors=errors,
            )
        records = _map_ordered(one_group, len(keys), config.workers)

    report = AttributionReport(
        feature_names=data.feature_names,
        methods=config.methods,
        grouped=config.group_by is not None,
        records=records,
        anomaly=anomaly,
        config={
            "model": config.model,
            "data": str(config.data),
            "target": config.target,
            "group_by": config.group_by,
            "methods": list(config.methods),
            "sigma2": config.sigma2,
            "background": config.background,
            "threshold": config.threshold,
            "strict": config.strict,
            "workers": config.workers,
            "params": asdict(params),
        },
        meta={
            "package": "lcattr",
            "version": __version__,
            "wall_time_s": round(time.monotonic() - started, 6),
        },
    )
    if config.out is not None:
        Path(config.out).write_text(report.to_json() + "\n", encoding="utf-8")
    return report


def emit_plot_series(report: AttributionReport, kind: str, out=None) -> list[dict]:
    """Flatten a report into plot-ready rows; optionally write them as CSV.

    heatmap: one row per (record, feature, method) in a fixed order.
    timeline: one row per record with its outlier score.
    """
    rows: list[dict] = []
    if kind == "heatmap":
        for rec in report.records:
            for j, feat in enumerate(report.feature_names):
                for method in report.methods:
                    if method not in rec.scores:
                        continue
                    rows.append({
                        "key": rec.key,
                        "feature": feat,
                        "method": method,
                        "value": rec.scores[method][j],
                    })
        header = ["key", "feature", "method", "value"]
    elif kind == "timeline":
        for rec in report.records:
            rows.append({"key": rec.key, "outlier_score": rec.outlier_score})
        header = ["key", "outlier_score"]
    else:
        raise ValueError(f"unknown plot kind {kind!r}, expected 'heatmap' or 'timeline'")

    if out is not None:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                                  for v in (row[h] for h in header)))
        Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows


def experiment_mexican_hat(
    y_values,
    params: LcHyperParams | None = None,
    *,
    sigma2: float = 0.2,
    x_t=(1.0, 0.0),
) -> list[dict]:
    """Sweep observed targets at a fixed probe point of the hat surface.

    For each y the compensation is solved with no l1 penalty and a small
    l2 anchor, using a tight sampling vicinity so the fitted slopes track
    the local surface. Returns one row per y with the solved delta.
    """
    if params is None:
        params = LcHyperParams(lam=0.01, nu=0.0, eta=0.01, n_s=1000, seed=0)
    model = MexicanHat()
    rows = []
    for y in y_values:
        data = Dataset.from_arrays(np.array([x_t], dtype=float), [float(y)], ids=["t"])
        res = solve_lc(model, data, np.array([sigma2]), params)
        d = res.scores
        rows.append({
            "y": float(y),
            "delta1": float(d[0]),
            "delta2": float(d[1]),
            "objective": float(res.diagnostics.objective),
            "converged": res.diagnostics.converged,
        })
    return rows


def write_experiment_csv(rows: list[dict], out) -> None:
    header = ["y", "delta1", "delta2", "objective", "converged"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in (row[h] for h in header)))
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
