"""Command line front end.

Exit codes: 0 success, 1 validation or usage error, 2 model failure,
3 solver non-convergence when --strict is set.
"""

from __future__ import annotations

import argparse
import os
import sys

from .core import LcHyperParams
from .errors import (
    ConstantColumn,
    DimensionMismatch,
    ExternalModelFailure,
    LcattrError,
    MissingColumn,
    ParseError,
    ValidationError,
)
from .runner import (
    AttributionReport,
    RunConfig,
    emit_plot_series,
    experiment_mexican_hat,
    run,
    write_experiment_csv,
)

_VALIDATION_ERRORS = (
    ValidationError, ParseError, MissingColumn, ConstantColumn, ValueError, OSError,
)
_MODEL_ERRORS = (ExternalModelFailure, DimensionMismatch)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; we reserve 2 for model
    # failures, so usage problems are rerouted through the error mapping
    def error(self, message):
        raise _UsageError(message)


def _seed_default() -> int:
    env = os.environ.get("LCATTR_SEED")
    return int(env) if env else 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="lcattr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="score a dataset and attribute its deviations")
    p.add_argument("--model", required=True,
                   help="builtin:mexican_hat | builtin:linear?w=..&b=.. | exec:CMD")
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--group-by", default=None, help="column defining one record per group")
    p.add_argument("--methods", default="lc",
                   help="comma list out of lc,z,lime+,sv+ (default lc)")
    p.add_argument("--nu", type=float, default=0.1, help="l1 penalty strength")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="l2 penalty strength")
    p.add_argument("--kappa", type=float, default=0.1, help="initial step size")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=None,
                   help="rng seed (default: LCATTR_SEED env var, else 0)")
    p.add_argument("--sigma2", default="loo",
                   help="'loo' for local leave-one-out variances or a positive number")
    p.add_argument("--background", default="empirical",
                   help="sv+ background: empirical[:COUNT] or box:LO:HI[:COUNT]")
    p.add_argument("--threshold", type=float, default=None,
                   help="flag samples whose outlier score exceeds this")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 if any compensation solve fails to converge")
    p.add_argument("--out", required=True, help="report JSON path")

    p = sub.add_parser("plot-series", help="flatten a report into plot-ready CSV")
    p.add_argument("--report", required=True, help="report JSON produced by run")
    p.add_argument("--kind", required=True, choices=["heatmap", "timeline"])
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("experiment-mexican-hat",
                       help="sweep observed targets at probe point (1,0) of the hat")
    p.add_argument("--y-grid", default="-0.2,0.0,0.2,0.4,0.6,0.8",
                   help="comma list of observed target values")
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--eta", type=float, default=0.01, help="vicinity variance")
    p.add_argument("--sigma2", type=float, default=0.2, help="assumed target variance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV path")
    return parser


def _cmd_run(args) -> int:
    sigma2: str | float = args.sigma2
    if sigma2 != "loo":
        sigma2 = float(sigma2)
    params = LcHyperParams(
        lam=args.lam,
        nu=args.nu,
        kappa0=args.kappa,
        max_iter=args.max_iter,
        seed=args.seed if args.seed is not None else _seed_default(),
    )
    config = RunConfig(
        model=args.model,
        data=args.data,
        target=args.target,
        out=args.out,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        group_by=args.group_by,
        params=params,
        sigma2=sigma2,
        background=args.background,
        threshold=args.threshold,
        strict=args.strict,
    )
    report = run(config)
    n_flagged = len(report.anomaly.flagged)
    print(f"wrote {args.out}: {len(report.records)} records, "
          f"aggregate outlier score {report.anomaly.aggregate_score:.6g}"
          + (f", {n_flagged} flagged" if report.anomaly.threshold is not None else ""))
    if config.strict and report.any_nonconverged:
        print("strict mode: at least one compensation solve did not converge",
              file=sys.stderr)
        return 3
    return 0


def _cmd_plot_series(args) -> int:
    import json

    from .runner import ReportRecord
    from .stats import AnomalyReport

    with open(args.report, encoding="utf-8") as fh:
        raw = json.load(fh)
    report = AttributionReport(
        feature_names=tuple(raw["feature_names"]),
        methods=tuple(raw["methods"]),
        grouped=raw["grouped"],
        records=[
            ReportRecord(
                key=r["key"],
                sample_ids=tuple(r["sample_ids"]),
                outlier_score=r["outlier_score"],
                flagged=r["flagged"],
                scores={k: tuple(v) for k, v in r["scores"].items()},
                diagnostics=r["diagnostics"],
                aggregates=r["aggregates"],
                errors=r["errors"],
            )
            for r in raw["records"]
        ],
        anomaly=AnomalyReport(
            per_sample_score=raw["anomaly"]["per_sample_score"],
            aggregate_score=raw["anomaly"]["aggregate_score"],
            threshold=raw["anomaly"]["threshold"],
            flagged=tuple(raw["anomaly"]["flagged"]),
        ),
        config=raw["config"],
        meta=raw["meta"],
    )
    rows = emit_plot_series(report, args.kind, out=args.out)
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def _cmd_experiment(args) -> int:
    y_values = [float(v) for v in args.y_grid.split(",") if v.strip() != ""]
    if not y_values:
        raise ValueError("--y-grid is empty")
    params = LcHyperParams(
        lam=args.lam,
        nu=args.nu,
        kappa0=args.kappa,
        max_iter=args.max_iter,
        eta=args.eta,
        seed=args.seed if args.seed is not None else _seed_default(),
    )
    rows = experiment_mexican_hat(y_values, params, sigma2=args.sigma2)
    write_experiment_csv(rows, args.out)
    for row in rows:
        print(f"y={row['y']:+.3f}  delta=({row['delta1']:+.4f}, {row['delta2']:+.4f})"
              f"  converged={row['converged']}")
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "plot-series":
            return _cmd_plot_series(args)
        return _cmd_experiment(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except _MODEL_ERRORS as e:
        print(f"model failure: {e}", file=sys.stderr)
        return 2
    except _VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except LcattrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
