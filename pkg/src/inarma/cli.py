"""Command-line interface: ``inarma {simulate,fit,compare,forecast,acf}``.

Exit codes: 0 success, 1 runtime or data error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import CountSeries, DataError, read_counts, write_counts
from .estimate import MIN_SERIES_LENGTH, FitOptions, FitResult, fit
from .forecast import default_start_index, predictive_one_step, rolling_forecast
from .params import MODEL_IDS, PARAM_CLASSES, ParameterError, acf, params_from_dict
from .simulate import REPRESENTATIONS, simulate
from .stochastic import RandomStream

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

MODEL_LABELS = {
    "inar1": "Poisson INAR(1)",
    "inarch1": "Poisson INARCH(1)",
    "ingarch11": "Poisson INGARCH(1, 1)",
    "inarma11": "Poisson INARMA(1, 1)",
}
MODEL_ALIASES = {"inarma": "inarma11", "ingarch": "ingarch11", "inarch": "inarch1", "inar": "inar1"}


class UsageError(Exception):
    pass


def _model_id(text: str) -> str:
    key = MODEL_ALIASES.get(text.lower(), text.lower())
    if key not in MODEL_IDS:
        raise argparse.ArgumentTypeError(f"unknown model {text!r}; choose from {', '.join(MODEL_IDS)}")
    return key


def _row_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected FIRST:LAST, got {text!r}") from None
    return lo, hi


@dataclass
class ComparisonRow:
    model_id: str
    fit: Optional[FitResult] = None
    mean_log_score: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "params": self.fit.params_natural() if self.fit else None,
            "loglik": self.fit.loglik if self.fit else None,
            "k": self.fit.k if self.fit else None,
            "aic": self.fit.aic if self.fit else None,
            "mean_log_score": self.mean_log_score,
            "error": self.error,
        }


@dataclass
class ComparisonTable:
    rows: list = field(default_factory=list)

    def sorted(self) -> "ComparisonTable":
        key = lambda r: (r.fit is None, r.fit.aic if r.fit else math.inf)  # noqa: E731
        return ComparisonTable(sorted(self.rows, key=key))

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    def render(self) -> str:
        header = f"{'Model':<24}{'parameters':<48}{'AIC':>8}{'logS':>8}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            if r.fit is None:
                lines.append(f"{MODEL_LABELS[r.model_id]:<24}failed: {r.error}")
                continue
            params = "  ".join(f"{k}={v:.2f}" for k, v in _display_params(r.fit).items())
            score = f"{r.mean_log_score:.3f}" if r.mean_log_score is not None else "-"
            lines.append(f"{MODEL_LABELS[r.model_id]:<24}{params:<48}{r.fit.aic:>8.0f}{score:>8}")
        return "\n".join(lines)


def _display_params(result: FitResult) -> dict:
    natural = result.params_natural()
    if result.model_id == "ingarch11":
        keys = ("tau", "phi", "kappa", "s1")
    elif result.model_id == "inarma11":
        keys = ("tau", "phi", "kappa")
    elif result.model_id == "inarch1":
        keys = ("nu", "alpha", "lambda1")
    else:
        keys = ("nu", "alpha")
    return {k: natural[k] for k in keys}


# ---------------------------------------------------------------------------


def _load(args) -> CountSeries:
    return read_counts(args.data, column=args.column, header=args.header, rows=args.rows)


def _options(args) -> FitOptions:
    return FitOptions(
        n_starts=args.starts,
        max_evals=args.max_evals,
        seed=args.seed,
        y_max_override=args.ymax,
    )


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _require_length(series: CountSeries) -> None:
    if len(series) < MIN_SERIES_LENGTH:
        raise DataError(f"series too short: {len(series)} observations, need at least {MIN_SERIES_LENGTH}")


def cmd_simulate(args) -> int:
    cls = PARAM_CLASSES[args.model]
    names = [f for f in cls.__dataclass_fields__]
    given = {n: getattr(args, n) for n in names}
    missing = [n for n, v in given.items() if v is None]
    if missing:
        raise UsageError(f"model {args.model} requires --{' --'.join(missing)}")
    params = params_from_dict({"model": args.model, **given})
    if args.length < 1:
        raise UsageError("--length must be >= 1")
    out = simulate(params, args.length, RandomStream(args.seed), args.representation)
    latent = out.latent if args.latent else None
    if args.latent and latent is None:
        raise UsageError(f"model {args.model} has no latent state to write")
    if args.out and args.out != "-":
        write_counts(args.out, out.series.values, latent)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for i, v in enumerate(out.series.values):
            writer.writerow([int(v)] if latent is None else [int(v), int(latent[i])])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_fit(args) -> int:
    series = _load(args)
    _require_length(series)
    result = fit(args.model, series, _options(args))
    if args.json:
        print(result.to_json(indent=2))
    else:
        print(f"model     {MODEL_LABELS[args.model]}")
        for k, v in result.params_natural().items():
            print(f"{k:<9} {v:.6g}")
        print(f"loglik    {result.loglik:.6f}")
        print(f"k         {result.k}")
        print(f"AIC       {result.aic:.3f}")
        print(f"converged {result.converged}")
        if result.y_max_used is not None:
            print(f"y_max     {result.y_max_used}")
    return EXIT_OK


def cmd_compare(args) -> int:
    models = args.models
    if len(models) < 2:
        raise UsageError("compare needs at least two models (--models a,b,...)")
    series = _load(args)
    _require_length(series)
    opts = _options(args)
    start = args.rolling_start if args.rolling_start is not None else default_start_index(len(series))
    table = ComparisonTable()
    for model_id in models:
        row = ComparisonRow(model_id)
        try:
            row.fit = fit(model_id, series, opts)
            if not args.no_rolling:
                report = rolling_forecast(model_id, series, start, opts, warm_start=not args.cold)
                row.mean_log_score = report.mean_log_score
                if args.scores_dir:
                    Path(args.scores_dir).mkdir(parents=True, exist_ok=True)
                    (Path(args.scores_dir) / f"rolling_{model_id}.csv").write_text(report.to_csv())
        except (RuntimeError, ValueError, FloatingPointError) as exc:
            row.error = str(exc)
        table.rows.append(row)
    table = table.sorted()
    if args.json:
        print(json.dumps(table.to_dict(), indent=2))
    else:
        print(table.render())
    return EXIT_OK


def cmd_forecast(args) -> int:
    if args.horizon != 1:
        raise UsageError("only one-step-ahead forecasts (--horizon 1) are supported")
    series = _load(args)
    origin = len(series) if args.origin is None else args.origin
    if not MIN_SERIES_LENGTH <= origin <= len(series):
        raise UsageError(f"--origin must lie in [{MIN_SERIES_LENGTH}, {len(series)}], got {origin}")
    history = series[:origin]
    result = fit(args.model, history, _options(args))
    pred = predictive_one_step(result, history)
    probs = pred.pmf.probs
    if args.json:
        print(json.dumps({
            "model_id": args.model,
            "origin_index": origin,
            "fit": result.to_dict(),
            "pmf": [{"x": i, "probability": float(pr)} for i, pr in enumerate(probs)],
        }, indent=2))
        return EXIT_OK
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "probability"])
        for i, pr in enumerate(probs):
            writer.writerow([i, repr(float(pr))])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_acf(args) -> int:
    series = _load(args)
    emp = series.sample_acf(args.max_lag)
    theo = None
    if args.params:
        params = params_from_dict(json.loads(Path(args.params).read_text()))
        theo = [acf(params, h) for h in range(args.max_lag + 1)]
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lag", "empirical"] + (["model"] if theo else []))
        for h in range(args.max_lag + 1):
            writer.writerow([h, repr(float(emp[h]))] + ([repr(theo[h])] if theo else []))
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV or text file with counts")
    p.add_argument("--column", default=None, help="count column name or 0-based index (default: last)")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--rows", type=_row_range, default=None, metavar="FIRST:LAST",
                   help="inclusive 1-based data rows to use, e.g. 501:870")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ymax", type=int, default=None, help="fixed latent truncation bound (INARMA)")
    p.add_argument("--starts", type=int, default=5, help="number of optimizer starts")
    p.add_argument("--max-evals", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inarma", description="Poisson INARMA(1, 1) and comparator count models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a count series")
    p.add_argument("--model", type=_model_id, required=True)
    for name in ("nu", "alpha", "beta", "tau", "phi", "kappa"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--representation", choices=REPRESENTATIONS, default="state",
                   help="INARMA(1, 1) simulation scheme")
    p.add_argument("--latent", action="store_true", help="add the latent state as a second column")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one model by maximum likelihood")
    _add_data_flags(p)
    p.add_argument("--model", type=_model_id, required=True)
    _add_fit_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="fit several models and score rolling forecasts")
    _add_data_flags(p)
    p.add_argument("--models", type=lambda s: [_model_id(m) for m in s.split(",") if m],
                   default=list(MODEL_IDS), help="comma-separated model ids")
    p.add_argument("--rolling-start", type=int, default=None,
                   help="number of observations before the first forecast (default: half)")
    p.add_argument("--no-rolling", action="store_true")
    p.add_argument("--cold", action="store_true", help="refit every step from scratch")
    p.add_argument("--scores-dir", default=None, help="write per-model rolling scores as CSV")
    _add_fit_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("forecast", help="one-step-ahead predictive pmf")
    _add_data_flags(p)
    p.add_argument("--model", type=_model_id, required=True)
    p.add_argument("--origin", type=int, default=None, help="number of observations conditioned on")
    p.add_argument("--horizon", type=int, default=1)
    _add_fit_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("acf", help="empirical (and optionally model) autocorrelations")
    _add_data_flags(p)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--params", default=None, help="JSON parameter file for the model ACF")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_acf)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"inarma {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"inarma {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
