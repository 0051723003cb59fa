"""One-step-ahead predictive distributions, log scores and rolling evaluation."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import poisson

from .data import as_series
from .estimate import FitOptions, FitResult, fit
from .likelihood import (
    ForwardFilter,
    choose_ymax,
    inar1_transition_logprob,
    ingarch11_intensities,
)
from .params import Inar1Params, Inarch1Params, Ingarch11Params, InarmaParams
from .stochastic import LogPmf

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class PredictiveDistribution:
    """Predictive law of X_{t+1} given X_1..X_t, where ``t = origin_index``.

    ``builder(cap)`` recomputes the pmf on ``{0..cap}`` so that observations
    beyond ``pmf.support_max`` are scored exactly instead of by tail bucket.
    """

    pmf: LogPmf
    origin_index: int
    builder: Optional[Callable[[int], LogPmf]] = field(default=None, repr=False, compare=False)

    def extended(self, cap: int) -> "PredictiveDistribution":
        if cap <= self.pmf.support_max or self.builder is None:
            return self
        return PredictiveDistribution(self.builder(cap), self.origin_index, self.builder)

    def probs(self) -> np.ndarray:
        return self.pmf.probs


def _default_cap(history_max: int, upper: int) -> int:
    return max(2 * history_max, upper, 1)


def predictive_one_step(model_fit: FitResult, history) -> PredictiveDistribution:
    """Predictive pmf for the observation following ``history``."""
    values = as_series(history).values
    t = int(values.size)
    p = model_fit.params
    h_max = int(values.max())

    if isinstance(p, Inar1Params):
        last = int(values[-1])

        def build(cap: int) -> LogPmf:
            lp = inar1_transition_logprob(p, np.full(cap + 1, last), np.arange(cap + 1))
            return LogPmf.from_log_probs(lp)

        # survivors never exceed the last count, so the Poisson quantile bounds the tail
        cap = _default_cap(h_max, last + int(poisson.isf(TAIL_TOL / 10, p.nu)))
        return PredictiveDistribution(build(cap), t, build)

    if isinstance(p, (Inarch1Params, Ingarch11Params)):
        if isinstance(p, Inarch1Params):
            lam = float(p.nu + p.alpha * values[-1])
        else:
            lam = float(ingarch11_intensities(p, model_fit.initial, values)[-1])

        def build(cap: int) -> LogPmf:
            return LogPmf.poisson(lam, cap)

        cap = _default_cap(h_max, int(poisson.isf(TAIL_TOL / 10, lam)))
        return PredictiveDistribution(build(cap), t, build)

    if isinstance(p, InarmaParams):
        y_max = max(model_fit.y_max_used or 0, choose_ymax(p, values))

        def build(cap: int) -> LogPmf:
            filt = ForwardFilter(p, max(y_max, cap), x_max=h_max)
            filt.run(values)
            with np.errstate(divide="ignore"):
                return LogPmf.from_log_probs(np.log(filt.predictive_observation()))

        return PredictiveDistribution(build(y_max), t, build)

    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def log_score(pred: PredictiveDistribution, observed: int) -> float:
    """Negatively oriented logarithmic score ``-log P(X = observed)``."""
    observed = int(observed)
    if observed < 0:
        raise ValueError("observed count must be non-negative")
    if observed > pred.pmf.support_max:
        pred = pred.extended(observed + max(10, observed // 2))
    lp = pred.pmf.logpmf(observed)
    return -lp


# ---------------------------------------------------------------------------
# Rolling one-step-ahead evaluation


@dataclass(frozen=True)
class RollingStep:
    origin_index: int
    observed: int
    log_score: float
    fit: dict
    refit_failed: bool = False


@dataclass(frozen=True)
class RollingReport:
    model_id: str
    start_index: int
    steps: tuple
    mean_log_score: float

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "start_index": self.start_index,
            "mean_log_score": self.mean_log_score,
            "steps": [
                {
                    "origin_index": s.origin_index,
                    "observed": s.observed,
                    "log_score": s.log_score,
                    "refit_failed": s.refit_failed,
                    "fit": s.fit,
                }
                for s in self.steps
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["origin_index", "observed", "log_score"])
        for s in self.steps:
            writer.writerow([s.origin_index, s.observed, repr(s.log_score)])
        return buf.getvalue()


def _fit_summary(result: FitResult) -> dict:
    return {
        "params_natural": result.params_natural(),
        "loglik": result.loglik,
        "converged": result.converged,
    }


def default_start_index(n: int) -> int:
    """Origin of the first forecast when scoring the second half of a series."""
    return n // 2


def _cold_step(args):
    model_id, values, t, opts = args
    try:
        return fit(model_id, values[:t], opts)
    except (RuntimeError, ValueError):
        return None


def rolling_forecast(
    model_id: str,
    x,
    start_index: Optional[int] = None,
    opts: FitOptions = FitOptions(),
    warm_start: bool = True,
    workers: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> RollingReport:
    """Re-fit on ``x[:t]`` and score the forecast of ``x[t]`` for ``t = start_index .. n-1``.

    ``t`` counts observations used for fitting (0-based index of the
    forecast target). In warm-start mode each refit starts from the previous
    optimum and a fresh moment-based point; in cold mode every step runs the
    full multi-start fit independently, optionally in ``workers`` processes.
    """
    values = as_series(x).values
    n = values.size
    start = default_start_index(n) if start_index is None else int(start_index)
    if not 3 <= start < n:
        raise ValueError(f"start_index must satisfy 3 <= start_index < {n}, got {start}")

    steps: list[RollingStep] = []
    if not warm_start:
        jobs = [(model_id, values, t, opts) for t in range(start, n)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_cold_step, jobs))
        else:
            outcomes = []
            for i, job in enumerate(jobs):
                outcomes.append(_cold_step(job))
                if progress:
                    progress(i + 1, len(jobs))
        previous = None
        for t, result in zip(range(start, n), outcomes):
            failed = result is None
            if failed:
                if previous is None:
                    raise RuntimeError(f"{model_id}: refit failed at origin {t} with no earlier fit")
                result = previous
            score = log_score(predictive_one_step(result, values[:t]), int(values[t]))
            steps.append(RollingStep(t, int(values[t]), score, _fit_summary(result), failed))
            previous = result
    else:
        previous: Optional[FitResult] = None
        warm_opts = replace(opts, n_starts=1)
        for t in range(start, n):
            failed = False
            try:
                if previous is None:
                    result = fit(model_id, values[:t], opts)
                else:
                    result = fit(
                        model_id,
                        values[:t],
                        warm_opts,
                        extra_starts=[(previous.params, previous.initial)],
                    )
            except (RuntimeError, ValueError):
                if previous is None:
                    raise
                result, failed = previous, True
            pred = predictive_one_step(result, values[:t])
            score = log_score(pred, int(values[t]))
            steps.append(RollingStep(t, int(values[t]), score, _fit_summary(result), failed))
            previous = result
            if progress:
                progress(t - start + 1, n - start)

    scores = [s.log_score for s in steps]
    mean = math.fsum(scores) / len(scores)
    return RollingReport(model_id, start, tuple(steps), mean)
