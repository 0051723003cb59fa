"""Maximum-likelihood fitting with Nelder-Mead over unconstrained parameters.

Rates are log-transformed and probabilities logit-transformed. For the
INGARCH(1, 1) model the pair (alpha, beta) is written as ``c = alpha + beta``
and ``share = alpha / c`` so that every unconstrained point is stationary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import expit, logit

from .data import as_series
from .likelihood import (
    choose_ymax,
    inar1_loglik,
    inarch1_loglik,
    inarma_loglik_forward,
    ingarch11_loglik,
)
from .params import (
    MODEL_IDS,
    Inar1Params,
    Inarch1Params,
    Ingarch11Params,
    InarmaParams,
    ModelParams,
    ParameterError,
    ingarch_to_arma_form,
    n_model_params,
    params_from_dict,
    params_to_dict,
)

MIN_SERIES_LENGTH = 3
_CLAMP = (0.01, 0.99)
_INITIAL_NAME = {"inarch1": "lambda1", "ingarch11": "s1"}


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 5
    max_evals: int = 2000
    tol: float = 1e-8
    seed: int = 0
    y_max_override: Optional[int] = None
    # candidates whose truncation bound exceeds this are rejected (memory/time guard)
    y_max_limit: int = 400

    def __post_init__(self) -> None:
        if self.n_starts < 1 or self.max_evals < 1 or not self.tol > 0:
            raise ValueError("n_starts, max_evals and tol must be positive")
        if self.y_max_override is not None and self.y_max_override < 1:
            raise ValueError("y_max_override must be positive")


@dataclass(frozen=True)
class FitResult:
    model_id: str
    params: ModelParams
    initial: Optional[float]
    loglik: float
    k: int
    aic: float
    converged: bool
    n_evals: int
    y_max_used: Optional[int] = None

    def params_natural(self) -> dict[str, float]:
        out = params_to_dict(self.params)
        del out["model"]
        if self.model_id in _INITIAL_NAME:
            out[_INITIAL_NAME[self.model_id]] = float(self.initial)
        if self.model_id == "ingarch11":
            out["tau"], out["phi"], out["kappa"] = ingarch_to_arma_form(self.params)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "params_natural": self.params_natural(),
            "loglik": self.loglik,
            "k": self.k,
            "aic": self.aic,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "y_max_used": self.y_max_used,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FitResult":
        model_id = data["model_id"]
        natural = dict(data["params_natural"])
        initial = natural.pop(_INITIAL_NAME[model_id], None) if model_id in _INITIAL_NAME else None
        if model_id == "ingarch11":
            for key in ("tau", "phi", "kappa"):
                natural.pop(key, None)
        return cls(
            model_id=model_id,
            params=params_from_dict({"model": model_id, **natural}),
            initial=initial,
            loglik=float(data["loglik"]),
            k=int(data["k"]),
            aic=float(data["aic"]),
            converged=bool(data["converged"]),
            n_evals=int(data["n_evals"]),
            y_max_used=data.get("y_max_used"),
        )


def aic(loglik: float, k: int) -> float:
    return 2.0 * k - 2.0 * loglik


def _check_model(model_id: str) -> None:
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}; choose from {', '.join(MODEL_IDS)}")


# ---------------------------------------------------------------------------
# Transformations


def to_unconstrained(params: ModelParams, initial: Optional[float] = None) -> np.ndarray:
    """Map natural parameters (plus lambda_1 / S_1 where used) to R^d."""
    with np.errstate(divide="ignore"):
        if isinstance(params, Inar1Params):
            u = [math.log(params.nu), logit(params.alpha)]
        elif isinstance(params, Inarch1Params):
            u = [math.log(params.nu), logit(params.alpha), np.log(initial)]
        elif isinstance(params, Ingarch11Params):
            c = params.alpha + params.beta
            share = params.alpha / c if c > 0 else 0.5
            u = [math.log(params.nu), logit(c), logit(share), np.log(initial)]
        elif isinstance(params, InarmaParams):
            u = [math.log(params.tau), logit(params.phi), logit(params.kappa)]
        else:
            raise TypeError(f"unsupported parameter type {type(params).__name__}")
    return np.asarray(u, dtype=float)


def from_unconstrained(model_id: str, u: Sequence[float]) -> tuple[ModelParams, Optional[float]]:
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ParameterError(f"non-finite unconstrained vector {u}")
    if model_id == "inar1":
        return Inar1Params(math.exp(u[0]), float(expit(u[1]))), None
    if model_id == "inarch1":
        return Inarch1Params(math.exp(u[0]), float(expit(u[1]))), math.exp(u[2])
    if model_id == "ingarch11":
        c, share = float(expit(u[1])), float(expit(u[2]))
        alpha = c * share
        return Ingarch11Params(math.exp(u[0]), alpha, c - alpha), math.exp(u[3])
    if model_id == "inarma11":
        return InarmaParams(math.exp(u[0]), float(expit(u[1])), float(expit(u[2]))), None
    raise ValueError(f"unknown model {model_id!r}")


# ---------------------------------------------------------------------------
# Starting values


def _clamp(v: float) -> float:
    return min(max(v, _CLAMP[0]), _CLAMP[1])


def moments_to_inarma(mean: float, rho1: float, rho2: float) -> InarmaParams:
    """Invert mean, rho(1) = phi kappa and rho(2)/rho(1) = xi for (tau, phi, kappa)."""
    rho1 = _clamp(rho1)
    xi = _clamp(rho2 / rho1)
    phi = _clamp(1.0 - xi + rho1)
    kappa = _clamp(rho1 / phi)
    return InarmaParams(mean * (1.0 - kappa), phi, kappa)


def _ingarch_alpha(rho1: float, xi: float, dispersion: float) -> float:
    def gap(alpha: float) -> float:
        beta = xi - alpha
        return alpha * (1.0 - beta * xi) / (1.0 - xi**2 + alpha**2) - rho1

    if rho1 < xi:
        return brentq(gap, 1e-12, xi)
    # no ACF solution: match the dispersion index instead
    return min(math.sqrt(max(dispersion - 1.0, 0.0) * (1.0 - xi**2)), 0.99 * xi)


def method_of_moments_seed(model_id: str, x) -> tuple[ModelParams, Optional[float]]:
    """Moment-based starting point; falls back to a fixed interior point when rho(1) <= 0."""
    _check_model(model_id)
    series = as_series(x)
    if len(series) < MIN_SERIES_LENGTH:
        raise ValueError(f"need at least {MIN_SERIES_LENGTH} observations")
    mean = max(series.mean(), 0.05)
    r = series.sample_acf(2)
    rho1, rho2 = float(r[1]), float(r[2])
    fallback = not rho1 > 0  # also catches nan from constant series

    if model_id in ("inar1", "inarch1"):
        alpha = 0.5 if fallback else _clamp(rho1)
        cls = Inar1Params if model_id == "inar1" else Inarch1Params
        p = cls(mean * (1.0 - alpha), alpha)
        return p, (mean if model_id == "inarch1" else None)

    if model_id == "inarma11":
        if fallback:
            return InarmaParams(mean / 2.0, 0.5, 0.5), None
        return moments_to_inarma(mean, rho1, rho2), None

    if fallback:
        p = Ingarch11Params.from_arma_form(mean / 2.0, 0.5, 0.5)
    else:
        xi = _clamp(rho2 / rho1 if rho2 > 0 else _CLAMP[0])
        dispersion = series.variance() / mean
        alpha = max(_ingarch_alpha(_clamp(rho1), xi, dispersion), 1e-3)
        p = Ingarch11Params(mean * (1.0 - xi), alpha, max(xi - alpha, 1e-3))
    beta = p.beta
    s1 = max(mean - p.nu / (1.0 - beta), 0.01) / (1.0 - beta)
    return p, s1


# ---------------------------------------------------------------------------
# Fitting


def _evaluate(model_id, params, initial, values, y_max_override) -> tuple[float, Optional[int]]:
    if model_id == "inar1":
        return inar1_loglik(params, values), None
    if model_id == "inarch1":
        return inarch1_loglik(params, initial, values), None
    if model_id == "ingarch11":
        return ingarch11_loglik(params, initial, values), None
    y_max = y_max_override if y_max_override is not None else choose_ymax(params, values)
    return inarma_loglik_forward(params, values, y_max), y_max


def fit(
    model_id: str,
    x,
    opts: FitOptions = FitOptions(),
    extra_starts: Sequence[tuple[ModelParams, Optional[float]]] = (),
    include_moment_starts: bool = True,
) -> FitResult:
    """Maximise the log-likelihood of ``model_id`` on ``x``.

    Starts from the method-of-moments point and ``n_starts - 1`` random
    perturbations of it (seeded by ``opts.seed``), plus any ``extra_starts``
    such as a previous optimum. The best run is restarted until the
    log-likelihood stops improving.
    """
    _check_model(model_id)
    series = as_series(x)
    if len(series) < MIN_SERIES_LENGTH:
        raise ValueError(f"need at least {MIN_SERIES_LENGTH} observations, got {len(series)}")
    values = series.values
    if opts.y_max_override is not None and opts.y_max_override < series.max:
        raise ValueError(f"y_max_override={opts.y_max_override} below max count {series.max}")

    n_evals = 0

    def objective(u: np.ndarray) -> float:
        nonlocal n_evals
        n_evals += 1
        try:
            params, initial = from_unconstrained(model_id, u)
            if model_id == "inarma11" and opts.y_max_override is None:
                if choose_ymax(params, series) > opts.y_max_limit:
                    return np.inf
            ll, _ = _evaluate(model_id, params, initial, values, opts.y_max_override)
        except (ParameterError, ValueError, OverflowError):
            return np.inf
        return -ll if math.isfinite(ll) else np.inf

    rng = np.random.default_rng(opts.seed)
    starts: list[np.ndarray] = []
    if include_moment_starts:
        u0 = to_unconstrained(*method_of_moments_seed(model_id, series))
        starts.append(u0)
        for _ in range(opts.n_starts - 1):
            starts.append(u0 + rng.normal(0.0, 0.5, size=u0.size))
    for params, initial in extra_starts:
        u = to_unconstrained(params, initial)
        if np.all(np.isfinite(u)):
            starts.append(u)
    if not starts:
        raise ValueError("no starting points")

    def run(u_start: np.ndarray):
        simplex = np.vstack([u_start, u_start + 0.5 * np.eye(u_start.size)])
        return minimize(
            objective,
            u_start,
            method="Nelder-Mead",
            options={
                "maxfev": opts.max_evals,
                "xatol": opts.tol,
                "fatol": opts.tol,
                "initial_simplex": simplex,
            },
        )

    best = None
    for u_start in starts:
        if not math.isfinite(objective(u_start)):
            continue
        res = run(u_start)
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not math.isfinite(best.fun):
        raise RuntimeError(f"{model_id}: no start point yields a finite likelihood")

    for _ in range(3):
        res = run(best.x)
        improved = best.fun - res.fun
        if res.fun <= best.fun:
            best = res
        if improved < opts.tol:
            break

    params, initial = from_unconstrained(model_id, best.x)
    ll, y_max_used = _evaluate(model_id, params, initial, values, opts.y_max_override)
    k = n_model_params(model_id)
    return FitResult(
        model_id=model_id,
        params=params,
        initial=initial,
        loglik=ll,
        k=k,
        aic=aic(ll, k),
        converged=bool(best.status == 0),
        n_evals=n_evals,
        y_max_used=y_max_used,
    )


def nested_start(model_id: str, result: FitResult, eps: float = 1e-7):
    """Embed a fitted sub-model as a start point of its richer counterpart.

    INARCH(1) sits at beta = 0 of INGARCH(1, 1); INAR(1) at phi = 1 of
    INARMA(1, 1). The boundary itself is not reachable by the transforms, so
    the embedding is shifted by ``eps`` into the interior.
    """
    if model_id == "ingarch11" and result.model_id == "inarch1":
        p = result.params
        alpha = max(p.alpha, eps)
        beta = eps
        # lambda_1 = (1 - beta) S_1 + nu / (1 - beta) keeps the fitted lambda_1
        s1 = max(result.initial - p.nu / (1.0 - beta), eps) / (1.0 - beta)
        return Ingarch11Params(p.nu, alpha, beta), s1
    if model_id == "inarma11" and result.model_id == "inar1":
        p = result.params
        return InarmaParams(p.nu, 1.0 - eps, p.alpha), None
    raise ValueError(f"{result.model_id} is not nested in {model_id}")

