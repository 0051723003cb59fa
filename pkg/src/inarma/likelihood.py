"""Exact log-likelihoods for the four count models.

INAR(1), INARCH(1) and INGARCH(1, 1) likelihoods factorise over observed
transitions. The INARMA(1, 1) likelihood is evaluated with the forward
algorithm on its hidden INAR(1) representation

    Y_t = J_t + xi o Y_{t-1},   J_t ~ Pois(tau xi / kappa),
    X_t | Y_t ~ Bin(Y_t, phi kappa / xi),

with the latent state space truncated at ``y_max``. Transition mass that
would leave ``{0, ..., y_max}`` is folded into the top state, so the
truncated kernel stays a proper stochastic matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter
from scipy.special import logsumexp
from scipy.stats import poisson

from .data import as_series
from .params import (
    DerivedInarma,
    Inar1Params,
    Inarch1Params,
    Ingarch11Params,
    InarmaParams,
    ModelParams,
)
from .stochastic import binomial_logpmf, poisson_logpmf

DEFAULT_YMAX_TOL = 1e-10


# ---------------------------------------------------------------------------
# Observation-driven and INAR(1) models


def inar1_transition_logprob(p: Inar1Params, prev, curr) -> np.ndarray:
    """``log P(X_t = curr | X_{t-1} = prev)``, vectorised over pairs."""
    prev = np.atleast_1d(np.asarray(prev, dtype=np.int64))
    curr = np.atleast_1d(np.asarray(curr, dtype=np.int64))
    kmax = int(np.minimum(prev, curr).max())
    k = np.arange(kmax + 1)[None, :]
    # survivors k ~ Bin(prev, alpha), immigrants curr - k ~ Pois(nu)
    terms = binomial_logpmf(prev[:, None], p.alpha, k) + poisson_logpmf(p.nu, curr[:, None] - k)
    return logsumexp(terms, axis=1)


def inar1_loglik(p: Inar1Params, x) -> float:
    """Stationary ``Pois(nu / (1 - alpha))`` term for X_1 plus the Markov transitions."""
    x = as_series(x).values
    ll = float(poisson_logpmf(p.nu / (1.0 - p.alpha), x[0]))
    if x.size == 1:
        return ll
    pairs, counts = np.unique(np.stack([x[:-1], x[1:]], axis=1), axis=0, return_counts=True)
    trans = inar1_transition_logprob(p, pairs[:, 0], pairs[:, 1])
    return ll + float(np.dot(counts, trans))


def _check_intensity(name: str, value: float, strict: bool) -> None:
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value}")


def inarch1_intensities(p: Inarch1Params, lambda1: float, x) -> np.ndarray:
    x = as_series(x).values
    lam = np.empty(x.size)
    lam[0] = lambda1
    lam[1:] = p.nu + p.alpha * x[:-1]
    return lam


def inarch1_loglik(p: Inarch1Params, lambda1: float, x) -> float:
    _check_intensity("lambda1", lambda1, strict=True)
    x = as_series(x).values
    return float(np.sum(poisson_logpmf(inarch1_intensities(p, lambda1, x), x)))


def ingarch_lambda1(p: Ingarch11Params, s1: float) -> float:
    """Initial intensity ``(1 - beta) S_1 + nu / (1 - beta)``."""
    return (1.0 - p.beta) * s1 + p.nu / (1.0 - p.beta)


def ingarch11_intensities(p: Ingarch11Params, s1: float, x) -> np.ndarray:
    """``lambda_1..lambda_{T+1}``; the last entry is the one-step-ahead intensity."""
    x = as_series(x).values.astype(float)
    lam1 = ingarch_lambda1(p, s1)
    # lambda_{t+1} = nu + alpha x_t + beta lambda_t  (t >= 1)
    drive = p.nu + p.alpha * x
    rest = lfilter([1.0], [1.0, -p.beta], drive, zi=[p.beta * lam1])[0]
    return np.concatenate([[lam1], rest])


def ingarch11_loglik(p: Ingarch11Params, s1: float, x) -> float:
    _check_intensity("s1", s1, strict=False)
    x = as_series(x).values
    lam = ingarch11_intensities(p, s1, x)[:-1]
    return float(np.sum(poisson_logpmf(lam, x)))


# ---------------------------------------------------------------------------
# INARMA(1, 1): hidden INAR(1) chain


def choose_ymax(p: InarmaParams, x=None, tol: float = DEFAULT_YMAX_TOL) -> int:
    """Truncation bound for the latent chain.

    The larger of the ``1 - tol`` quantile of the stationary latent law and a
    floor that leaves room for the largest observation to be emitted.
    """
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    d = p.derived
    quantile = int(poisson.isf(tol, d.latent_stationary_mean))
    x_max = as_series(x).max if x is not None else 0
    scaled = x_max / d.emission_prob
    floor = math.ceil(scaled) + 10 * math.ceil(math.sqrt(scaled + 1.0))
    return max(quantile, floor, x_max, 1)


@dataclass(frozen=True)
class TransitionKernel:
    """Truncated transition matrix of ``Y_t = J_t + xi o Y_{t-1}``.

    ``log_rows[i, j] = log P(Y_t = j | Y_{t-1} = i)``; column ``y_max`` holds
    all mass at or above ``y_max`` (absorbing top bin).
    """

    y_max: int
    log_rows: np.ndarray
    probs: np.ndarray
    folded_mass: np.ndarray  # per-row mass moved into the top bin from above y_max


def build_transition_kernel(d: DerivedInarma, y_max: int) -> TransitionKernel:
    if y_max < 1:
        raise ValueError(f"y_max must be >= 1, got {y_max}")
    states = np.arange(y_max + 1)
    survivors = np.exp(binomial_logpmf(states[:, None], d.xi, states[None, :]))
    immigrants = np.exp(poisson_logpmf(d.latent_immigration, states))
    # upper-triangular Toeplitz: shift[m, j] = P(J = j - m)
    shift = np.triu(toeplitz(np.r_[immigrants[0], np.zeros(y_max)], immigrants))
    probs = survivors @ shift
    below_top = probs[:, :-1].sum(axis=1)
    top = np.clip(1.0 - below_top, 0.0, 1.0)
    folded = np.clip(top - probs[:, -1], 0.0, 1.0)
    probs[:, -1] = top
    with np.errstate(divide="ignore"):
        log_rows = np.log(probs)
    probs.setflags(write=False)
    log_rows.setflags(write=False)
    return TransitionKernel(y_max, log_rows, probs, folded)


def stationary_latent_logpmf(d: DerivedInarma, y_max: int) -> np.ndarray:
    """Stationary ``Pois(mu_Y)`` restricted to ``0..y_max`` and renormalised."""
    lp = poisson_logpmf(d.latent_stationary_mean, np.arange(y_max + 1))
    return lp - logsumexp(lp)


def emission_logtable(d: DerivedInarma, y_max: int, x_max: int) -> np.ndarray:
    """``table[y, x] = log P(X = x | Y = y)`` for ``y <= y_max``, ``x <= x_max``."""
    return binomial_logpmf(
        np.arange(y_max + 1)[:, None], d.emission_prob, np.arange(x_max + 1)[None, :]
    )


class ForwardFilter:
    """Forward recursion over the truncated latent state space.

    After each :meth:`update`, ``filtered_log`` holds
    ``log P(Y_t = y | X_1..X_t)`` and ``loglik_accum`` the log-likelihood of
    the observations so far. Before the first update the filter holds the
    stationary prior and ``t == 0``.
    """

    def __init__(self, params: InarmaParams, y_max: int, x_max: int | None = None):
        self.params = params
        self.derived = params.derived
        self.y_max = int(y_max)
        self.kernel = build_transition_kernel(self.derived, self.y_max)
        x_max = self.y_max if x_max is None else min(int(x_max), self.y_max)
        self._emission = np.exp(emission_logtable(self.derived, self.y_max, x_max))
        self._prior = np.exp(stationary_latent_logpmf(self.derived, self.y_max))
        self._filtered = self._prior.copy()
        self.loglik_accum = 0.0
        self.increments: list[float] = []
        self.t = 0

    @property
    def filtered_log(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self._filtered)

    def _emission_column(self, x: int) -> np.ndarray:
        if x > self.y_max:
            raise ValueError(
                f"observation {x} exceeds y_max={self.y_max}; the likelihood would be spuriously zero"
            )
        if x < self._emission.shape[1]:
            return self._emission[:, x]
        return np.exp(binomial_logpmf(np.arange(self.y_max + 1), self.derived.emission_prob, x))

    def predicted(self) -> np.ndarray:
        """``P(Y_{t+1} = y | X_1..X_t)`` (the stationary prior when ``t == 0``)."""
        if self.t == 0:
            return self._prior.copy()
        return self._filtered @ self.kernel.probs

    def update(self, x: int) -> float:
        """Condition on the next observation; returns its log predictive probability."""
        weights = self.predicted() * self._emission_column(int(x))
        c = weights.sum()
        if not c > 0:
            increment = -math.inf
        else:
            increment = math.log(c)
            self._filtered = weights / c
        self.t += 1
        self.loglik_accum += increment
        self.increments.append(increment)
        return increment

    def run(self, x) -> float:
        """Feed a whole series; returns the accumulated log-likelihood."""
        values = as_series(x).values
        if values.max() > self.y_max:
            raise ValueError(f"y_max={self.y_max} is below the largest observation {values.max()}")
        probs = self.kernel.probs
        emission = self._emission
        filtered = self._filtered
        logs = np.empty(values.size)
        start = self.t
        for i, xv in enumerate(values):
            pred = self._prior if start + i == 0 else filtered @ probs
            col = emission[:, xv] if xv < emission.shape[1] else self._emission_column(int(xv))
            w = pred * col
            c = w.sum()
            if not c > 0:
                logs[i:] = -math.inf
                self.t += values.size
                self.loglik_accum = -math.inf
                return -math.inf
            filtered = w / c
            logs[i] = c
        np.log(logs, out=logs)
        self._filtered = filtered
        self.t += values.size
        self.increments.extend(logs.tolist())
        self.loglik_accum += float(logs.sum())
        return self.loglik_accum

    def predictive_observation(self, x_max: int | None = None) -> np.ndarray:
        """One-step-ahead ``P(X_{t+1} = x | X_1..X_t)`` for ``x = 0..x_max``."""
        x_max = self.y_max if x_max is None else min(int(x_max), self.y_max)
        table = np.exp(emission_logtable(self.derived, self.y_max, x_max))
        return self.predicted() @ table


def inarma_loglik_forward(p: InarmaParams, x, y_max: int | None = None) -> float:
    series = as_series(x)
    if y_max is None:
        y_max = choose_ymax(p, series)
    if y_max < series.max:
        raise ValueError(f"y_max={y_max} is below the largest observation {series.max}")
    return ForwardFilter(p, y_max, x_max=series.max).run(series)


# ---------------------------------------------------------------------------
# Enumeration oracle

BRUTE_FORCE_MAX_LEN = 8
BRUTE_FORCE_MAX_YMAX = 30
BRUTE_FORCE_MAX_PATHS = 2 * 10**7


@lru_cache(maxsize=None)
def _log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def _log_binom_term(n: int, p: float, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    return (
        _log_factorial(n) - _log_factorial(k) - _log_factorial(n - k)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )


def _log_pois_term(rate: float, k: int) -> float:
    return k * math.log(rate) - rate - _log_factorial(k)


def brute_force_loglik(p: InarmaParams, x, y_max: int) -> float:
    """Log-likelihood by summing over every latent path ``(y_1, ..., y_T)``.

    Uses the same truncated model as :func:`inarma_loglik_forward`
    (renormalised stationary start, top state absorbing the overflow) but
    builds each probability by direct scalar summation and never recurses
    over time.
    """
    values = [int(v) for v in as_series(x).values]
    n_paths = (y_max + 1) ** len(values)
    if len(values) > BRUTE_FORCE_MAX_LEN or y_max > BRUTE_FORCE_MAX_YMAX or n_paths > BRUTE_FORCE_MAX_PATHS:
        raise ValueError(
            f"enumeration too large: T={len(values)}, y_max={y_max} ({n_paths} paths)"
        )
    d = p.derived
    states = range(y_max + 1)

    log_init = [_log_pois_term(d.latent_stationary_mean, y) for y in states]
    norm = math.log(sum(math.exp(v) for v in log_init))
    log_init = [v - norm for v in log_init]

    trans = [[0.0] * (y_max + 1) for _ in states]
    for i in states:
        below = 0.0
        for j in states:
            prob = sum(
                math.exp(_log_binom_term(i, d.xi, m) + _log_pois_term(d.latent_immigration, j - m))
                for m in range(min(i, j) + 1)
            )
            if j < y_max:
                trans[i][j] = prob
                below += prob
            else:
                trans[i][j] = max(1.0 - below, 0.0)
    with np.errstate(divide="ignore"):
        log_trans = np.log(np.array(trans))
    log_emit = np.array(
        [[_log_binom_term(y, d.emission_prob, xv) for xv in values] for y in states]
    )

    # One array axis per time point; each cell is the log weight of one path.
    T = len(values)
    total = np.zeros((y_max + 1,) * T)
    for t in range(T):
        shape = [1] * T
        shape[t] = y_max + 1
        total = total + log_emit[:, t].reshape(shape)
        if t == 0:
            total = total + np.array(log_init).reshape(shape)
        else:
            shape2 = [1] * T
            shape2[t - 1] = shape2[t] = y_max + 1
            total = total + log_trans.reshape(shape2)
    return float(logsumexp(total))


# ---------------------------------------------------------------------------


def loglik(params: ModelParams, x, initial: float | None = None, y_max: int | None = None) -> float:
    """Dispatch on parameter type. ``initial`` is lambda_1 (INARCH) or S_1 (INGARCH)."""
    if isinstance(params, Inar1Params):
        return inar1_loglik(params, x)
    if isinstance(params, Inarch1Params):
        if initial is None:
            raise ValueError("INARCH(1) requires the initial intensity lambda_1")
        return inarch1_loglik(params, initial, x)
    if isinstance(params, Ingarch11Params):
        if initial is None:
            raise ValueError("INGARCH(1, 1) requires the initial state S_1")
        return ingarch11_loglik(params, initial, x)
    if isinstance(params, InarmaParams):
        return inarma_loglik_forward(params, x, y_max)
    raise TypeError(f"unsupported parameter type {type(params).__name__}")

