"""Seeded trajectory generation for the four count models.

The INARMA(1, 1) process can be simulated in three equivalent ways:

``state``
    the juvenile/fertile recursion on (X_t, S_t) with coupled thinnings;
``population``
    explicit births, each scheduled to mature after a geometric waiting time;
``thinned``
    a binomially thinned INAR(1) chain Y_t.

Stationary initial laws are used wherever they are Poisson and known. Only the
INGARCH(1, 1) intensity and the population ledger need a burn-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import CountSeries
from .params import (
    Inar1Params,
    Inarch1Params,
    Ingarch11Params,
    InarmaParams,
    ModelParams,
    stationary_mean,
)
from .stochastic import RandomStream, binomial_thin, partition_thin, poisson_star

REPRESENTATIONS = ("state", "population", "thinned")
DEFAULT_INGARCH_BURN_IN = 1000


@dataclass
class SimulationOutput:
    """Simulated counts plus the latent trajectory (S_t or Y_t) where one exists.

    ``components`` carries auxiliary per-step arrays used for pathwise checks,
    e.g. the immigration counts ``I_t`` or the intensity ``lambda_t``.
    """

    series: CountSeries
    latent: Optional[np.ndarray] = None
    burn_in_discarded: int = 0
    components: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.latent is not None and len(self.latent) != len(self.series):
            raise ValueError("latent trajectory must match the series length")


def _check_length(t_len: int) -> int:
    t_len = int(t_len)
    if t_len < 1:
        raise ValueError(f"t_len must be >= 1, got {t_len}")
    return t_len


def simulate_inar1(p: Inar1Params, t_len: int, stream: RandomStream) -> SimulationOutput:
    n = _check_length(t_len)
    rng = stream.rng
    x = np.empty(n, dtype=np.int64)
    x[0] = rng.poisson(stationary_mean(p))
    immigration = rng.poisson(p.nu, size=n)
    for t in range(1, n):
        x[t] = immigration[t] + binomial_thin(stream, p.alpha, int(x[t - 1]))
    return SimulationOutput(CountSeries(x))


def simulate_inarch1(p: Inarch1Params, t_len: int, stream: RandomStream) -> SimulationOutput:
    n = _check_length(t_len)
    rng = stream.rng
    x = np.empty(n, dtype=np.int64)
    x[0] = rng.poisson(stationary_mean(p))
    for t in range(1, n):
        x[t] = rng.poisson(p.nu) + poisson_star(stream, p.alpha, int(x[t - 1]))
    return SimulationOutput(CountSeries(x))


def simulate_ingarch11(
    p: Ingarch11Params,
    t_len: int,
    stream: RandomStream,
    burn_in: int = DEFAULT_INGARCH_BURN_IN,
) -> SimulationOutput:
    n = _check_length(t_len)
    rng = stream.rng
    total = n + burn_in
    x = np.empty(total, dtype=np.int64)
    lam = np.empty(total)
    lam_t = p.nu / (1.0 - p.alpha - p.beta)
    for t in range(total):
        lam[t] = lam_t
        x[t] = rng.poisson(lam_t)
        lam_t = p.nu + p.alpha * x[t] + p.beta * lam_t
    return SimulationOutput(
        CountSeries(x[burn_in:]),
        burn_in_discarded=burn_in,
        components={"lambda": lam[burn_in:]},
    )


def simulate_inarma_state(p: InarmaParams, t_len: int, stream: RandomStream) -> SimulationOutput:
    """Juvenile/fertile recursion. ``latent`` holds S_t before maturation at t."""
    n = _check_length(t_len)
    rng = stream.rng
    d = p.derived
    x = np.empty(n, dtype=np.int64)
    s = np.empty(n, dtype=np.int64)
    matured = np.empty(n, dtype=np.int64)
    offspring = np.empty(n, dtype=np.int64)
    immigration = rng.poisson(p.tau, size=n)
    s_t = int(rng.poisson(d.s_stationary_mean))
    for t in range(n):
        a, rest = partition_thin(stream, p.phi, s_t)
        x_t = a + int(immigration[t])
        b = binomial_thin(stream, p.kappa, x_t)
        s[t], x[t], matured[t], offspring[t] = s_t, x_t, a, b
        s_t = rest + b
    return SimulationOutput(
        CountSeries(x),
        latent=s,
        components={"immigration": immigration, "matured": matured, "offspring": offspring},
    )


def population_burn_in(phi: float) -> int:
    return max(1000, math.ceil(50 / phi))


def simulate_inarma_population(
    p: InarmaParams,
    t_len: int,
    stream: RandomStream,
    burn_in: Optional[int] = None,
) -> SimulationOutput:
    """Birth/maturation form with geometric waiting times.

    Each fertile unit at t has an offspring with probability kappa; every
    offspring is booked into an arrivals ledger at ``t + A``, ``A ~ Geom(phi)``
    on ``{1, 2, ...}``. ``latent`` holds the number of pending juveniles at t.
    ``components["waiting_counts"][i]`` counts offspring with waiting time i.
    """
    n = _check_length(t_len)
    burn = population_burn_in(p.phi) if burn_in is None else int(burn_in)
    total = n + burn
    rng = stream.rng
    ledger = np.zeros(total, dtype=np.int64)
    waiting_counts = np.zeros(64, dtype=np.int64)
    x = np.empty(total, dtype=np.int64)
    pending_log = np.empty(total, dtype=np.int64)
    immigration = rng.poisson(p.tau, size=total)
    pending = 0
    for t in range(total):
        pending_log[t] = pending
        arrivals = int(ledger[t])
        pending -= arrivals
        x_t = int(immigration[t]) + arrivals
        x[t] = x_t
        births = binomial_thin(stream, p.kappa, x_t)
        if births == 0:
            continue
        pending += births
        if p.phi == 1.0:
            waits = np.ones(births, dtype=np.int64)
        else:
            waits = rng.geometric(p.phi, size=births)
        if waits.max() >= waiting_counts.size:
            waiting_counts = np.pad(waiting_counts, (0, int(waits.max()) + 1))
        np.add.at(waiting_counts, waits, 1)
        due = t + waits
        due = due[due < total]
        np.add.at(ledger, due, 1)
    return SimulationOutput(
        CountSeries(x[burn:]),
        latent=pending_log[burn:],
        burn_in_discarded=burn,
        components={"waiting_counts": waiting_counts},
    )


def simulate_inarma_thinned(p: InarmaParams, t_len: int, stream: RandomStream) -> SimulationOutput:
    """Binomially thinned INAR(1) form. ``latent`` holds Y_t."""
    n = _check_length(t_len)
    rng = stream.rng
    d = p.derived
    y = np.empty(n, dtype=np.int64)
    innovations = rng.poisson(d.latent_immigration, size=n)
    y_t = int(rng.poisson(d.latent_stationary_mean))
    y[0] = y_t
    for t in range(1, n):
        y_t = int(innovations[t]) + binomial_thin(stream, d.xi, y_t)
        y[t] = y_t
    x = rng.binomial(y, d.emission_prob) if d.emission_prob < 1.0 else y.copy()
    return SimulationOutput(CountSeries(x), latent=y)


def simulate(
    params: ModelParams,
    t_len: int,
    stream: RandomStream,
    representation: str = "state",
) -> SimulationOutput:
    """Dispatch on the parameter type; ``representation`` applies to INARMA(1, 1) only."""
    if isinstance(params, Inar1Params):
        return simulate_inar1(params, t_len, stream)
    if isinstance(params, Inarch1Params):
        return simulate_inarch1(params, t_len, stream)
    if isinstance(params, Ingarch11Params):
        return simulate_ingarch11(params, t_len, stream)
    if isinstance(params, InarmaParams):
        if representation == "state":
            return simulate_inarma_state(params, t_len, stream)
        if representation == "population":
            return simulate_inarma_population(params, t_len, stream)
        if representation == "thinned":
            return simulate_inarma_thinned(params, t_len, stream)
        raise ValueError(f"unknown representation {representation!r}; choose from {REPRESENTATIONS}")
    raise TypeError(f"unsupported parameter type {type(params).__name__}")
