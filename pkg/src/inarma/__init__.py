"""Poisson INARMA(1, 1) count time-series model and its INAR/INARCH/INGARCH comparators."""

from .data import CountSeries, read_counts
from .estimate import FitOptions, FitResult, aic, fit
from .forecast import log_score, predictive_one_step, rolling_forecast
from .likelihood import (
    ForwardFilter,
    brute_force_loglik,
    choose_ymax,
    inar1_loglik,
    inarch1_loglik,
    inarma_loglik_forward,
    ingarch11_loglik,
)
from .params import (
    Inar1Params,
    Inarch1Params,
    Ingarch11Params,
    InarmaParams,
    acf,
    stationary_mean,
    stationary_variance,
    xi_of,
)
from .simulate import simulate
from .stochastic import RandomStream

__version__ = "0.1.0"
