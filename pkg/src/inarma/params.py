"""Parameter containers and closed-form moments for the four count models.

Four stationary Poisson count processes are supported:

* ``inar1``     -- X_t = I_t + alpha o X_{t-1},            I_t ~ Pois(nu)
* ``inarch1``   -- X_t | past ~ Pois(nu + alpha X_{t-1})
* ``ingarch11`` -- X_t | past ~ Pois(lambda_t),
                   lambda_t = nu + alpha X_{t-1} + beta lambda_{t-1}
* ``inarma11``  -- X_t = phi o S_t + I_t,
                   S_t = S_{t-1} - (X_{t-1} - I_{t-1}) + kappa o X_{t-1},
                   I_t ~ Pois(tau)

The INGARCH(1, 1) model can be written in the same (tau, phi, kappa) form as
the INARMA(1, 1) model, see :func:`ingarch_to_arma_form`. Both then share the
persistence ``xi = 1 - phi (1 - kappa)``, the geometric decay rate of their
autocorrelation functions.

All parameter classes validate at construction and are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import Any, Union

MODEL_IDS = ("inar1", "inarch1", "ingarch11", "inarma11")


class ParameterError(ValueError):
    """Raised when a parameter bundle violates its domain constraints."""


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParameterError(f"{name} must be a finite real number, got {value!r}")


@dataclass(frozen=True)
class Inar1Params:
    """Poisson INAR(1): immigration rate ``nu`` and survival probability ``alpha``."""

    nu: float
    alpha: float

    model = "inar1"

    def __post_init__(self) -> None:
        _check_finite(nu=self.nu, alpha=self.alpha)
        if not self.nu > 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class Inarch1Params:
    """Poisson INARCH(1) with intensity ``nu + alpha * X_{t-1}``."""

    nu: float
    alpha: float

    model = "inarch1"

    def __post_init__(self) -> None:
        _check_finite(nu=self.nu, alpha=self.alpha)
        if not self.nu > 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")
        if not 0 <= self.alpha < 1:
            raise ParameterError(f"alpha must lie in [0, 1), got {self.alpha}")


@dataclass(frozen=True)
class Ingarch11Params:
    """Poisson INGARCH(1, 1); stationary iff ``alpha + beta < 1``."""

    nu: float
    alpha: float
    beta: float

    model = "ingarch11"

    def __post_init__(self) -> None:
        _check_finite(nu=self.nu, alpha=self.alpha, beta=self.beta)
        if not self.nu > 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")
        if self.alpha < 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ParameterError(f"beta must be >= 0, got {self.beta}")
        if not self.alpha + self.beta < 1:
            raise ParameterError(
                f"alpha + beta must be < 1 for stationarity, got {self.alpha + self.beta}"
            )

    @classmethod
    def from_arma_form(cls, tau: float, phi: float, kappa: float) -> "Ingarch11Params":
        """Inverse of :func:`ingarch_to_arma_form`."""
        _check_finite(tau=tau, phi=phi, kappa=kappa)
        if not tau > 0:
            raise ParameterError(f"tau must be > 0, got {tau}")
        if not 0 < phi <= 1:
            raise ParameterError(f"phi must lie in (0, 1], got {phi}")
        if not 0 <= kappa < 1:
            raise ParameterError(f"kappa must lie in [0, 1), got {kappa}")
        return cls(nu=tau * phi, alpha=kappa * phi, beta=1.0 - phi)


@dataclass(frozen=True)
class InarmaParams:
    """Poisson INARMA(1, 1).

    Parameters
    ----------
    tau : float
        Rate of the Poisson immigration ``I_t``.
    phi : float
        Per-period probability that a latent (juvenile) unit matures, in (0, 1].
    kappa : float
        Probability that an observed unit produces one latent offspring, in (0, 1).
    """

    tau: float
    phi: float
    kappa: float

    model = "inarma11"

    def __post_init__(self) -> None:
        _check_finite(tau=self.tau, phi=self.phi, kappa=self.kappa)
        if not self.tau > 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        if not 0 < self.phi <= 1:
            raise ParameterError(f"phi must lie in (0, 1], got {self.phi}")
        if not 0 < self.kappa < 1:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}")

    @property
    def derived(self) -> "DerivedInarma":
        return DerivedInarma.of(self)


ModelParams = Union[Inar1Params, Inarch1Params, Ingarch11Params, InarmaParams]

PARAM_CLASSES: dict[str, type] = {
    "inar1": Inar1Params,
    "inarch1": Inarch1Params,
    "ingarch11": Ingarch11Params,
    "inarma11": InarmaParams,
}


@dataclass(frozen=True)
class DerivedInarma:
    """Quantities of the hidden INAR(1) representation of an INARMA(1, 1).

    The observed process is a binomial thinning ``X_t ~ Bin(Y_t, emission_prob)``
    of the INAR(1) chain ``Y_t = J_t + xi o Y_{t-1}`` with
    ``J_t ~ Pois(latent_immigration)``. The latent S-chain of the state
    representation is itself INAR(1) with immigration rate ``s_immigration``
    and the same thinning probability ``xi``.
    """

    xi: float
    emission_prob: float
    latent_immigration: float
    latent_stationary_mean: float
    s_immigration: float
    s_stationary_mean: float
    mean: float

    @classmethod
    def of(cls, p: InarmaParams) -> "DerivedInarma":
        xi = xi_of(p.phi, p.kappa)
        latent_immigration = p.tau * xi / p.kappa
        # 1 - xi = phi (1 - kappa), avoids cancellation for xi close to 1
        one_minus_xi = p.phi * (1.0 - p.kappa)
        return cls(
            xi=xi,
            emission_prob=min(1.0, p.phi * p.kappa / xi),
            latent_immigration=latent_immigration,
            latent_stationary_mean=latent_immigration / one_minus_xi,
            s_immigration=p.kappa * p.tau,
            s_stationary_mean=p.kappa * p.tau / one_minus_xi,
            mean=p.tau / (1.0 - p.kappa),
        )


def xi_of(phi: float, kappa: float) -> float:
    """Persistence ``1 - phi (1 - kappa)``; lies strictly in ``(kappa, 1)`` for phi < 1."""
    if not 0 < phi <= 1:
        raise ParameterError(f"phi must lie in (0, 1], got {phi}")
    if not 0 < kappa < 1:
        raise ParameterError(f"kappa must lie in (0, 1), got {kappa}")
    return 1.0 - phi * (1.0 - kappa)


def ingarch_to_arma_form(p: Ingarch11Params) -> tuple[float, float, float]:
    """Map INGARCH(1, 1) ``(nu, alpha, beta)`` to ``(tau, phi, kappa)``.

    ``tau = nu / (1 - beta)``, ``phi = 1 - beta``, ``kappa = alpha / (1 - beta)``.
    Stationarity guarantees ``0 <= kappa < 1``.
    """
    phi = 1.0 - p.beta
    return p.nu / phi, phi, p.alpha / phi


def _arma_form(model: ModelParams) -> tuple[float, float, float]:
    if isinstance(model, InarmaParams):
        return model.tau, model.phi, model.kappa
    if isinstance(model, Ingarch11Params):
        return ingarch_to_arma_form(model)
    raise TypeError(f"no ARMA form for {type(model).__name__}")


def stationary_mean(model: ModelParams) -> float:
    if isinstance(model, (Inar1Params, Inarch1Params)):
        return model.nu / (1.0 - model.alpha)
    tau, _, kappa = _arma_form(model)
    return tau / (1.0 - kappa)


def stationary_variance(model: ModelParams) -> float:
    mean = stationary_mean(model)
    if isinstance(model, (Inar1Params, InarmaParams)):
        return mean
    if isinstance(model, Inarch1Params):
        return mean / (1.0 - model.alpha**2)
    _, phi, kappa = _arma_form(model)
    xi = 1.0 - phi * (1.0 - kappa)
    base = 1.0 - xi**2
    return (base + (kappa * phi) ** 2) / base * mean


def acf(model: ModelParams, h: int) -> float:
    """Autocorrelation at lag ``h``; ``acf(model, 0) == 1`` by convention."""
    if h < 0 or int(h) != h:
        raise ValueError(f"lag must be a non-negative integer, got {h}")
    if h == 0:
        return 1.0
    if isinstance(model, (Inar1Params, Inarch1Params)):
        return model.alpha**h
    _, phi, kappa = _arma_form(model)
    xi = 1.0 - phi * (1.0 - kappa)
    rho1 = phi * kappa
    if isinstance(model, Ingarch11Params):
        base = 1.0 - xi**2 + rho1**2
        rho1 *= (base + rho1 * (1.0 - phi)) / base
    return rho1 * xi ** (h - 1)


def n_model_params(model_id: str) -> int:
    """Number of estimated quantities entering the AIC, initial intensities included."""
    return {"inar1": 2, "inarch1": 3, "ingarch11": 4, "inarma11": 3}[model_id]


def params_to_dict(model: ModelParams) -> dict[str, Any]:
    out: dict[str, Any] = {"model": model.model}
    for f in fields(model):
        out[f.name] = float(getattr(model, f.name))
    return out


def params_from_dict(data: dict[str, Any]) -> ModelParams:
    try:
        cls = PARAM_CLASSES[data["model"]]
    except KeyError as exc:
        raise ParameterError(f"unknown or missing model id: {data.get('model')!r}") from exc
    names = [f.name for f in fields(cls)]
    missing = [n for n in names if n not in data]
    if missing:
        raise ParameterError(f"missing parameters for {data['model']}: {', '.join(missing)}")
    return cls(**{n: float(data[n]) for n in names})


def params_to_json(model: ModelParams) -> str:
    # repr of a float is the shortest string that round-trips (<= 17 significant digits)
    return json.dumps(params_to_dict(model))


def params_from_json(text: str) -> ModelParams:
    return params_from_dict(json.loads(text))
