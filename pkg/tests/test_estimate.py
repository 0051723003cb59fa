import json
import math

import numpy as np
import pytest

from inarma.data import sample_acf
from inarma.estimate import (
    FitOptions,
    FitResult,
    aic,
    fit,
    from_unconstrained,
    method_of_moments_seed,
    moments_to_inarma,
    nested_start,
    to_unconstrained,
)
from inarma.likelihood import inarma_loglik_forward
from inarma.params import (
    Inar1Params,
    Inarch1Params,
    Ingarch11Params,
    InarmaParams,
    ParameterError,
)
from inarma.simulate import simulate
from inarma.stochastic import RandomStream

GOLD = InarmaParams(0.31, 0.67, 0.80)
QUICK = FitOptions(n_starts=2, max_evals=800, tol=1e-8, seed=3)


def _series(params, n, seed):
    return simulate(params, n, RandomStream(seed)).series


@pytest.fixture(scope="module")
def gold_short():
    return _series(GOLD, 300, 21)


# --- transforms --------------------------------------------------------------------


def test_unit_inarma_maps_to_origin():
    u = to_unconstrained(InarmaParams(1.0, 0.5, 0.5))
    np.testing.assert_array_equal(u, [0.0, 0.0, 0.0])
    p, initial = from_unconstrained("inarma11", u)
    assert p == InarmaParams(1.0, 0.5, 0.5) and initial is None


def test_boundary_adjacent_phi_round_trip():
    p, _ = from_unconstrained("inarma11", to_unconstrained(InarmaParams(0.7, 0.999999, 0.3)))
    assert abs(p.phi - 0.999999) < 1e-9


def _random_params(rng):
    model = rng.choice(["inar1", "inarch1", "ingarch11", "inarma11"])
    nu = float(np.exp(rng.uniform(-3, 3)))
    a = float(rng.uniform(0.01, 0.99))
    if model == "inar1":
        return Inar1Params(nu, a), None
    if model == "inarch1":
        return Inarch1Params(nu, a), float(np.exp(rng.uniform(-3, 3)))
    if model == "ingarch11":
        c = float(rng.uniform(0.02, 0.98))
        return Ingarch11Params(nu, a * c, (1 - a) * c), float(np.exp(rng.uniform(-3, 3)))
    return InarmaParams(nu, float(rng.uniform(0.01, 0.99)), a), None


def test_random_round_trips():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10**4):
        p, initial = _random_params(rng)
        q, back = from_unconstrained(p.model, to_unconstrained(p, initial))
        a = np.array(list(vars(p).values()) + ([initial] if initial is not None else []))
        b = np.array(list(vars(q).values()) + ([back] if back is not None else []))
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst < 1e-10


def test_ingarch_transform_always_stationary():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        p, s1 = from_unconstrained("ingarch11", rng.normal(0, 6, size=4))
        assert p.alpha + p.beta < 1 and s1 > 0


def test_non_finite_vector_rejected():
    with pytest.raises(ParameterError):
        from_unconstrained("inarma11", [0.0, math.nan, 0.0])
    with pytest.raises(ParameterError):
        from_unconstrained("inar1", [math.inf, 0.0])


# --- AIC -----------------------------------------------------------------------------


def test_aic_examples():
    assert aic(0.0, 0) == 0.0
    assert aic(-504.0, 3) == 1014.0
    assert aic(-404.5, 4) == 817.0


# --- method of moments ------------------------------------------------------------------


def test_moment_inversion_exact_acf():
    # rho(2) = rho(1) * xi with xi = 1 - 0.67 * 0.2; the rounded 0.464 would not give 1e-6
    p = moments_to_inarma(1.55, 0.536, 0.536 * 0.866)
    assert p.tau == pytest.approx(0.31, abs=1e-6)
    assert p.phi == pytest.approx(0.67, abs=1e-6)
    assert p.kappa == pytest.approx(0.80, abs=1e-6)


def test_moment_inversion_rounded_rho2_is_close():
    p = moments_to_inarma(1.55, 0.536, 0.464)
    assert p.phi == pytest.approx(0.67, abs=2e-3)
    assert p.kappa == pytest.approx(0.80, abs=2e-3)


@pytest.mark.parametrize("model_id", ["inar1", "inarch1", "ingarch11", "inarma11"])
def test_negative_acf_falls_back(model_id):
    x = np.array([1, 3] * 50)
    assert sample_acf(x, 1)[1] < 0
    p, initial = method_of_moments_seed(model_id, x)
    mean = x.mean()
    if model_id == "inarma11":
        assert (p.tau, p.phi, p.kappa) == pytest.approx((mean / 2, 0.5, 0.5))
    elif model_id == "ingarch11":
        assert p.alpha == pytest.approx(0.25) and p.beta == pytest.approx(0.5)
    else:
        assert p.alpha == 0.5 and p.nu == pytest.approx(mean / 2)


def test_constant_series_falls_back():
    p, _ = method_of_moments_seed("inarma11", [2] * 20)
    assert (p.phi, p.kappa) == (0.5, 0.5)


def test_moment_seed_consistent_on_long_series():
    x = _series(GOLD, 10**5, 22)
    p, _ = method_of_moments_seed("inarma11", x)
    assert abs(p.tau - 0.31) < 0.05
    assert abs(p.phi - 0.67) < 0.05
    assert abs(p.kappa - 0.80) < 0.05
    q, _ = method_of_moments_seed("inar1", _series(Inar1Params(0.73, 0.53), 10**5, 23))
    assert abs(q.nu - 0.73) < 0.05 and abs(q.alpha - 0.53) < 0.05


def test_moment_seed_clamps():
    p, _ = method_of_moments_seed("inar1", [0, 0, 0, 0, 50, 50, 50, 50, 50])
    assert 0.01 <= p.alpha <= 0.99


def test_moment_seed_needs_three_points():
    with pytest.raises(ValueError):
        method_of_moments_seed("inar1", [1, 2])


# --- fitting -----------------------------------------------------------------------------


@pytest.mark.parametrize("model_id", ["inar1", "inarch1", "ingarch11", "inarma11"])
def test_fit_invariants(model_id, gold_short):
    r = fit(model_id, gold_short, QUICK)
    k = {"inar1": 2, "inarch1": 3, "ingarch11": 4, "inarma11": 3}[model_id]
    assert r.k == k
    assert abs(r.aic - (2 * r.k - 2 * r.loglik)) < 1e-9
    assert r.n_evals > 0
    # local optimality: restarting from the optimum does not move the likelihood
    again = fit(model_id, gold_short, QUICK, extra_starts=[(r.params, r.initial)], include_moment_starts=False)
    assert abs(again.loglik - r.loglik) < 1e-6


def test_fit_is_deterministic(gold_short):
    a = fit("inarma11", gold_short, QUICK)
    b = fit("inarma11", gold_short, QUICK)
    assert a == b


def test_inarma_loglik_is_exact_re_evaluation(gold_short):
    r = fit("inarma11", gold_short, QUICK)
    assert r.y_max_used is not None
    assert r.loglik == inarma_loglik_forward(r.params, gold_short, r.y_max_used)


def test_ymax_override_respected(gold_short):
    r = fit("inarma11", gold_short, FitOptions(n_starts=1, max_evals=300, y_max_override=40))
    assert r.y_max_used == 40
    with pytest.raises(ValueError):
        fit("inarma11", gold_short, FitOptions(y_max_override=gold_short.max - 1))


def test_nested_dominance(gold_short):
    inarch = fit("inarch1", gold_short, QUICK)
    ingarch = fit("ingarch11", gold_short, QUICK, extra_starts=[nested_start("ingarch11", inarch)])
    assert ingarch.loglik >= inarch.loglik - 1e-6
    inar = fit("inar1", gold_short, QUICK)
    inarma = fit("inarma11", gold_short, QUICK, extra_starts=[nested_start("inarma11", inar)])
    assert inarma.loglik >= inar.loglik - 1e-6


def test_nested_start_preserves_intensity():
    r = FitResult("inarch1", Inarch1Params(0.9, 0.4), 2.3, -100.0, 3, 206.0, True, 10)
    p, s1 = nested_start("ingarch11", r)
    assert (1 - p.beta) * s1 + p.nu / (1 - p.beta) == pytest.approx(r.initial, rel=1e-6)
    with pytest.raises(ValueError):
        nested_start("inarma11", r)


@pytest.mark.parametrize("model_id", ["inar1", "inarch1", "ingarch11", "inarma11"])
def test_constant_series_does_not_crash(model_id):
    r = fit(model_id, [2] * 30, FitOptions(n_starts=2, max_evals=500))
    assert math.isfinite(r.loglik)
    assert isinstance(r.converged, bool)


def test_all_zero_series_does_not_crash():
    r = fit("inarma11", [0] * 30, FitOptions(n_starts=2, max_evals=500))
    assert math.isfinite(r.loglik) and r.loglik <= 0


def test_short_series_rejected():
    with pytest.raises(ValueError):
        fit("inar1", [1, 2])
    with pytest.raises(ValueError):
        fit("arma", [1, 2, 3])


def test_fit_options_validation():
    with pytest.raises(ValueError):
        FitOptions(n_starts=0)
    with pytest.raises(ValueError):
        FitOptions(tol=0.0)


@pytest.mark.parametrize("model_id", ["inarch1", "ingarch11", "inarma11"])
def test_fit_result_json_round_trip(model_id, gold_short):
    r = fit(model_id, gold_short, FitOptions(n_starts=1, max_evals=200))
    data = json.loads(r.to_json())
    assert set(data) == {"model_id", "params_natural", "loglik", "k", "aic", "converged", "n_evals", "y_max_used"}
    assert FitResult.from_dict(data) == r
    if model_id == "ingarch11":
        assert {"nu", "alpha", "beta", "s1", "tau", "phi", "kappa"} == set(data["params_natural"])
