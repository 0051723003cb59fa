import csv
import io
import json
import math

import numpy as np
import pytest
from scipy import stats

import inarma.forecast as forecast_mod
from inarma.estimate import FitOptions, FitResult, fit
from inarma.forecast import (
    PredictiveDistribution,
    default_start_index,
    log_score,
    predictive_one_step,
    rolling_forecast,
)
from inarma.likelihood import brute_force_loglik, loglik
from inarma.params import Inar1Params, Inarch1Params, Ingarch11Params, InarmaParams
from inarma.simulate import simulate
from inarma.stochastic import LogPmf, RandomStream

GOLD = InarmaParams(0.31, 0.67, 0.80)
QUICK = FitOptions(n_starts=2, max_evals=600, seed=1)


def _result(params, initial=None, y_max=None):
    return FitResult(params.model, params, initial, 0.0, 1, 0.0, True, 0, y_max)


def _series(params, n, seed):
    return simulate(params, n, RandomStream(seed)).series


# --- predictive distributions ----------------------------------------------------------


def test_inar1_after_zero_is_immigration_law():
    pred = predictive_one_step(_result(Inar1Params(0.73, 0.53)), [3, 1, 0])
    k = np.arange(pred.pmf.support_max + 1)
    np.testing.assert_allclose(pred.probs(), stats.poisson.pmf(k, 0.73), atol=1e-14)
    assert pred.origin_index == 3


def test_inarch1_predictive_is_poisson():
    pred = predictive_one_step(_result(Inarch1Params(0.9, 0.4), 1.0), [2, 5])
    assert -pred.pmf.logpmf(0) == pytest.approx(0.9 + 0.4 * 5, abs=1e-13)


def test_ingarch_predictive_uses_full_recursion():
    p = Ingarch11Params(0.4, 0.3, 0.5)
    lam = 0.5 * 1.0 + 0.4 / 0.5
    history = [2, 0, 4, 1]
    for v in history:
        lam = p.nu + p.alpha * v + p.beta * lam
    pred = predictive_one_step(_result(p, 1.0), history)
    assert -pred.pmf.logpmf(0) == pytest.approx(lam, abs=1e-12)


def test_inarma_phi_one_matches_inar1_predictive():
    history = _series(Inar1Params(0.7, 0.45), 120, 3)
    a = predictive_one_step(_result(InarmaParams(0.7, 1.0, 0.45)), history)
    b = predictive_one_step(_result(Inar1Params(0.7, 0.45)), history)
    n = min(a.pmf.support_max, b.pmf.support_max) + 1
    np.testing.assert_allclose(a.probs()[:n], b.probs()[:n], atol=1e-8)


@pytest.mark.parametrize(
    "p, history",
    [
        (InarmaParams(0.3, 0.6, 0.5), [1, 0, 2, 1]),
        (InarmaParams(0.2, 0.8, 0.4), [0, 0, 1]),
        (InarmaParams(0.5, 0.4, 0.3), [2, 1, 0, 1]),
    ],
)
def test_inarma_predictive_matches_enumeration(p, history):
    # the latent tail beyond 20 is far below 1e-12 here, so truncation plays no role
    pred = predictive_one_step(_result(p), history)
    base = brute_force_loglik(p, history, 20)
    for v in range(5):
        oracle = math.exp(brute_force_loglik(p, history + [v], 20) - base)
        assert abs(pred.probs()[v] - oracle) < 1e-9


@pytest.mark.parametrize(
    "fit_result",
    [
        _result(Inar1Params(0.73, 0.53)),
        _result(Inarch1Params(2.08, 0.15), 2.5),
        _result(Ingarch11Params(0.2, 0.3, 0.55), 1.7),
        _result(GOLD),
        _result(InarmaParams(1.21, 0.25, 0.52)),
    ],
)
def test_predictive_normalised_with_small_tail(fit_result):
    history = _series(fit_result.params, 80, 4)
    pred = predictive_one_step(fit_result, history)
    assert abs(pred.pmf.total_log_mass()) < 1e-9
    assert pred.probs().sum() > 1 - 1e-9
    assert pred.pmf.support_max >= 2 * history.max


@pytest.mark.parametrize(
    "fit_result",
    [
        _result(Inar1Params(0.73, 0.53)),
        _result(Inarch1Params(2.08, 0.15), 2.5),
        _result(Ingarch11Params(0.2, 0.3, 0.55), 1.7),
        _result(GOLD),
    ],
)
def test_scores_follow_likelihood_chain_rule(fit_result):
    x = _series(fit_result.params, 60, 5).values
    p, init = fit_result.params, fit_result.initial
    for t in (10, 35, 59):
        gap = loglik(p, x[: t + 1], init) - loglik(p, x[:t], init)
        assert log_score(predictive_one_step(fit_result, x[:t]), x[t]) == pytest.approx(-gap, abs=1e-9)


# --- log score -------------------------------------------------------------------------


def test_log_score_examples():
    assert log_score(PredictiveDistribution(LogPmf.poisson(1.0, 30), 0), 0) == pytest.approx(1.0, abs=1e-15)
    assert log_score(PredictiveDistribution(LogPmf.point_mass(4), 0), 4) == 0.0


def test_log_score_extends_support():
    pred = predictive_one_step(_result(Inarch1Params(0.9, 0.4), 1.0), [1, 1, 1])
    far = pred.pmf.support_max + 7
    assert log_score(pred, far) == pytest.approx(-stats.poisson.logpmf(far, 1.3), rel=1e-12)


def test_log_score_extends_inarma_support():
    pred = predictive_one_step(_result(GOLD), [1, 0, 1])
    far = pred.pmf.support_max + 3
    assert math.isfinite(log_score(pred, far))


def test_log_score_rejects_negative():
    with pytest.raises(ValueError):
        log_score(PredictiveDistribution(LogPmf.point_mass(0), 0), -1)


# --- rolling evaluation ------------------------------------------------------------------


def test_default_start_index():
    assert default_start_index(370) == 185
    assert default_start_index(7) == 3


@pytest.fixture(scope="module")
def short_gold():
    return _series(GOLD, 60, 6)


@pytest.mark.parametrize("model_id", ["inar1", "inarch1", "ingarch11", "inarma11"])
def test_rolling_bookkeeping(model_id, short_gold):
    rep = rolling_forecast(model_id, short_gold, 50, QUICK)
    assert [s.origin_index for s in rep.steps] == list(range(50, 60))
    assert [s.observed for s in rep.steps] == list(short_gold.values[50:])
    assert rep.mean_log_score == math.fsum(s.log_score for s in rep.steps) / 10
    assert all(s.log_score >= 0 for s in rep.steps)


@pytest.mark.parametrize("model_id", ["inar1", "inarch1", "ingarch11", "inarma11"])
def test_warm_and_cold_agree(model_id, short_gold):
    warm = rolling_forecast(model_id, short_gold, 50, QUICK, warm_start=True)
    cold = rolling_forecast(model_id, short_gold, 50, QUICK, warm_start=False)
    assert abs(warm.mean_log_score - cold.mean_log_score) < 1e-4


def test_parallel_cold_matches_sequential(short_gold):
    a = rolling_forecast("inarch1", short_gold, 54, QUICK, warm_start=False)
    b = rolling_forecast("inarch1", short_gold, 54, QUICK, warm_start=False, workers=2)
    assert a.mean_log_score == b.mean_log_score


@pytest.mark.parametrize("model_id", ["inarch1", "ingarch11"])
def test_constant_series_scores_equal(model_id):
    rep = rolling_forecast(model_id, [2] * 24, 12, FitOptions(n_starts=2, max_evals=800))
    scores = np.array([s.log_score for s in rep.steps])
    assert np.ptp(scores) < 1e-4


def test_failed_refit_reuses_previous(monkeypatch, short_gold):
    real_fit = forecast_mod.fit
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 3:
            raise RuntimeError("optimizer stalled")
        return real_fit(*args, **kwargs)

    monkeypatch.setattr(forecast_mod, "fit", flaky)
    rep = rolling_forecast("inar1", short_gold, 55, QUICK)
    flags = [s.refit_failed for s in rep.steps]
    assert flags == [False, False, True, False, False]
    assert rep.steps[2].fit == rep.steps[1].fit


def test_start_index_validation(short_gold):
    with pytest.raises(ValueError):
        rolling_forecast("inar1", short_gold, 2)
    with pytest.raises(ValueError):
        rolling_forecast("inar1", short_gold, 60)


def test_report_serialisation(short_gold):
    rep = rolling_forecast("inarch1", short_gold, 56, QUICK)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["origin_index", "observed", "log_score"]
    assert [float(r[2]) for r in rows[1:]] == [s.log_score for s in rep.steps]
    data = json.loads(rep.to_json())
    assert data["mean_log_score"] == rep.mean_log_score
    assert len(data["steps"]) == 4 and "params_natural" in data["steps"][0]["fit"]


# --- sanity property ---------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize(
    "truth",
    [GOLD, Ingarch11Params.from_arma_form(0.47, 0.46, 0.70)],
    ids=["inarma-truth", "ingarch-truth"],
)
def test_true_model_scores_best(truth):
    # fit on the first half, score the second half with the fixed fits
    x = _series(truth, 2000, 7).values
    scores = {}
    for model_id in ("inar1", "inarch1", "ingarch11", "inarma11"):
        r = fit(model_id, x[:1000], QUICK)
        full = loglik(r.params, x, r.initial)
        scores[model_id] = -(full - loglik(r.params, x[:1000], r.initial)) / 1000
    best_other = min(v for k, v in scores.items() if k != truth.model)
    assert scores[truth.model] <= best_other + 0.05, scores
