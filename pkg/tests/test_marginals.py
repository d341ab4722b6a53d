"""ARMA-GARCH filtering, fitting, and forecasting against hand oracles."""

import math

import numpy as np
import pytest
from scipy import stats

from riskgrid import distributions as dist
from riskgrid import marginals as mg


def _params(**kw):
    base = dict(mu=0.0, phi=0.0, theta=0.0, omega=0.1, alpha=0.2, beta=0.5,
                gamma=0.0, delta=2.0, dist_params={})
    base.update(kw)
    return mg.ArmaGarchParams(**base)


def test_grid_has_twenty_specs():
    grid = mg.full_grid()
    assert len(grid) == 20
    assert len({s.label for s in grid}) == 20


def test_hand_rolled_garch_recursion():
    # hand recursion: sigma2_0 = omega / (1 - alpha - beta), prior squared
    # shock initialized at the same value
    r = np.array([1.0, -1.0, 2.0])
    p = _params(omega=0.1, alpha=0.2, beta=0.5)
    spec = mg.MarginalSpec("GARCH", "normal")
    _, s2, z = mg.garch_filter(p, spec, r)

    s2_0 = 0.1 / (1 - 0.2 - 0.5)
    expect = []
    prev_e2, prev_s2 = s2_0, s2_0
    for x in r:
        cur = 0.1 + 0.2 * prev_e2 + 0.5 * prev_s2
        expect.append(cur)
        prev_e2, prev_s2 = x * x, cur
    assert np.allclose(s2, expect, atol=1e-12, rtol=0)
    assert np.allclose(z, r / np.sqrt(expect), atol=1e-12, rtol=0)


def test_constant_variance_case():
    r = np.array([0.3, -0.2, 0.5, 0.1])
    p = _params(omega=0.25, alpha=0.0, beta=0.0)
    spec = mg.MarginalSpec("GARCH", "normal")
    _, s2, z = mg.garch_filter(p, spec, r)
    assert np.allclose(s2, 0.25)
    assert np.allclose(z, r / 0.5)


def test_tgarch_is_aparch_with_delta_one():
    rng = np.random.default_rng(0)
    r = rng.standard_normal(200)
    p1 = _params(omega=0.05, alpha=0.1, beta=0.8, gamma=0.2, delta=1.0)
    _, s2_t, _ = mg.garch_filter(p1, mg.MarginalSpec("TGARCH", "normal"), r)
    _, s2_a, _ = mg.garch_filter(p1, mg.MarginalSpec("APARCH", "normal"), r)
    assert np.allclose(s2_t, s2_a, atol=1e-14, rtol=0)


def test_loglikelihood_matches_direct_sum():
    rng = np.random.default_rng(1)
    r = rng.standard_normal(300) * 0.01
    p = _params(mu=0.0002, omega=1e-5, alpha=0.08, beta=0.85)
    spec = mg.MarginalSpec("GARCH", "normal")
    _, s2, _ = mg.garch_filter(p, spec, r)
    eps = r - 0.0002
    oracle = float(np.sum(stats.norm.logpdf(eps, scale=np.sqrt(s2))))
    assert abs(mg.loglikelihood(p, spec, r) - oracle) < 1e-8


def test_filter_reproduces_fit_paths():
    rng = np.random.default_rng(2)
    r = rng.standard_normal(400) * 0.01
    fm = mg.fit_marginal(r, mg.MarginalSpec("GARCH", "normal"), compute_stderr=False)
    mean, s2, z = mg.garch_filter(fm.params, fm.spec, r)
    assert np.array_equal(s2, fm.cond_var)
    assert np.array_equal(z, fm.std_resid)


def test_fit_rejects_bad_input():
    with pytest.raises(mg.FitError):
        mg.fit_marginal(np.ones(500), mg.MarginalSpec("GARCH", "normal"))
    with pytest.raises(mg.FitError):
        mg.fit_marginal(np.zeros(50), mg.MarginalSpec("GARCH", "normal"))


def test_iid_normal_input_yields_low_persistence():
    rng = np.random.default_rng(3)
    ok = 0
    for rep in range(10):
        r = rng.standard_normal(1000)
        fm = mg.fit_marginal(r, mg.MarginalSpec("GARCH", "normal"),
                             compute_stderr=False)
        iid_ll = float(np.sum(stats.norm.logpdf(r, scale=r.std())))
        if fm.params.alpha + fm.params.beta < 0.2 or \
                abs(fm.loglik - iid_ll) < 0.005 * abs(iid_ll):
            ok += 1
    assert ok >= 8


def test_one_step_forecast_hand_values():
    # state assembled directly: last eps^2 = 4, last sigma2 = 2
    p = _params(omega=0.1, alpha=0.2, beta=0.5)
    spec = mg.MarginalSpec("GARCH", "normal")
    fm = mg.FittedMarginal(
        spec=spec, params=p, cond_mean=np.array([0.0]), cond_var=np.array([2.0]),
        std_resid=np.array([0.0]), pit=np.array([0.5]), loglik=0.0, aic=0.0,
        converged=True, last_return=2.0,
    )
    mu_next, s2_next = mg.forecast_one_step(fm)
    assert abs(mu_next - 0.0) < 1e-15
    assert abs(s2_next - (0.1 + 0.2 * 4.0 + 0.5 * 2.0)) < 1e-12

    fm2 = mg.FittedMarginal(
        spec=spec, params=_params(mu=0.01, omega=0.25, alpha=0.0, beta=0.0),
        cond_mean=np.array([0.01]), cond_var=np.array([0.25]),
        std_resid=np.array([0.0]), pit=np.array([0.5]), loglik=0.0, aic=0.0,
        converged=True, last_return=0.01,
    )
    mu2, s22 = mg.forecast_one_step(fm2)
    assert abs(mu2 - 0.01) < 1e-15
    assert abs(s22 - 0.25) < 1e-15


def test_h_step_variance_formula():
    p = _params(omega=0.1, alpha=0.1, beta=0.8)
    assert abs(mg.forecast_h_step_var(p, 2.0, 1) - 2.0) < 1e-15
    # uncond = 1; h=3: 1 + 0.81 * (2 - 1)
    assert abs(mg.forecast_h_step_var(p, 2.0, 3) - 1.81) < 1e-12
    assert abs(mg.forecast_h_step_var(p, 2.0, 500) - 1.0) < 1e-10
    with pytest.raises(ValueError):
        mg.forecast_h_step_var(p, 2.0, 0)
    with pytest.raises(ValueError):
        mg.forecast_h_step_var(_params(alpha=0.5, beta=0.6), 2.0, 2)


def test_innovation_quantile_conventions():
    assert abs(mg.innovation_quantile("normal", {}, 0.5)) < 1e-12
    nu = 5.0
    scale = math.sqrt((nu - 2) / nu)
    oracle = stats.t.ppf(0.975, df=nu) * scale
    assert abs(mg.innovation_quantile("student_t", {"nu": nu}, 0.975) - oracle) < 1e-8


def test_univariate_risk_normal_level_99():
    p = _params(mu=0.0, omega=1.0, alpha=0.0, beta=0.0)
    spec = mg.MarginalSpec("GARCH", "normal")
    fm = mg.FittedMarginal(
        spec=spec, params=p, cond_mean=np.array([0.0]), cond_var=np.array([1.0]),
        std_resid=np.array([0.0]), pit=np.array([0.5]), loglik=0.0, aic=0.0,
        converged=True, last_return=0.0,
    )
    var, es = mg.forecast_univariate_risk(fm, 0.99)
    assert abs(var - 2.3263) < 5e-5
    assert abs(es - 2.6652) < 5e-5
    for level in (0.95, 0.975, 0.99, 0.999):
        v, e = mg.forecast_univariate_risk(fm, level)
        assert e >= v


def test_fit_recovery_single_path():
    true = _params(mu=0.0, omega=0.05, alpha=0.05, beta=0.90)
    spec = mg.MarginalSpec("GARCH", "normal")
    rng = np.random.default_rng(11)
    r = mg.simulate_path(true, spec, rng.standard_normal(2000))
    fm = mg.fit_marginal(r, spec)
    assert fm.converged
    se = fm.param_stderr
    for name, truth in (("omega", 0.05), ("alpha", 0.05), ("beta", 0.90)):
        est = getattr(fm.params, name)
        bound = 4.0 * se.get(name, np.inf)
        assert abs(est - truth) < max(bound, 0.1), (name, est, truth, bound)


def test_pit_uniform_under_true_model():
    true = _params(mu=0.0, omega=0.05, alpha=0.05, beta=0.90)
    spec = mg.MarginalSpec("GARCH", "normal")
    rng = np.random.default_rng(21)
    r = mg.simulate_path(true, spec, rng.standard_normal(1500))
    fm = mg.fit_marginal(r, spec, compute_stderr=False)
    assert mg.ks_uniform_pvalue(fm.pit) > 0.01


def test_stationarity_checks():
    with pytest.raises(ValueError):
        mg.check_stationarity(_params(alpha=0.6, beta=0.5),
                              mg.MarginalSpec("GARCH", "normal"))
    mg.check_stationarity(_params(alpha=0.05, beta=0.9),
                          mg.MarginalSpec("GARCH", "normal"))


def test_egarch_filter_runs_and_forecasts():
    rng = np.random.default_rng(4)
    r = rng.standard_normal(300)
    p = _params(omega=0.0, alpha=-0.05, beta=0.95, gamma=0.1)
    spec = mg.MarginalSpec("EGARCH", "normal")
    _, s2, _ = mg.garch_filter(p, spec, r)
    assert np.all(s2 > 0)
