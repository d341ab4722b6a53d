"""Rolling backtests that decide which forecast models stay candidates.

VaR models: duration test (censored Weibull likelihood ratio) or dynamic
quantile regression. ES models: conditional calibration (two-component
identification function, one-sided against risk understatement, Hommel
combination) or the exceedance-residual bootstrap. Tests with no
information (no hits, no exceedances) are degenerate and pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import optimize, stats

from .forecast import ForecastCube, ModelId, derive_seed

VAR_TESTS = ("duration", "dq")
ES_TESTS = ("cc", "er")


@dataclass(frozen=True)
class BacktestResult:
    test: str
    statistic: float
    p_value: float
    rejected: bool
    n_hits: int
    degenerate: bool = False
    reason: str = ""


def hit_sequence(returns: np.ndarray, var_forecasts: np.ndarray) -> np.ndarray:
    """Daily violation indicators: hit_t = 1 iff r_t < -VaR_t (strict)."""
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_forecasts, dtype=float)
    if r.shape != v.shape:
        raise ValueError(f"misaligned series: {r.shape} vs {v.shape}")
    return (r < -v).astype(np.int64)


def _pass(test, n_hits, reason) -> BacktestResult:
    return BacktestResult(test=test, statistic=0.0, p_value=1.0, rejected=False,
                          n_hits=n_hits, degenerate=True, reason=reason)


# ---------------------------------------------------------------------------
# duration test


def _spells(hits: np.ndarray):
    """Durations between hits; first/last spells flagged censored."""
    idx = np.flatnonzero(hits)
    t = hits.size
    durations, censored = [], []
    times = idx + 1  # 1-based day numbers
    first = times[0]
    durations.append(first)
    censored.append(hits[0] == 0)
    for a, b in zip(times, times[1:]):
        durations.append(b - a)
        censored.append(False)
    last = t - times[-1]
    if last > 0:
        durations.append(last)
        censored.append(True)
    return np.asarray(durations, dtype=float), np.asarray(censored, dtype=bool)


def exponential_loglik(durations, censored, rate) -> float:
    """Censored exponential log-likelihood; density p e^{-pD}, survival e^{-pD}."""
    d = np.asarray(durations, dtype=float)
    c = np.asarray(censored, dtype=bool)
    if rate <= 0:
        return -np.inf
    ll = np.where(c, -rate * d, math.log(rate) - rate * d)
    return float(ll.sum())


def weibull_loglik(durations, censored, a, b) -> float:
    """Censored Weibull log-likelihood; density a^b b D^{b-1} e^{-(aD)^b}."""
    d = np.asarray(durations, dtype=float)
    c = np.asarray(censored, dtype=bool)
    if a <= 0 or b <= 0:
        return -np.inf
    ad_b = (a * d) ** b
    dens = b * math.log(a) + math.log(b) + (b - 1) * np.log(d) - ad_b
    ll = np.where(c, -ad_b, dens)
    return float(ll.sum())


def _duration_lr(hits: np.ndarray) -> float:
    """Weibull-vs-exponential LR on the censored spells of one hit sequence.

    The Weibull scale is profiled out in closed form (a_hat^b = m / sum d^b
    with m the uncensored count), leaving a 1-D maximization over log b.
    """
    d, c = _spells(hits)
    n_unc = int((~c).sum())
    if n_unc < 1:
        return 0.0
    rate = n_unc / d.sum()
    ll0 = exponential_loglik(d, c, rate)
    log_d = np.log(d)
    sum_log_unc = float(log_d[~c].sum())

    def profile_nll(log_b):
        b = math.exp(log_b)
        s_b = float(np.exp(b * log_d).sum())
        ll = n_unc * (log_b - 1.0 + math.log(n_unc) - math.log(s_b)) \
            + (b - 1.0) * sum_log_unc
        return -ll

    res = optimize.minimize_scalar(profile_nll, bounds=(-4.0, 4.0),
                                   method="bounded", options={"xatol": 1e-8})
    return max(2.0 * (-float(res.fun) - ll0), 0.0)


def duration_test(returns, var_forecasts, p: float = 0.01, conf: float = 0.99,
                  mc_n: int = 199, seed: int = 0) -> BacktestResult:
    """Independence test on no-hit durations: Weibull vs exponential LR.

    The chi-square(1) limit is badly off with a handful of spells, so the
    p-value is a conditional Monte Carlo one: given the observed hit count,
    hit positions are uniform under independence, and the LR is recomputed
    on mc_n random placements. The test is exact at every window length and
    deterministic given the seed. Fewer than 2 hits is degenerate and passes.
    """
    hits = hit_sequence(returns, var_forecasts)
    n_hits = int(hits.sum())
    t = hits.size
    if t < 2:
        raise ValueError("window must contain at least 2 observations")
    if n_hits < 2:
        return _pass("duration", n_hits, "fewer than 2 hits")
    lr = _duration_lr(hits)
    rng = np.random.default_rng(seed)
    exceed = 0
    sim = np.zeros(t, dtype=np.int64)
    for _ in range(mc_n):
        sim[:] = 0
        sim[rng.choice(t, size=n_hits, replace=False)] = 1
        if _duration_lr(sim) >= lr:
            exceed += 1
    pval = (1.0 + exceed) / (mc_n + 1.0)
    return BacktestResult("duration", lr, pval, pval < 1 - conf, n_hits)


# ---------------------------------------------------------------------------
# conditional calibration test


def cc_identification(returns, var_forecasts, es_forecasts, level) -> np.ndarray:
    """Two-component identification function on the loss scale.

    With losses l = -r and alpha = 1 - level:
      V1 = alpha - 1{l > VaR}
      V2 = VaR - ES + (1/alpha) 1{l > VaR} (l - VaR)
    Both have zero mean under correctly calibrated (VaR, ES).
    """
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_forecasts, dtype=float)
    e = np.asarray(es_forecasts, dtype=float)
    if not (r.shape == v.shape == e.shape):
        raise ValueError("misaligned series")
    loss = -r
    alpha = 1.0 - level
    hit = (loss > v).astype(float)
    v1 = alpha - hit
    v2 = v - e + hit * (loss - v) / alpha
    return np.column_stack([v1, v2])


def hommel(p_values) -> float:
    """Hommel's step-up combination of component p-values."""
    p = np.sort(np.asarray(p_values, dtype=float))
    n = p.size
    q = min(n * p[j] / (j + 1) for j in range(n))
    return float(min(1.0, q, p[-1]))


def cc_test(returns, var_forecasts, es_forecasts, level, conf: float = 0.99) -> BacktestResult:
    """Simple conditional calibration, one-sided against risk understatement.

    Understated VaR drives mean V1 below zero; understated ES drives mean V2
    above zero. The two one-sided p-values are combined by Hommel's step-up.
    """
    v = cc_identification(returns, var_forecasts, es_forecasts, level)
    n = v.shape[0]
    n_hits = int(np.sum(v[:, 0] < 0))
    sd = v.std(axis=0, ddof=1)
    scale = np.abs(v).max(axis=0) + 1e-300
    if np.any(sd <= 1e-12 * scale):
        return _pass("cc", n_hits, "zero-variance identification component")
    t_stat = v.mean(axis=0) / (sd / math.sqrt(n))
    p1 = float(stats.norm.cdf(t_stat[0]))   # too many hits: mean V1 < 0
    p2 = float(stats.norm.sf(t_stat[1]))    # ES too small: mean V2 > 0
    pval = hommel([p1, p2])
    stat = float(max(-t_stat[0], t_stat[1]))
    return BacktestResult("cc", stat, pval, pval < 1 - conf, n_hits)


# ---------------------------------------------------------------------------
# dynamic quantile test


def _dq_statistic(hits, v_col, alpha, lags):
    t = hits.size
    y = hits[lags:] - alpha
    cols = [np.ones(t - lags)]
    for lag in range(1, lags + 1):
        cols.append(hits[lags - lag : t - lag])
    if v_col is not None:
        cols.append(v_col)
    x = np.column_stack(cols)
    if np.linalg.matrix_rank(x) < x.shape[1]:
        return None
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    return float(beta @ (x.T @ x) @ beta / (alpha * (1 - alpha)))


def dq_test(returns, var_forecasts, level, lags: int = 4, conf: float = 0.99,
            mc_n: int = 199, seed: int = 0) -> BacktestResult:
    """Hit-sequence regression on its own lags and the VaR forecast.

    The chi-squared reference is unreliable with the handful of hits a
    500-day window produces, so the p-value comes from a Monte Carlo null
    of independent Bernoulli hit sequences at the nominal coverage.
    """
    hits = hit_sequence(returns, var_forecasts).astype(float)
    t = hits.size
    if t <= lags + 2:
        raise ValueError(f"window of {t} too short for {lags} lags")
    alpha = 1.0 - level
    n_hits = int(hits.sum())
    if n_hits == 0:
        return _pass("dq", n_hits, "no hits")
    v = np.asarray(var_forecasts, dtype=float)[lags:]
    # a constant forecast column duplicates the intercept and adds nothing
    if v.std() <= 1e-12 * (np.abs(v).max() + 1e-300):
        v = None
    stat = _dq_statistic(hits, v, alpha, lags)
    if stat is None:
        return _pass("dq", n_hits, "singular regressor matrix")
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(mc_n):
        sim = (rng.uniform(size=t) < alpha).astype(float)
        s = _dq_statistic(sim, v, alpha, lags)
        if s is None or s >= stat:
            exceed += 1
    pval = (1.0 + exceed) / (mc_n + 1.0)
    return BacktestResult("dq", stat, pval, pval < 1 - conf, n_hits)


# ---------------------------------------------------------------------------
# exceedance residual test


def er_test(returns, var_forecasts, es_forecasts, bootstrap_n: int = 1000,
            seed: int = 0, conf: float = 0.99) -> BacktestResult:
    """One-sided bootstrap test that exceedance residuals have mean zero.

    Residuals y = (-r) - ES on days whose loss exceeds the VaR; H1: mean > 0
    (ES too small). The studentized mean is compared with its mean-centered
    bootstrap distribution.
    """
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_forecasts, dtype=float)
    e = np.asarray(es_forecasts, dtype=float)
    if not (r.shape == v.shape == e.shape):
        raise ValueError("misaligned series")
    loss = -r
    exceed = loss > v
    n_hits = int(exceed.sum())
    if n_hits < 2:
        return _pass("er", n_hits, "fewer than 2 exceedances")
    y = loss[exceed] - e[exceed]
    n = y.size
    s = y.std(ddof=1)
    if s <= 0:
        return _pass("er", n_hits, "zero-variance residuals")
    t_obs = y.mean() / (s / math.sqrt(n))
    centered = y - y.mean()
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(bootstrap_n, n))
    draws = centered[idx]
    means = draws.mean(axis=1)
    sds = draws.std(axis=1, ddof=1)
    safe = np.where(sds > 0, sds, 1.0)
    t_boot = np.where(sds > 0, means / (safe / math.sqrt(n)), 0.0)
    pval = float(np.mean(t_boot >= t_obs))
    return BacktestResult("er", float(t_obs), pval, pval < 1 - conf, n_hits)


# ---------------------------------------------------------------------------
# daily candidate mask over the forecast cube


def _run_test(test, r, v, e, level, conf, seed):
    if test == "duration":
        return duration_test(r, v, 1 - level, conf, seed=seed)
    if test == "dq":
        return dq_test(r, v, level, conf=conf, seed=seed)
    if test == "cc":
        return cc_test(r, v, e, level, conf)
    if test == "er":
        return er_test(r, v, e, seed=seed, conf=conf)
    raise ValueError(f"unknown test {test!r}")


def candidate_mask(
    cube: ForecastCube,
    portfolio_returns: dict,
    var_test: str = "duration",
    es_test: str = "cc",
    window: int = 500,
    conf: float = 0.99,
    seed: int = 0,
    step: int = 1,
) -> pd.DataFrame:
    """Daily (date x model) candidacy decisions from rolling backtests.

    portfolio_returns maps weights_id -> pd.Series of realized portfolio
    returns indexed by date. For each model and day with `window` prior
    forecasts, the VaR test and the ES test run over the trailing window;
    a model is a candidate for a measure iff its test does not reject
    (degenerate results pass). `step` > 1 evaluates every step-th day and
    carries the verdict forward, for cheaper grids.
    """
    if var_test not in VAR_TESTS:
        raise ValueError(f"var_test must be one of {VAR_TESTS}")
    if es_test not in ES_TESTS:
        raise ValueError(f"es_test must be one of {ES_TESTS}")
    rows = []
    keys = ["marginal", "dependence", "level", "weights_id"]
    for key, sub in cube.frame.groupby(keys, sort=False):
        marginal, dependence, level, weights_id = key
        sub = sub[sub["valid"]].sort_values("date")
        rets = portfolio_returns[weights_id]
        dates = [d for d in sub["date"] if d in rets.index]
        sub = sub[sub["date"].isin(dates)]
        if len(sub) < window:
            continue
        v_all = sub["var"].to_numpy(dtype=float)
        e_all = sub["es"].to_numpy(dtype=float)
        r_all = rets.loc[sub["date"]].to_numpy(dtype=float)
        d_all = list(sub["date"])
        cached = {}
        for j in range(window - 1, len(sub)):
            lo = j - window + 1
            if (j - (window - 1)) % step == 0:
                sl = slice(lo, j + 1)
                for measure, test in (("var", var_test), ("es", es_test)):
                    res = _run_test(
                        test, r_all[sl], v_all[sl], e_all[sl], level, conf,
                        derive_seed(seed, marginal, dependence, level, weights_id, j),
                    )
                    cached[measure] = res
            for measure in ("var", "es"):
                res = cached[measure]
                rows.append(
                    {"date": d_all[j], "marginal": marginal, "dependence": dependence,
                     "level": level, "weights_id": weights_id, "measure": measure,
                     "test": res.test, "p_value": res.p_value,
                     "rejected": res.rejected, "degenerate": res.degenerate,
                     "candidate": not res.rejected}
                )
    out = pd.DataFrame.from_records(
        rows, columns=["date", "marginal", "dependence", "level", "weights_id",
                       "measure", "test", "p_value", "rejected", "degenerate", "candidate"]
    )
    return out.sort_values(
        ["date", "marginal", "dependence", "level", "weights_id", "measure"],
        kind="mergesort",
    ).reset_index(drop=True)
