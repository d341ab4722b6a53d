"""Scoring functions and the bootstrap Model Confidence Set."""

import datetime as dt
import math

import numpy as np
import pandas as pd
import pytest

from riskgrid import data
from riskgrid import forecast as fc
from riskgrid import mcs as ms


def test_var_loss_hand_values():
    # no exceedance: (r + v) * alpha
    got = ms.var_loss(np.array([0.02]), np.array([0.01]), 0.01)
    assert abs(got[0] - 0.03 * 0.01) < 1e-15
    # exceedance: (r + v) * (alpha - 1) > 0
    got = ms.var_loss(np.array([-0.05]), np.array([0.01]), 0.01)
    assert abs(got[0] - (-0.04) * (0.01 - 1.0)) < 1e-15
    # boundary r + v = 0 counts as no exceedance and scores zero
    assert ms.var_loss(np.array([-0.01]), np.array([0.01]), 0.05)[0] == 0.0


def test_var_loss_properties(rng):
    r = rng.standard_normal(500) * 0.02
    v = np.abs(rng.standard_normal(500)) * 0.02 + 0.001
    loss = ms.var_loss(r, v, 0.025)
    assert np.all(loss >= 0)
    with pytest.raises(ValueError):
        ms.var_loss(r, v, 0.6)


def test_var_loss_minimized_at_true_quantile(rng):
    # expected check loss is minimized by the true alpha-quantile forecast
    r = rng.standard_normal(200000)
    alpha = 0.05
    q = -np.quantile(r, alpha)
    grid = [q * 0.8, q * 0.9, q, q * 1.1, q * 1.25]
    means = [ms.var_loss(r, np.full(r.size, g), alpha).mean() for g in grid]
    assert int(np.argmin(means)) == 2


def test_es_loss_hand_values():
    # no exceedance: v/e + log e - 1
    got = ms.es_loss(np.array([1.0]), np.array([1.0]), np.array([0.5]), 0.05)
    assert abs(got[0] - 0.0) < 1e-15
    got = ms.es_loss(np.array([2.0]), np.array([4.0]), np.array([0.0]), 0.05)
    assert abs(got[0] - (0.5 + math.log(4.0) - 1.0)) < 1e-15
    # exceedance adds (-v - r) / (alpha e)
    got = ms.es_loss(np.array([1.0]), np.array([2.0]), np.array([-3.0]), 0.05)
    want = 2.0 / (0.05 * 2.0) + 0.5 + math.log(2.0) - 1.0
    assert abs(got[0] - want) < 1e-12


def test_es_loss_zero_homogeneous_differences(rng):
    # scaling data and forecasts together shifts the score by log(c) only,
    # so loss differences between models are scale-invariant
    r = rng.standard_normal(400)
    v = np.abs(rng.standard_normal(400)) + 0.5
    e = v * 1.3
    base = ms.es_loss(v, e, r, 0.025)
    for c in (0.01, 3.0, 250.0):
        scaled = ms.es_loss(c * v, c * e, c * r, 0.025)
        assert np.allclose(scaled - base, math.log(c), atol=1e-10)


def test_es_loss_validation(rng):
    with pytest.raises(ValueError):
        ms.es_loss(np.array([1.0]), np.array([0.0]), np.array([0.0]), 0.05)
    with pytest.raises(ValueError):
        ms.es_loss(np.array([1.0]), np.array([1.0]), np.array([0.0]), 0.7)


def test_es_loss_prefers_correct_es(rng):
    # with the true VaR fixed, the expected score is lower at the true ES
    r = rng.standard_normal(200000)
    alpha = 0.025
    q = -np.quantile(r, alpha)
    true_es = -r[r < -q].mean()
    n = r.size
    good = ms.es_loss(np.full(n, q), np.full(n, true_es), r, alpha).mean()
    low = ms.es_loss(np.full(n, q), np.full(n, true_es * 0.7), r, alpha).mean()
    high = ms.es_loss(np.full(n, q), np.full(n, true_es * 1.4), r, alpha).mean()
    assert good < low and good < high


def test_block_bootstrap_indices_shape_and_range():
    rng = np.random.default_rng(0)
    idx = ms._block_bootstrap_indices(100, 5, 50, rng)
    assert idx.shape == (50, 100)
    assert idx.min() >= 0 and idx.max() <= 99
    # consecutive entries within a block increase by one
    assert np.all(np.diff(idx[:, :5], axis=1) == 1)


def test_mcs_identical_models_all_survive(rng):
    base = rng.standard_normal(300)
    losses = np.column_stack([base, base, base])
    res = ms.mcs(losses, ["a", "b", "c"], seed=1)
    assert set(res.survivors) == {"a", "b", "c"}
    assert all(p == 1.0 for p in res.p_values.values())
    assert res.elimination_order == ()


def test_mcs_eliminates_dominated_model(rng):
    hits = 0
    for rep in range(20):
        n, m = 250, 5
        losses = rng.standard_normal((n, m))
        losses[:, 2] += 0.5
        res = ms.mcs(losses, list("abcde"), alpha=0.15, bootstrap_n=300, seed=rep)
        hits += "c" not in res.survivors
    assert hits >= 19


def test_mcs_equivalent_models_usually_kept(rng):
    kept = 0
    for rep in range(20):
        losses = rng.standard_normal((250, 4))
        res = ms.mcs(losses, list("abcd"), alpha=0.15, bootstrap_n=300, seed=100 + rep)
        kept += len(res.survivors)
    # on average most of the four equivalent models stay in the set
    assert kept / 20 >= 3.0


def test_mcs_determinism_and_p_monotonicity(rng):
    losses = rng.standard_normal((300, 6))
    losses[:, 0] += 0.8
    losses[:, 1] += 0.4
    a = ms.mcs(losses, list("uvwxyz"), seed=9)
    b = ms.mcs(losses, list("uvwxyz"), seed=9)
    assert a.survivors == b.survivors and a.p_values == b.p_values
    order_p = [a.p_values[m] for m, _, _ in a.elimination_order]
    assert all(q >= p for p, q in zip(order_p, order_p[1:]))
    surv_p = min(a.p_values[m] for m in a.survivors)
    assert all(surv_p >= p for p in order_p)


def test_mcs_validation():
    with pytest.raises(ValueError):
        ms.mcs(np.zeros((10, 3)), list("abc"))
    with pytest.raises(ValueError):
        ms.mcs(np.zeros((100, 1)), ["a"])
    with pytest.raises(ValueError):
        ms.mcs(np.zeros((100, 2)), ["a"])
    bad = np.zeros((100, 2))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ms.mcs(bad, ["a", "b"])


def _schedule_fixture(rng, n_days=160, eval_window=50, mask_days=100):
    dates = data._weekday_dates(dt.date(2011, 1, 3), n_days)
    r = pd.Series(rng.standard_normal(n_days) * 0.01, index=list(dates))
    q99 = 2.326 * 0.01
    models = [("m1", "c1", q99), ("m2", "c1", q99 * 1.05), ("m3", "c1", 0.002)]
    rows = []
    for marg, dep, v in models:
        for d in dates:
            rows.append((d, marg, dep, 0.99, "w0", v, v * 1.15, True, ""))
    cube = fc.ForecastCube(pd.DataFrame(rows, columns=list(fc.ForecastCube.COLUMNS)))
    mrows = []
    for marg, dep, _ in models:
        for d in dates[-mask_days:]:
            mrows.append({"date": d, "marginal": marg, "dependence": dep,
                          "level": 0.99, "weights_id": "w0", "measure": "var",
                          "candidate": True})
    mask = pd.DataFrame(mrows)
    return cube, mask, {"w0": r}


def test_mcs_schedule_cadence_and_elimination(rng):
    cube, mask, pf = _schedule_fixture(rng)
    runs = ms.mcs_schedule(cube, mask, pf, 0.99, cadence_days=20,
                           eval_window=50, bootstrap_n=300, seed=4)
    # mask covers 100 days; a run fires every 20th mask day
    assert len(runs) == 5
    days = [d for d, _ in runs]
    assert days == sorted(days)
    for _, res in runs:
        assert ("m3", "c1") not in res.survivors
        assert ("m1", "c1") in res.survivors


def test_mcs_schedule_skips_short_history(rng):
    cube, mask, pf = _schedule_fixture(rng, n_days=80, eval_window=200)
    runs = ms.mcs_schedule(cube, mask, pf, 0.99, cadence_days=20, eval_window=200)
    assert runs == []


def test_apply_mcs_intersection(rng):
    cube, mask, pf = _schedule_fixture(rng)
    runs = ms.mcs_schedule(cube, mask, pf, 0.99, cadence_days=20,
                           eval_window=50, bootstrap_n=300, seed=4)
    out = ms.apply_mcs(mask, runs, 0.99)
    first_run = runs[0][0]
    pre = out[out["date"] < first_run]
    assert pre["candidate"].all()  # backtest verdict kept before the first run
    post_bad = out[(out["date"] >= first_run) & (out["marginal"] == "m3")]
    assert not post_bad["candidate"].any()
    post_good = out[(out["date"] >= first_run) & (out["marginal"] == "m1")]
    assert post_good["candidate"].all()
    # input mask is not mutated
    assert mask["candidate"].all()


def test_apply_mcs_empty_schedule(rng):
    cube, mask, pf = _schedule_fixture(rng)
    out = ms.apply_mcs(mask, [], 0.99)
    assert out["candidate"].equals(mask["candidate"])
