"""Scoring functions and the bootstrap Model Confidence Set.

var_loss is the asymmetric check loss; es_loss the 0-homogeneous joint
(VaR, ES) score. The MCS iteratively eliminates the worst model by the
range statistic T_R = max |t_ij| until equivalence is no longer rejected,
with a moving-block bootstrap whose index sets are shared across all model
pairs so the max statistic's null distribution stays coherent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .forecast import ForecastCube


def var_loss(r, var, alpha: float):
    """Check loss for VaR: (r + var) * (alpha - 1{r + var < 0}); >= 0."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    r = np.asarray(r, dtype=float)
    v = np.asarray(var, dtype=float)
    d = r + v
    return d * (alpha - (d < 0))


def es_loss(var, es, r, alpha: float):
    """0-homogeneous joint score for (VaR, ES), exceedances on the loss scale."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    v = np.asarray(var, dtype=float)
    e = np.asarray(es, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(e <= 0):
        raise ValueError("es must be positive")
    exceed = (r + v) < 0
    return exceed * (-v - r) / (alpha * e) + v / e + np.log(e) - 1.0


@dataclass(frozen=True)
class MCSResult:
    survivors: tuple
    p_values: dict
    elimination_order: tuple  # (model, statistic, bootstrap p) per elimination


def _block_bootstrap_indices(n: int, block: int, bootstrap_n: int, rng) -> np.ndarray:
    n_blocks = math.ceil(n / block)
    starts = rng.integers(0, n - block + 1, size=(bootstrap_n, n_blocks))
    idx = starts[:, :, None] + np.arange(block)[None, None, :]
    return idx.reshape(bootstrap_n, n_blocks * block)[:, :n]


def mcs(
    losses: np.ndarray,
    model_ids: list,
    alpha: float = 0.15,
    bootstrap_n: int = 1000,
    block_length: int | None = None,
    seed: int = 0,
) -> MCSResult:
    """Model Confidence Set by range-statistic elimination.

    Pairwise t_ij = dbar_ij / sqrt(varhat(dbar_ij)) with the bootstrap
    variance; eliminate argmax_i sup_j t_ij while the bootstrap p of
    T_R = max |t_ij| is below alpha. Reported p-values are monotonized by
    running maximum, so survivors' p-values are >= alpha.
    """
    l = np.asarray(losses, dtype=float)
    if l.ndim != 2 or l.shape[1] < 2:
        raise ValueError("losses must be n x m with m >= 2")
    n, m = l.shape
    if n < 30:
        raise ValueError(f"need at least 30 loss rows, got {n}")
    if len(model_ids) != m:
        raise ValueError("model id count mismatch")
    if not np.all(np.isfinite(l)):
        raise ValueError("losses must be finite")
    block = block_length if block_length else math.ceil(n ** (1.0 / 3.0))
    rng = np.random.default_rng(seed)
    idx = _block_bootstrap_indices(n, block, bootstrap_n, rng)

    lbar = l.mean(axis=0)
    boot_means = l[idx].mean(axis=1)  # (B, m)
    zeta = boot_means - lbar[None, :]

    # varhat(dbar_ij) = mean_b (zeta_i - zeta_j)^2, shared bootstrap for all pairs
    var_d = np.mean((zeta[:, :, None] - zeta[:, None, :]) ** 2, axis=0)
    np.fill_diagonal(var_d, 1.0)
    sd_d = np.sqrt(var_d)
    tiny = sd_d < 1e-150
    sd_d = np.where(tiny, 1.0, sd_d)

    alive = list(range(m))
    eliminated = []
    p_running = 0.0
    p_values = {}
    final_p = 1.0
    while True:
        a = np.array(alive)
        d = lbar[a][:, None] - lbar[a][None, :]
        s = sd_d[np.ix_(a, a)]
        t_obs = np.where(tiny[np.ix_(a, a)], 0.0, d / s)
        np.fill_diagonal(t_obs, 0.0)
        stat = float(np.max(np.abs(t_obs)))
        zb = zeta[:, a]
        tb = np.abs(zb[:, :, None] - zb[:, None, :]) / s[None, :, :]
        tb = np.where(tiny[np.ix_(a, a)][None, :, :], 0.0, tb)
        t_star = tb.reshape(bootstrap_n, -1).max(axis=1)
        p_step = float(np.mean(t_star >= stat))
        if p_step >= alpha or len(alive) == 1:
            final_p = max(p_running, p_step)
            break
        worst_pos = int(np.argmax(t_obs.max(axis=1)))
        worst = alive[worst_pos]
        p_running = max(p_running, p_step)
        p_values[model_ids[worst]] = p_running
        eliminated.append((model_ids[worst], stat, p_step))
        alive.remove(worst)
    for i in alive:
        p_values[model_ids[i]] = final_p
    return MCSResult(
        survivors=tuple(model_ids[i] for i in alive),
        p_values=p_values,
        elimination_order=tuple(eliminated),
    )


def mcs_schedule(
    cube: ForecastCube,
    mask: pd.DataFrame,
    portfolio_returns: dict,
    level: float,
    risk_column: str = "var",
    weights_id: str = "w0",
    cadence_days: int = 20,
    eval_window: int = 500,
    alpha: float = 0.15,
    bootstrap_n: int = 1000,
    block_length: int | None = None,
    seed: int = 0,
) -> list:
    """Run the MCS every cadence_days on that day's backtest survivors.

    The loss matrix covers the trailing eval_window forecast days; models
    lacking a complete valid loss history over the window are dropped before
    the run. Returns [(date, MCSResult)] in date order; each survivor set
    applies until the next run.
    """
    f = cube.frame
    f = f[(f["valid"]) & (f["level"] == level) & (f["weights_id"] == weights_id)]
    rets = portfolio_returns[weights_id]
    alpha_cov = 1.0 - level

    wide_v = f.pivot_table(index="date", columns=["marginal", "dependence"], values="var")
    wide_e = f.pivot_table(index="date", columns=["marginal", "dependence"], values="es")
    dates = [d for d in wide_v.index if d in rets.index]
    wide_v = wide_v.loc[dates]
    wide_e = wide_e.loc[dates]
    r = rets.loc[dates].to_numpy(dtype=float)

    m = mask[(mask["level"] == level) & (mask["weights_id"] == weights_id)
             & (mask["measure"] == risk_column)]
    mask_days = sorted(set(m["date"]))
    pos = {d: i for i, d in enumerate(dates)}

    results = []
    for run_i, day in enumerate(mask_days):
        if run_i % cadence_days != 0:
            continue
        j = pos.get(day)
        if j is None or j + 1 < eval_window:
            continue
        sl = slice(j + 1 - eval_window, j + 1)
        day_mask = m[(m["date"] == day) & (m["candidate"])]
        candidates = [tuple(x) for x in day_mask[["marginal", "dependence"]].itertuples(index=False)]
        cols, mats = [], []
        for c in candidates:
            if c not in wide_v.columns:
                continue
            v = wide_v[c].to_numpy(dtype=float)[sl]
            e = wide_e[c].to_numpy(dtype=float)[sl]
            if not (np.all(np.isfinite(v)) and np.all(np.isfinite(e))):
                continue
            if risk_column == "var":
                mats.append(var_loss(r[sl], v, alpha_cov))
            else:
                mats.append(es_loss(v, e, r[sl], alpha_cov))
            cols.append(c)
        if len(cols) < 2:
            results.append((day, MCSResult(tuple(cols), {c: 1.0 for c in cols}, ())))
            continue
        losses = np.column_stack(mats)
        res = mcs(losses, cols, alpha=alpha, bootstrap_n=bootstrap_n,
                  block_length=block_length, seed=seed + run_i)
        results.append((day, res))
    return results


def apply_mcs(mask: pd.DataFrame, schedule: list, level: float,
              risk_column: str = "var", weights_id: str = "w0") -> pd.DataFrame:
    """Intersect the daily candidate mask with the active MCS survivor set.

    Between runs the most recent survivor set applies; days before the first
    run keep their backtest-only verdict.
    """
    out = mask.copy()
    sel = ((out["level"] == level) & (out["weights_id"] == weights_id)
           & (out["measure"] == risk_column))
    if not schedule:
        return out
    run_dates = [d for d, _ in schedule]
    survivor_sets = [set(res.survivors) for _, res in schedule]
    sub = out[sel]
    keep = sub["candidate"].to_numpy().copy()
    day_arr = pd.DatetimeIndex(sub["date"]).values
    model_arr = list(zip(sub["marginal"], sub["dependence"]))
    active = np.searchsorted(pd.DatetimeIndex(run_dates).values, day_arr, side="right") - 1
    for i in range(len(sub)):
        k = active[i]
        if k >= 0 and model_arr[i] not in survivor_sets[k]:
            keep[i] = False
    out.loc[sub.index, "candidate"] = keep
    return out
