"""Cross-model disagreement measures and their aggregation.

Model risk here is the daily dispersion (mad, sd, iqr) of surviving models'
forecasts of the same quantity. Group G1 fixes the dependence family and
lets marginals vary; G2 fixes the marginal; G3 pools all multivariate
models; G4 pools the univariate grid. Period statistics split the sample
into pre-2008, 2008-2009, and post-2009 calendar blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from .forecast import UNIVARIATE, ForecastCube

MEASURES = ("mad", "sd", "iqr")
GROUPS = ("G1", "G2", "G3", "G4")


@dataclass(frozen=True)
class ModelRiskSeries:
    group: str
    measure: str
    risk_column: str  # "var" or "es"
    dates: tuple
    values: np.ndarray  # NaN where no set had >= 2 survivors
    n_models: np.ndarray

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"date": list(self.dates), "group": self.group, "measure": self.measure,
             "risk": self.risk_column, "value": self.values, "n_models": self.n_models}
        )


def dispersion(values, measure: str) -> float:
    """mad (mean-centered), sd (n-1 denominator), or iqr (linear interpolation)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise ValueError("dispersion needs at least one finite value")
    if measure == "mad":
        return float(np.mean(np.abs(x - x.mean())))
    if measure == "sd":
        return 0.0 if x.size < 2 else float(x.std(ddof=1))
    if measure == "iqr":
        q1, q3 = np.percentile(x, [25.0, 75.0])
        return float(q3 - q1)
    raise ValueError(f"unknown measure {measure!r}")


def _survivor_table(cube: ForecastCube, mask: pd.DataFrame, level: float,
                    weights_id: str, risk_column: str) -> pd.DataFrame:
    """Valid forecasts joined with the backtest verdict for one measure."""
    f = cube.frame
    f = f[(f["valid"]) & (f["level"] == level) & (f["weights_id"] == weights_id)]
    m = mask[(mask["level"] == level) & (mask["weights_id"] == weights_id)
             & (mask["measure"] == risk_column) & (mask["candidate"])]
    keys = ["date", "marginal", "dependence"]
    merged = f.merge(m[keys], on=keys, how="inner")
    return merged[keys + [risk_column]]


def daily_model_risk(
    cube: ForecastCube,
    mask: pd.DataFrame,
    group: str,
    level: float,
    risk_column: str = "var",
    measure: str = "mad",
    weights_id: str = "w0",
) -> ModelRiskSeries:
    """One dispersion value per day over the group's surviving forecasts.

    G1/G2 compute dispersion within each fixed-dependence (fixed-marginal)
    set and average across sets with at least two survivors; a day where no
    set has two survivors is missing (NaN), never zero by fiat.
    """
    if group not in GROUPS:
        raise ValueError(f"unknown group {group!r}")
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    table = _survivor_table(cube, mask, level, weights_id, risk_column)
    if group == "G4":
        table = table[table["dependence"] == UNIVARIATE]
    else:
        table = table[table["dependence"] != UNIVARIATE]
    dates, values, counts = [], [], []
    for date, day in table.groupby("date", sort=True):
        x = day[risk_column].to_numpy(dtype=float)
        if group in ("G3", "G4"):
            if x.size >= 2:
                val, n = dispersion(x, measure), x.size
            else:
                val, n = np.nan, x.size
        else:
            by = "dependence" if group == "G1" else "marginal"
            vals = []
            n = 0
            for _, sub in day.groupby(by, sort=True):
                if len(sub) >= 2:
                    vals.append(dispersion(sub[risk_column].to_numpy(dtype=float), measure))
                    n += len(sub)
            val = float(np.mean(vals)) if vals else np.nan
        dates.append(date)
        values.append(val)
        counts.append(n)
    return ModelRiskSeries(
        group=group, measure=measure, risk_column=risk_column,
        dates=tuple(dates), values=np.asarray(values, dtype=float),
        n_models=np.asarray(counts, dtype=np.int64),
    )


@dataclass(frozen=True)
class PeriodSplit:
    """Calendar split: pre-crisis (< 2008), crisis (2008-2009), post (> 2009)."""

    crisis_start_year: int = 2008
    crisis_end_year: int = 2009

    def label(self, date) -> str:
        if date.year < self.crisis_start_year:
            return "pre_crisis"
        if date.year <= self.crisis_end_year:
            return "crisis"
        return "post_crisis"


def period_summary(series: ModelRiskSeries, split: PeriodSplit = PeriodSplit()) -> pd.DataFrame:
    """Min/median/mean/max/sd per period plus the overall row.

    Days with missing dispersion are skipped; empty periods are omitted with
    a note row counting zero observations.
    """
    rows = []
    labels = np.array([split.label(d) for d in series.dates])
    finite = np.isfinite(series.values)
    for period in ("pre_crisis", "crisis", "post_crisis", "overall"):
        sel = finite if period == "overall" else (finite & (labels == period))
        x = series.values[sel]
        if x.size == 0:
            rows.append({"period": period, "n_days": 0, "min": np.nan, "median": np.nan,
                         "mean": np.nan, "max": np.nan, "sd": np.nan})
            continue
        rows.append({
            "period": period, "n_days": int(x.size), "min": float(x.min()),
            "median": float(np.median(x)), "mean": float(x.mean()),
            "max": float(x.max()), "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
        })
    return pd.DataFrame.from_records(rows)


def newey_west_lag(t: int) -> int:
    return int(math.floor(4.0 * (t / 100.0) ** (2.0 / 9.0)))


def long_run_variance(x: np.ndarray, lag: int | None = None) -> float:
    """Newey-West long-run variance with the Bartlett kernel."""
    x = np.asarray(x, dtype=float)
    t = x.size
    if lag is None:
        lag = newey_west_lag(t)
    d = x - x.mean()
    gamma0 = float(d @ d) / t
    lrv = gamma0
    for ell in range(1, min(lag, t - 1) + 1):
        w = 1.0 - ell / (lag + 1.0)
        lrv += 2.0 * w * float(d[ell:] @ d[:-ell]) / t
    return max(lrv, 0.0)


def hac_ttest(series_a, series_b) -> tuple[float, float]:
    """Difference-in-means test robust to serial correlation.

    Equal-length inputs are treated as paired daily series (HAC variance of
    the difference); unequal lengths as independent samples with separate
    HAC variances. Two-sided p-value from the normal limit.
    """
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.size < 10 or b.size < 10:
        raise ValueError("need at least 10 observations per series")
    if a.size == b.size:
        d = a - b
        lrv = long_run_variance(d)
        if lrv <= 0:
            return 0.0, 1.0
        t_stat = d.mean() / math.sqrt(lrv / d.size)
    else:
        va = long_run_variance(a) / a.size
        vb = long_run_variance(b) / b.size
        if va + vb <= 0:
            return 0.0, 1.0
        t_stat = (a.mean() - b.mean()) / math.sqrt(va + vb)
    p = float(2.0 * stats.norm.sf(abs(t_stat)))
    return float(t_stat), p
