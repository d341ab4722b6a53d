"""Monte-Carlo VaR/ES forecasting over the rolling model grid.

One window produces: 20 fitted marginals per asset, 9 fitted dependence
models, and one-day-ahead (var, es) forecasts for every marginal x
dependence x level x weight-set cell, plus the univariate grid fitted
directly on each portfolio return series. Randomness flows through per-cell
seeds derived from (base seed, window, model id), so scheduling cannot
change results.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import copulas, marginals
from .data import ReturnPanel, WeightSet, WindowPlan, rolling_windows

LEVELS = (0.95, 0.975, 0.99, 0.999)
UNIVARIATE = "univariate"


@dataclass(frozen=True)
class ModelId:
    """A grid member: marginal label plus dependence family (or univariate)."""

    marginal: str
    dependence: str = UNIVARIATE

    @property
    def is_univariate(self) -> bool:
        return self.dependence == UNIVARIATE

    @property
    def label(self) -> str:
        return f"{self.marginal}|{self.dependence}"


@dataclass
class ForecastCube:
    """Long-format forecast table; the contract consumed by all later stages.

    Columns: date, marginal, dependence, level, weights_id, var, es, valid,
    reason. Invalid cells carry a reason and NaN risk numbers.
    """

    frame: pd.DataFrame
    meta: dict = field(default_factory=dict)

    COLUMNS = ("date", "marginal", "dependence", "level", "weights_id",
               "var", "es", "valid", "reason")

    def __post_init__(self):
        missing = [c for c in self.COLUMNS if c not in self.frame.columns]
        if missing:
            raise ValueError(f"cube frame lacks columns {missing}")

    def to_csv(self, path) -> None:
        out = self.frame.copy()
        out["date"] = out["date"].map(lambda d: d.isoformat())
        out.to_csv(path, index=False, float_format="%.12g")

    @classmethod
    def from_csv(cls, path) -> "ForecastCube":
        df = pd.read_csv(path, keep_default_na=False,
                         dtype={"marginal": str, "dependence": str, "reason": str})
        df["date"] = df["date"].map(_dt.date.fromisoformat)
        df["level"] = df["level"].astype(float)
        df["var"] = pd.to_numeric(df["var"], errors="coerce")
        df["es"] = pd.to_numeric(df["es"], errors="coerce")
        df["valid"] = df["valid"].astype(str).isin(("True", "true", "1"))
        return cls(df)

    def model_ids(self) -> list[ModelId]:
        pairs = self.frame[["marginal", "dependence"]].drop_duplicates()
        return [ModelId(m, d) for m, d in pairs.itertuples(index=False)]

    def series(self, model: ModelId, level: float, weights_id: str) -> pd.DataFrame:
        f = self.frame
        sel = (
            (f["marginal"] == model.marginal)
            & (f["dependence"] == model.dependence)
            & (f["level"] == level)
            & (f["weights_id"] == weights_id)
        )
        return f.loc[sel].sort_values("date").reset_index(drop=True)


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 64-bit seed from a base seed and arbitrary labels."""
    text = "|".join([str(base_seed)] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def var_es_from_sample(sample: np.ndarray, level: float) -> tuple[float, float]:
    """Sample VaR/ES as positive losses.

    q is the lower order statistic at index ceil(n(1-level)) (no
    interpolation); var = -q; es = -mean of the tail {x <= q}, which always
    contains q, so es >= var by construction.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 100:
        raise ValueError(f"need at least 100 draws, got {n}")
    alpha = 1.0 - level
    if not 0 < alpha < 0.5:
        raise ValueError(f"level {level} outside supported range")
    # tolerance keeps binary-float noise in n*alpha from bumping the index
    k = max(1, math.ceil(n * alpha - 1e-9))
    q = np.partition(x, k - 1)[k - 1]
    tail = x[x <= q]
    return float(-q), float(-tail.mean())


def simulate_asset_returns(
    fitted: list, fc: copulas.FittedCopula, n: int, seed: int
) -> np.ndarray:
    """n x K one-day return draws from fitted marginals plus dependence."""
    k = len(fitted)
    mu = np.empty(k)
    sig = np.empty(k)
    for j, fm in enumerate(fitted):
        m, s2 = marginals.forecast_one_step(fm, allow_unconverged=True)
        mu[j], sig[j] = m, math.sqrt(max(s2, 0.0))
    if fc.family == "dcc":
        rng = np.random.default_rng(seed)
        z = copulas.simulate_dcc_innovations(fc, n, rng)
    else:
        u = copulas.simulate_copula(fc, n, seed)
        z = np.empty((n, k))
        for j, fm in enumerate(fitted):
            z[:, j] = marginals.innovation_quantile(
                fm.spec.innovation, fm.params.dist_params, u[:, j]
            )
    return mu[None, :] + sig[None, :] * z


def simulate_portfolio_sample(
    fitted: list, fc: copulas.FittedCopula, w: WeightSet, n: int = 10000, seed: int = 0
) -> np.ndarray:
    """n portfolio return draws: asset draws aggregated by the weights."""
    if len(w) != len(fitted):
        raise ValueError(f"{len(w)} weights for {len(fitted)} marginals")
    return simulate_asset_returns(fitted, fc, n, seed) @ w.weights


def scale_dollar(value: float, pv: float = 100000.0, horizon_days: float = 10.0) -> float:
    """Square-root-of-time dollar scaling of a one-day loss fraction."""
    if value < 0:
        raise ValueError("value must be >= 0")
    return value * pv * math.sqrt(horizon_days)


def _next_weekday(d: _dt.date) -> _dt.date:
    d = d + _dt.timedelta(days=1)
    while d.weekday() >= 5:
        d += _dt.timedelta(days=1)
    return d


def _window_records(
    panel, weight_sets, window, wi, levels, marginal_specs, dependence_families,
    base_seed, n_draws, include_univariate,
):
    """All cube records for one rolling window. Pure function of its inputs."""
    block = panel.returns[window.start : window.end]
    k = panel.n_assets
    date = (
        panel.dates[window.target]
        if window.target < panel.n_obs
        else _next_weekday(panel.dates[-1])
    )
    records = []

    def emit(marg, dep, weights_id, level, var=np.nan, es=np.nan, reason=""):
        records.append(
            {"date": date, "marginal": marg, "dependence": dep, "level": level,
             "weights_id": weights_id, "var": var, "es": es,
             "valid": reason == "", "reason": reason}
        )

    # marginal fits: one per (asset, spec)
    fits = {}
    fit_fail = {}
    for spec in marginal_specs:
        for j in range(k):
            try:
                fits[(spec.label, j)] = marginals.fit_marginal(
                    block[:, j], spec, compute_stderr=False
                )
            except Exception as exc:  # noqa: BLE001 - cell failure, not abort
                fit_fail[(spec.label, j)] = f"marginal fit failed: {exc}"

    # dependence fits on the reference marginal's standardized residuals
    ref = marginal_specs[0]
    cop_fits = {}
    cop_fail = {}
    ref_ok = all((ref.label, j) in fits for j in range(k))
    if ref_ok and dependence_families:
        z = np.column_stack([fits[(ref.label, j)].std_resid for j in range(k)])
        u = copulas.pseudo_obs(z)
        for fam in dependence_families:
            try:
                if fam == "dcc":
                    cop_fits[fam] = copulas.fit_dcc(z)
                else:
                    cop_fits[fam] = copulas.fit_copula(u, copulas.CopulaSpec(fam))
            except Exception as exc:  # noqa: BLE001
                cop_fail[fam] = f"copula fit failed: {exc}"
    elif dependence_families:
        reason = "; ".join(
            fit_fail.get((ref.label, j), "") for j in range(k) if (ref.label, j) in fit_fail
        )
        for fam in dependence_families:
            cop_fail[fam] = f"reference marginal failed: {reason}"

    # multivariate grid
    for spec in marginal_specs:
        bad_assets = [j for j in range(k) if (spec.label, j) not in fits]
        for fam in dependence_families:
            cell_reason = ""
            if bad_assets:
                cell_reason = fit_fail[(spec.label, bad_assets[0])]
            elif fam in cop_fail:
                cell_reason = cop_fail[fam]
            if cell_reason:
                for widx in range(len(weight_sets)):
                    for level in levels:
                        emit(spec.label, fam, f"w{widx}", level, reason=cell_reason)
                continue
            fitted = [fits[(spec.label, j)] for j in range(k)]
            seed = derive_seed(base_seed, wi, spec.label, fam)
            try:
                draws = simulate_asset_returns(fitted, cop_fits[fam], n_draws, seed)
            except Exception as exc:  # noqa: BLE001
                for widx in range(len(weight_sets)):
                    for level in levels:
                        emit(spec.label, fam, f"w{widx}", level,
                             reason=f"simulation failed: {exc}")
                continue
            for widx, w in enumerate(weight_sets):
                pf = draws @ w.weights
                for level in levels:
                    var, es = var_es_from_sample(pf, level)
                    if var <= 0:
                        emit(spec.label, fam, f"w{widx}", level,
                             reason="non-positive var forecast")
                    else:
                        emit(spec.label, fam, f"w{widx}", level, var=var, es=es)

    # univariate grid on each portfolio series
    if include_univariate:
        for widx, w in enumerate(weight_sets):
            pf_series = block @ w.weights
            for spec in marginal_specs:
                try:
                    fm = marginals.fit_marginal(pf_series, spec, compute_stderr=False)
                except Exception as exc:  # noqa: BLE001
                    for level in levels:
                        emit(spec.label, UNIVARIATE, f"w{widx}", level,
                             reason=f"marginal fit failed: {exc}")
                    continue
                for level in levels:
                    try:
                        var, es = marginals.forecast_univariate_risk(
                            fm, level, allow_unconverged=True
                        )
                    except Exception as exc:  # noqa: BLE001
                        emit(spec.label, UNIVARIATE, f"w{widx}", level,
                             reason=f"forecast failed: {exc}")
                        continue
                    if var <= 0:
                        emit(spec.label, UNIVARIATE, f"w{widx}", level,
                             reason="non-positive var forecast")
                    else:
                        emit(spec.label, UNIVARIATE, f"w{widx}", level, var=var, es=es)
    return records


def run_grid(
    panel: ReturnPanel,
    weight_sets: list,
    plan: WindowPlan,
    levels=LEVELS,
    marginal_specs=None,
    dependence_families=copulas.FAMILIES,
    base_seed: int = 0,
    n_draws: int = 10000,
    include_univariate: bool = True,
    workers: int = 1,
    include_out_of_sample: bool = False,
) -> ForecastCube:
    """Run the forecast grid over every rolling window.

    Per-cell failures are recorded as invalid cells; the grid never aborts.
    The result is bitwise identical for any worker count.
    """
    if marginal_specs is None:
        marginal_specs = marginals.full_grid()
    windows = rolling_windows(panel.n_obs, plan)
    if not include_out_of_sample:
        windows = [w for w in windows if not w.out_of_sample]
    args = [
        (panel, weight_sets, w, wi, tuple(levels), tuple(marginal_specs),
         tuple(dependence_families), base_seed, n_draws, include_univariate)
        for wi, w in enumerate(windows)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_window_records_star, args, chunksize=1))
    else:
        chunks = [_window_records_star(a) for a in args]
    records = [rec for chunk in chunks for rec in chunk]
    frame = pd.DataFrame.from_records(records, columns=list(ForecastCube.COLUMNS))
    frame = frame.sort_values(
        ["date", "marginal", "dependence", "level", "weights_id"], kind="mergesort"
    ).reset_index(drop=True)
    return ForecastCube(frame, meta={"n_windows": len(windows), "base_seed": base_seed})


def _window_records_star(a):
    return _window_records(*a)


def clean_outliers(cube: ForecastCube, z_cap: float = 25.0, burn_in: int = 500) -> ForecastCube:
    """Replace implausible jumps with the previous day's value.

    Per model/level/weights series and per column (var, es): the mean and
    standard deviation of daily absolute changes are frozen over the first
    burn_in estimates; later observations whose change z-score exceeds z_cap
    revert to the prior (already cleaned) value. Frozen statistics mean no
    look-ahead enters the cleaned series.
    """
    frame = cube.frame.copy()
    n_replaced = 0
    short_series = 0
    keys = ["marginal", "dependence", "level", "weights_id"]
    for _, idx in frame.groupby(keys, sort=False).groups.items():
        sub = frame.loc[idx].sort_values("date")
        valid_idx = sub.index[sub["valid"]]
        if len(valid_idx) < burn_in:
            short_series += 1
            continue
        for col in ("var", "es"):
            x = frame.loc[valid_idx, col].to_numpy(dtype=float).copy()
            d_burn = np.abs(np.diff(x[:burn_in]))
            mu, sd = float(d_burn.mean()), float(d_burn.std(ddof=1))
            if sd <= 0:
                continue
            for t in range(burn_in, x.size):
                if abs(x[t] - x[t - 1]) > mu + z_cap * sd:
                    x[t] = x[t - 1]
                    n_replaced += 1
            frame.loc[valid_idx, col] = x
    if short_series:
        warnings.warn(
            f"{short_series} series shorter than burn_in={burn_in} passed through",
            stacklevel=2,
        )
    meta = dict(cube.meta)
    meta["outliers_replaced"] = n_replaced
    return ForecastCube(frame, meta=meta)
