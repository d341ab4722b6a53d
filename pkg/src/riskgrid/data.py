"""Return panels, portfolio weights, rolling windows, and the synthetic DGP generator.

Returns throughout are simple (discretely compounded) daily returns so that
portfolio returns aggregate linearly in the weights.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


class PanelError(ValueError):
    """Raised when an input panel violates the schema or its invariants."""


@dataclass(frozen=True)
class ReturnPanel:
    """Dated T x K matrix of simple asset returns."""

    dates: tuple
    returns: np.ndarray
    asset_names: tuple

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "returns", r)
        if r.ndim != 2:
            raise PanelError("returns must be a T x K matrix")
        t, k = r.shape
        if t < 1 or k < 1:
            raise PanelError("panel needs T >= 1 and K >= 1")
        if len(self.dates) != t:
            raise PanelError(f"{len(self.dates)} dates for {t} return rows")
        if len(self.asset_names) != k:
            raise PanelError(f"{len(self.asset_names)} names for {k} columns")
        if not np.all(np.isfinite(r)):
            bad = np.argwhere(~np.isfinite(r))[0]
            raise PanelError(f"non-finite return at row {bad[0]}, column {bad[1]}")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise PanelError("dates must be strictly increasing")

    @property
    def n_obs(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def to_csv(self, path) -> None:
        df = pd.DataFrame(self.returns, columns=list(self.asset_names))
        df.insert(0, "date", [d.isoformat() for d in self.dates])
        df.to_csv(path, index=False)


@dataclass(frozen=True)
class WeightSet:
    """Non-negative portfolio weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class WindowPlan:
    """Rolling estimation window layout."""

    window_length: int = 500
    step: int = 1

    def __post_init__(self):
        if self.window_length < 2:
            raise ValueError("window_length must be >= 2")
        if self.step < 1:
            raise ValueError("step must be >= 1")


@dataclass(frozen=True)
class Window:
    """Half-open index range [start, end) with forecast target index `end`."""

    start: int
    end: int
    target: int
    out_of_sample: bool


def _parse_date(text: str, row: int):
    try:
        return _dt.date.fromisoformat(str(text).strip())
    except ValueError as exc:
        raise PanelError(f"malformed date {text!r} at row {row}") from exc


def load_returns(path, format: str = "returns") -> ReturnPanel:
    """Load a dated CSV of prices or simple returns into a ReturnPanel.

    The first column must be `date` (ISO-8601); every other column is one
    asset. With format="prices" the first row is consumed to form simple
    returns (P_t - P_{t-1}) / P_{t-1}.
    """
    if format not in ("prices", "returns"):
        raise ValueError(f"unknown format {format!r}")
    df = pd.read_csv(path, dtype=str)
    if df.shape[1] < 2:
        raise PanelError("need a date column plus at least one asset column")
    if df.columns[0].strip().lower() != "date":
        raise PanelError("first column must be named 'date'")
    names = tuple(c.strip() for c in df.columns[1:])
    dates = tuple(_parse_date(v, i) for i, v in enumerate(df.iloc[:, 0]))
    if len(set(dates)) != len(dates):
        seen = set()
        for i, d in enumerate(dates):
            if d in seen:
                raise PanelError(f"duplicate date {d.isoformat()} at row {i}")
            seen.add(d)
    values = np.empty((len(dates), len(names)))
    for j, col in enumerate(df.columns[1:]):
        for i, cell in enumerate(df[col]):
            if cell is None or (isinstance(cell, float) and np.isnan(cell)) or str(cell).strip() == "":
                raise PanelError(f"blank cell at row {i}, column {names[j]!r}")
            try:
                values[i, j] = float(cell)
            except ValueError as exc:
                raise PanelError(
                    f"non-numeric cell {cell!r} at row {i}, column {names[j]!r}"
                ) from exc
    if format == "prices":
        if np.any(values <= 0):
            bad = np.argwhere(values <= 0)[0]
            raise PanelError(f"non-positive price at row {bad[0]}, column {names[bad[1]]!r}")
        if len(dates) < 2:
            raise PanelError("need at least two price rows to form returns")
        rets = values[1:] / values[:-1] - 1.0
        return ReturnPanel(dates=dates[1:], returns=rets, asset_names=names)
    return ReturnPanel(dates=dates, returns=values, asset_names=names)


def portfolio_return(panel: ReturnPanel, w: WeightSet) -> np.ndarray:
    """Linear aggregation r_pf,t = sum_k w_k r_{k,t}."""
    if len(w) != panel.n_assets:
        raise ValueError(f"{len(w)} weights for {panel.n_assets} assets")
    return panel.returns @ w.weights


def sample_simplex_weights(k: int, n: int, seed: int) -> list[WeightSet]:
    """Draw n weight vectors uniformly on the (k-1)-simplex.

    Uses normalized exponential spacings, which is uniform on the simplex by
    construction and deterministic for a given seed.
    """
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    e = rng.standard_exponential(size=(n, k))
    w = e / e.sum(axis=1, keepdims=True)
    return [WeightSet(row) for row in w]


def rolling_windows(t: int, plan: WindowPlan) -> list[Window]:
    """Enumerate rolling windows; target index `end` is one day ahead.

    A window whose target index falls outside the panel is flagged
    out-of-sample rather than dropped.
    """
    if t < plan.window_length:
        raise ValueError(f"T={t} shorter than window_length={plan.window_length}")
    out = []
    start = 0
    while start + plan.window_length <= t:
        end = start + plan.window_length
        out.append(Window(start=start, end=end, target=end, out_of_sample=end >= t))
        start += plan.step
    return out


@dataclass(frozen=True)
class DgpSpec:
    """Known copula-GARCH data-generating process for validation runs.

    marginal_params: list of per-asset parameter dicts understood by
    riskgrid.marginals (keys mu/phi/theta/omega/alpha/beta plus family and
    innovation tags). copula describes the dependence draw.
    """

    marginal_params: tuple
    copula_family: str
    copula_params: dict
    n_obs: int
    seed: int
    start_date: _dt.date = field(default=_dt.date(2000, 1, 3))

    def __post_init__(self):
        if self.n_obs < 1:
            raise ValueError("n_obs must be >= 1")
        if len(self.marginal_params) < 1:
            raise ValueError("need at least one marginal spec")


def _weekday_dates(start: _dt.date, n: int) -> tuple:
    dates = []
    d = start
    while len(dates) < n:
        if d.weekday() < 5:
            dates.append(d)
        d += _dt.timedelta(days=1)
    return tuple(dates)


def simulate_dgp(spec: DgpSpec) -> ReturnPanel:
    """Simulate a return panel from a known copula-GARCH process.

    Draws uniforms from the configured copula, maps them through each marginal's
    standardized innovation quantile, and runs the ARMA-GARCH recursion
    forward from the unconditional variance.
    """
    from . import copulas, marginals

    k = len(spec.marginal_params)
    params = []
    specs = []
    for cfg in spec.marginal_params:
        mspec = marginals.MarginalSpec(
            garch_family=cfg.get("garch_family", "GARCH"),
            innovation=cfg.get("innovation", "normal"),
        )
        p = marginals.ArmaGarchParams(
            mu=cfg.get("mu", 0.0),
            phi=cfg.get("phi", 0.0),
            theta=cfg.get("theta", 0.0),
            omega=cfg.get("omega", 1e-5),
            alpha=cfg.get("alpha", 0.0),
            beta=cfg.get("beta", 0.0),
            gamma=cfg.get("gamma", 0.0),
            delta=cfg.get("delta", 2.0),
            dist_params=dict(cfg.get("dist_params", {})),
        )
        marginals.check_stationarity(p, mspec)
        params.append(p)
        specs.append(mspec)

    if k == 1 and spec.copula_family == "independent":
        rng = np.random.default_rng(spec.seed)
        u = rng.uniform(1e-12, 1 - 1e-12, size=(spec.n_obs, 1))
    else:
        fc = copulas.copula_from_params(spec.copula_family, spec.copula_params, k)
        u = copulas.simulate_copula(fc, spec.n_obs, spec.seed)

    returns = np.empty((spec.n_obs, k))
    for j in range(k):
        z = np.asarray(
            marginals.innovation_quantile(specs[j].innovation, params[j].dist_params, u[:, j])
        )
        returns[:, j] = marginals.simulate_path(params[j], specs[j], z)

    names = tuple(f"asset_{j + 1}" for j in range(k))
    return ReturnPanel(
        dates=_weekday_dates(spec.start_date, spec.n_obs),
        returns=returns,
        asset_names=names,
    )
