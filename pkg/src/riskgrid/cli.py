"""Command-line pipeline: data -> forecast -> backtest -> modelrisk -> mcs -> report.

A single YAML config drives every stage. Stage outputs live in the output
directory; each stage records a content hash of its inputs, so reruns skip
stages whose inputs are unchanged. Only this orchestrator writes files.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd
import yaml

from . import backtest as bt
from . import copulas, data, marginals, mcs as mcs_mod, modelrisk
from . import forecast as fc

STAGES = ("data", "forecast", "backtest", "modelrisk", "mcs", "report")

DEFAULTS = {
    "schema_version": 1,
    "seed": 0,
    "workers": 1,
    "output": "artifacts",
    "data": {"source": "file", "path": "returns.csv", "format": "returns", "simulate": {}},
    "weights": {"mode": "equal", "n": 1, "seed": 1, "vectors": []},
    "window": {"length": 500, "step": 1},
    "levels": [0.99],
    "grid": {"marginals": [], "dependence": list(copulas.FAMILIES),
             "include_univariate": True},
    "forecast": {"n_draws": 10000, "out_of_sample": False},
    "clean": {"enabled": True, "z_cap": 25.0, "burn_in": 500},
    "backtest": {"var_test": "duration", "es_test": "cc", "window": 500,
                 "confidence": 0.99, "step": 1},
    "modelrisk": {"measures": ["mad", "sd", "iqr"], "weights_id": "w0"},
    "mcs": {"alpha": 0.15, "cadence_days": 20, "eval_window": 500,
            "bootstrap_n": 1000, "risk_columns": ["var", "es"]},
    "report": {"portfolio_value": 100000.0, "horizon_days": 10.0},
}


class ConfigError(ValueError):
    """Invalid configuration; reported with the offending field."""


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    cfg = {}
    if path is not None:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
        if not isinstance(cfg, dict):
            raise ConfigError("config file must contain a mapping")
    cfg = _merge(DEFAULTS, cfg)
    if overrides:
        cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    for level in cfg["levels"]:
        if not 0.5 < float(level) < 1.0:
            raise ConfigError(f"levels: {level} outside (0.5, 1)")
    if cfg["data"]["source"] not in ("file", "simulate"):
        raise ConfigError(f"data.source: unknown source {cfg['data']['source']!r}")
    if cfg["weights"]["mode"] not in ("equal", "simplex", "explicit"):
        raise ConfigError(f"weights.mode: unknown mode {cfg['weights']['mode']!r}")
    if int(cfg["window"]["length"]) < 2:
        raise ConfigError("window.length: must be >= 2")
    if int(cfg["forecast"]["n_draws"]) < 100:
        raise ConfigError("forecast.n_draws: must be >= 100")
    if cfg["backtest"]["var_test"] not in bt.VAR_TESTS:
        raise ConfigError(f"backtest.var_test: must be one of {bt.VAR_TESTS}")
    if cfg["backtest"]["es_test"] not in bt.ES_TESTS:
        raise ConfigError(f"backtest.es_test: must be one of {bt.ES_TESTS}")
    if not 0 < float(cfg["mcs"]["alpha"]) < 1:
        raise ConfigError("mcs.alpha: must lie in (0, 1)")
    for m in cfg["modelrisk"]["measures"]:
        if m not in modelrisk.MEASURES:
            raise ConfigError(f"modelrisk.measures: unknown measure {m!r}")
    for fam in cfg["grid"]["dependence"]:
        if fam not in copulas.FAMILIES:
            raise ConfigError(f"grid.dependence: unknown family {fam!r}")
    known = {s.label for s in marginals.full_grid()}
    for lab in cfg["grid"]["marginals"]:
        if lab not in known:
            raise ConfigError(f"grid.marginals: unknown marginal {lab!r}")


def _marginal_specs(cfg: dict) -> list:
    labels = cfg["grid"]["marginals"]
    grid = marginals.full_grid()
    if not labels:
        return grid
    by_label = {s.label: s for s in grid}
    return [by_label[lab] for lab in labels]


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=str)


def _hash_text(*parts: str) -> str:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(p.encode())
        h.update(b"\x00")
    return h.hexdigest()


def _hash_file(path: Path) -> str:
    h = hashlib.blake2b(digest_size=16)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class StageState:
    """Per-stage input hashes persisted in the output directory."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / "stages.json"
        self.state = {}
        if self.path.exists():
            self.state = json.loads(self.path.read_text())

    def fresh(self, stage: str, input_hash: str, outputs: list) -> bool:
        rec = self.state.get(stage)
        if rec is None or rec["hash"] != input_hash:
            return False
        return all(Path(p).exists() for p in rec["outputs"]) and rec["outputs"] == [
            str(p) for p in outputs
        ]

    def record(self, stage: str, input_hash: str, outputs: list) -> None:
        self.state[stage] = {"hash": input_hash, "outputs": [str(p) for p in outputs]}
        self.path.write_text(json.dumps(self.state, indent=2, sort_keys=True))


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    out = df.copy()
    if "date" in out.columns:
        out["date"] = out["date"].map(
            lambda d: d.isoformat() if hasattr(d, "isoformat") else str(d)
        )
    out.to_csv(path, index=False, float_format="%.12g")


def _read_dated_csv(path: Path) -> pd.DataFrame:
    df = pd.read_csv(path, keep_default_na=False)
    if "date" in df.columns:
        df["date"] = df["date"].map(_dt.date.fromisoformat)
    return df


# ---------------------------------------------------------------- stages


def _stage_data(cfg: dict, out_dir: Path, state: StageState) -> Path:
    d = cfg["data"]
    returns_path = out_dir / "returns.csv"
    weights_path = out_dir / "weights.csv"
    pf_path = out_dir / "portfolio_returns.csv"
    outputs = [returns_path, weights_path, pf_path]
    if d["source"] == "file":
        upstream = _hash_file(Path(d["path"]))
    else:
        upstream = "simulate"
    input_hash = _hash_text(_canonical(d), _canonical(cfg["weights"]),
                            str(cfg["seed"]), upstream)
    if state.fresh("data", input_hash, outputs):
        return returns_path
    if d["source"] == "file":
        panel = data.load_returns(d["path"], format=d["format"])
    else:
        panel = data.simulate_dgp(_dgp_spec(cfg))
    frame = pd.DataFrame(panel.returns, columns=list(panel.asset_names))
    frame.insert(0, "date", [x.isoformat() for x in panel.dates])
    frame.to_csv(returns_path, index=False, float_format="%.17g")

    weight_sets = _weight_sets(cfg, panel.n_assets)
    wrows = []
    for i, w in enumerate(weight_sets):
        for name, val in zip(panel.asset_names, w.weights):
            wrows.append({"weights_id": f"w{i}", "asset": name, "weight": val})
    pd.DataFrame(wrows).to_csv(weights_path, index=False, float_format="%.17g")

    pf = pd.DataFrame({"date": [x.isoformat() for x in panel.dates]})
    for i, w in enumerate(weight_sets):
        pf[f"w{i}"] = data.portfolio_return(panel, w)
    pf.to_csv(pf_path, index=False, float_format="%.17g")
    state.record("data", input_hash, outputs)
    return returns_path


def _dgp_spec(cfg: dict) -> data.DgpSpec:
    sim = cfg["data"]["simulate"]
    if not sim.get("marginals"):
        raise ConfigError("data.simulate.marginals: required for simulated input")
    cop = sim.get("copula", {"family": "gaussian", "params": {"rho": 0.3}})
    start = sim.get("start_date", "2000-01-03")
    if isinstance(start, str):
        start = _dt.date.fromisoformat(start)
    return data.DgpSpec(
        marginal_params=tuple(sim["marginals"]),
        copula_family=cop["family"],
        copula_params=dict(cop.get("params", {})),
        n_obs=int(sim.get("n_obs", 1300)),
        seed=fc.derive_seed(int(cfg["seed"]), "dgp"),
        start_date=start,
    )


def _weight_sets(cfg: dict, k: int) -> list:
    w = cfg["weights"]
    if w["mode"] == "equal":
        return [data.WeightSet(np.full(k, 1.0 / k))]
    if w["mode"] == "simplex":
        return data.sample_simplex_weights(k, int(w["n"]), int(w["seed"]))
    return [data.WeightSet(np.asarray(v, dtype=float)) for v in w["vectors"]]


def _load_panel(out_dir: Path) -> data.ReturnPanel:
    df = _read_dated_csv(out_dir / "returns.csv")
    names = tuple(c for c in df.columns if c != "date")
    return data.ReturnPanel(
        dates=tuple(df["date"]),
        returns=df[list(names)].to_numpy(dtype=float),
        asset_names=names,
    )


def _load_pf_returns(out_dir: Path) -> dict:
    pf = _read_dated_csv(out_dir / "portfolio_returns.csv")
    return {
        c: pd.Series(pf[c].to_numpy(dtype=float), index=list(pf["date"]))
        for c in pf.columns
        if c != "date"
    }


def _stage_forecast(cfg: dict, out_dir: Path, state: StageState, workers: int) -> Path:
    cube_path = out_dir / "cube.csv"
    outputs = [cube_path]
    input_hash = _hash_text(
        _canonical({k: cfg[k] for k in ("window", "levels", "grid", "forecast", "clean")}),
        str(cfg["seed"]), _hash_file(out_dir / "returns.csv"),
        _hash_file(out_dir / "weights.csv"),
    )
    if state.fresh("forecast", input_hash, outputs):
        return cube_path
    panel = _load_panel(out_dir)
    weight_sets = _weight_sets(cfg, panel.n_assets)
    plan = data.WindowPlan(int(cfg["window"]["length"]), int(cfg["window"]["step"]))
    cube = fc.run_grid(
        panel, weight_sets, plan,
        levels=[float(x) for x in cfg["levels"]],
        marginal_specs=_marginal_specs(cfg),
        dependence_families=tuple(cfg["grid"]["dependence"]),
        base_seed=int(cfg["seed"]),
        n_draws=int(cfg["forecast"]["n_draws"]),
        include_univariate=bool(cfg["grid"]["include_univariate"]),
        workers=workers,
        include_out_of_sample=bool(cfg["forecast"]["out_of_sample"]),
    )
    if cfg["clean"]["enabled"]:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cube = fc.clean_outliers(cube, z_cap=float(cfg["clean"]["z_cap"]),
                                     burn_in=int(cfg["clean"]["burn_in"]))
    cube.to_csv(cube_path)
    state.record("forecast", input_hash, outputs)
    return cube_path


def _stage_backtest(cfg: dict, out_dir: Path, state: StageState) -> Path:
    mask_path = out_dir / "mask.csv"
    outputs = [mask_path]
    input_hash = _hash_text(_canonical(cfg["backtest"]), str(cfg["seed"]),
                            _hash_file(out_dir / "cube.csv"),
                            _hash_file(out_dir / "portfolio_returns.csv"))
    if state.fresh("backtest", input_hash, outputs):
        return mask_path
    cube = fc.ForecastCube.from_csv(out_dir / "cube.csv")
    pf = _load_pf_returns(out_dir)
    b = cfg["backtest"]
    mask = bt.candidate_mask(
        cube, pf, var_test=b["var_test"], es_test=b["es_test"],
        window=int(b["window"]), conf=float(b["confidence"]),
        seed=fc.derive_seed(int(cfg["seed"]), "backtest"), step=int(b["step"]),
    )
    _write_csv(mask, mask_path)
    state.record("backtest", input_hash, outputs)
    return mask_path


def _load_mask(path: Path) -> pd.DataFrame:
    m = _read_dated_csv(path)
    m["level"] = m["level"].astype(float)
    for col in ("rejected", "degenerate", "candidate"):
        m[col] = m[col].astype(str).isin(("True", "true", "1"))
    m["p_value"] = pd.to_numeric(m["p_value"], errors="coerce")
    return m


def _modelrisk_tables(cfg: dict, cube: fc.ForecastCube, mask: pd.DataFrame):
    series_rows = []
    summary_rows = []
    weights_id = cfg["modelrisk"]["weights_id"]
    pv = float(cfg["report"]["portfolio_value"])
    hz = float(cfg["report"]["horizon_days"])
    for level in [float(x) for x in cfg["levels"]]:
        for risk in ("var", "es"):
            for group in modelrisk.GROUPS:
                for measure in cfg["modelrisk"]["measures"]:
                    s = modelrisk.daily_model_risk(
                        cube, mask, group, level, risk_column=risk,
                        measure=measure, weights_id=weights_id,
                    )
                    f = s.frame()
                    f.insert(1, "level", level)
                    series_rows.append(f)
                    summ = modelrisk.period_summary(s)
                    summ.insert(0, "group", group)
                    summ.insert(1, "measure", measure)
                    summ.insert(2, "risk", risk)
                    summ.insert(3, "level", level)
                    summ["mean_dollar"] = [
                        fc.scale_dollar(m, pv, hz) if np.isfinite(m) else np.nan
                        for m in summ["mean"]
                    ]
                    summary_rows.append(summ)
    series = pd.concat(series_rows, ignore_index=True)
    summary = pd.concat(summary_rows, ignore_index=True)
    return series, summary


def _stage_modelrisk(cfg: dict, out_dir: Path, state: StageState) -> Path:
    series_path = out_dir / "modelrisk_series.csv"
    summary_path = out_dir / "modelrisk_summary.csv"
    outputs = [series_path, summary_path]
    input_hash = _hash_text(_canonical(cfg["modelrisk"]), _canonical(cfg["report"]),
                            _canonical(cfg["levels"]),
                            _hash_file(out_dir / "cube.csv"),
                            _hash_file(out_dir / "mask.csv"))
    if state.fresh("modelrisk", input_hash, outputs):
        return series_path
    cube = fc.ForecastCube.from_csv(out_dir / "cube.csv")
    mask = _load_mask(out_dir / "mask.csv")
    series, summary = _modelrisk_tables(cfg, cube, mask)
    _write_csv(series, series_path)
    _write_csv(summary, summary_path)
    state.record("modelrisk", input_hash, outputs)
    return series_path


def _stage_mcs(cfg: dict, out_dir: Path, state: StageState) -> Path:
    runs_path = out_dir / "mcs_runs.csv"
    mask_path = out_dir / "mask_mcs.csv"
    series_path = out_dir / "modelrisk_series_post_mcs.csv"
    summary_path = out_dir / "modelrisk_summary_post_mcs.csv"
    outputs = [runs_path, mask_path, series_path, summary_path]
    input_hash = _hash_text(_canonical(cfg["mcs"]), _canonical(cfg["modelrisk"]),
                            _canonical(cfg["report"]), _canonical(cfg["levels"]),
                            str(cfg["seed"]),
                            _hash_file(out_dir / "cube.csv"),
                            _hash_file(out_dir / "mask.csv"))
    if state.fresh("mcs", input_hash, outputs):
        return mask_path
    cube = fc.ForecastCube.from_csv(out_dir / "cube.csv")
    mask = _load_mask(out_dir / "mask.csv")
    pf = _load_pf_returns(out_dir)
    m = cfg["mcs"]
    weights_id = cfg["modelrisk"]["weights_id"]
    run_rows = []
    merged_mask = mask
    for level in [float(x) for x in cfg["levels"]]:
        for risk in m["risk_columns"]:
            schedule = mcs_mod.mcs_schedule(
                cube, mask, pf, level, risk_column=risk, weights_id=weights_id,
                cadence_days=int(m["cadence_days"]), eval_window=int(m["eval_window"]),
                alpha=float(m["alpha"]), bootstrap_n=int(m["bootstrap_n"]),
                seed=fc.derive_seed(int(cfg["seed"]), "mcs", level, risk),
            )
            for day, res in schedule:
                for model, p in sorted(res.p_values.items()):
                    run_rows.append({
                        "date": day, "level": level, "risk": risk,
                        "marginal": model[0], "dependence": model[1],
                        "p_value": p, "survivor": model in res.survivors,
                    })
            merged_mask = mcs_mod.apply_mcs(merged_mask, schedule, level,
                                            risk_column=risk, weights_id=weights_id)
    runs = pd.DataFrame(
        run_rows, columns=["date", "level", "risk", "marginal", "dependence",
                           "p_value", "survivor"],
    )
    _write_csv(runs, runs_path)
    _write_csv(merged_mask, mask_path)
    series, summary = _modelrisk_tables(cfg, cube, merged_mask)
    _write_csv(series, series_path)
    _write_csv(summary, summary_path)
    state.record("mcs", input_hash, outputs)
    return mask_path


def _percentile_bands(cfg: dict, cube: fc.ForecastCube) -> pd.DataFrame:
    """Per-day VaR percentile bands: 5/95 across G3, 20/80 within G1/G2 sets.

    Percentiles use linear interpolation, the same convention as the iqr
    dispersion measure.
    """
    weights_id = cfg["modelrisk"]["weights_id"]
    f = cube.frame
    f = f[(f["valid"]) & (f["weights_id"] == weights_id)
          & (f["dependence"] != fc.UNIVARIATE)]
    rows = []
    for level in [float(x) for x in cfg["levels"]]:
        g = f[f["level"] == level]
        for date, day in g.groupby("date", sort=True):
            x = day["var"].to_numpy(dtype=float)
            if x.size >= 2:
                lo, hi = np.percentile(x, [5.0, 95.0])
                rows.append({"date": date, "level": level, "group": "G3",
                             "set": "all", "lo_pct": 5.0, "hi_pct": 95.0,
                             "var_lo": lo, "var_hi": hi})
            for by, grp in (("dependence", "G1"), ("marginal", "G2")):
                for name, sub in day.groupby(by, sort=True):
                    xs = sub["var"].to_numpy(dtype=float)
                    if xs.size >= 2:
                        lo, hi = np.percentile(xs, [20.0, 80.0])
                        rows.append({"date": date, "level": level, "group": grp,
                                     "set": name, "lo_pct": 20.0, "hi_pct": 80.0,
                                     "var_lo": lo, "var_hi": hi})
    return pd.DataFrame(
        rows, columns=["date", "level", "group", "set", "lo_pct", "hi_pct",
                       "var_lo", "var_hi"],
    )


def _candidate_counts(mask: pd.DataFrame, phase: str) -> pd.DataFrame:
    g = (mask.groupby(["date", "level", "measure", "weights_id"], sort=True)["candidate"]
         .agg(["sum", "count"]).reset_index())
    g = g.rename(columns={"sum": "n_candidates", "count": "n_models"})
    g["n_candidates"] = g["n_candidates"].astype(int)
    g.insert(1, "phase", phase)
    return g


def _stage_report(cfg: dict, out_dir: Path, state: StageState) -> Path:
    rep = out_dir / "report"
    rep.mkdir(exist_ok=True)
    files = {
        "summary": rep / "model_risk_summary.csv",
        "series": rep / "model_risk_series.csv",
        "counts": rep / "candidate_counts.csv",
        "bands": rep / "percentile_bands.csv",
        "manifest": rep / "manifest.json",
    }
    outputs = list(files.values())
    upstream = ["cube.csv", "mask.csv", "mask_mcs.csv", "modelrisk_series.csv",
                "modelrisk_summary.csv", "modelrisk_series_post_mcs.csv",
                "modelrisk_summary_post_mcs.csv"]
    missing = [n for n in upstream if not (out_dir / n).exists()]
    if missing:
        raise ConfigError(f"report: missing stage outputs {missing}")
    input_hash = _hash_text(_canonical(cfg), *[_hash_file(out_dir / n) for n in upstream])
    if state.fresh("report", input_hash, outputs):
        return rep
    cube = fc.ForecastCube.from_csv(out_dir / "cube.csv")
    mask = _load_mask(out_dir / "mask.csv")
    mask_mcs = _load_mask(out_dir / "mask_mcs.csv")

    pre_sum = _read_dated_csv(out_dir / "modelrisk_summary.csv")
    post_sum = _read_dated_csv(out_dir / "modelrisk_summary_post_mcs.csv")
    pre_sum.insert(0, "phase", "pre_mcs")
    post_sum.insert(0, "phase", "post_mcs")
    _write_csv(pd.concat([pre_sum, post_sum], ignore_index=True), files["summary"])

    pre_ser = _read_dated_csv(out_dir / "modelrisk_series.csv")
    post_ser = _read_dated_csv(out_dir / "modelrisk_series_post_mcs.csv")
    pre_ser.insert(1, "phase", "pre_mcs")
    post_ser.insert(1, "phase", "post_mcs")
    _write_csv(pd.concat([pre_ser, post_ser], ignore_index=True), files["series"])

    counts = pd.concat(
        [_candidate_counts(mask, "pre_mcs"), _candidate_counts(mask_mcs, "post_mcs")],
        ignore_index=True,
    )
    _write_csv(counts, files["counts"])
    _write_csv(_percentile_bands(cfg, cube), files["bands"])

    manifest = {
        "config": cfg,
        "seed": int(cfg["seed"]),
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "stage_hashes": {k: v["hash"] for k, v in state.state.items()}
        | {"report": input_hash},
    }
    try:
        from importlib.metadata import version

        manifest["versions"]["riskgrid"] = version("riskgrid")
    except Exception:
        pass
    files["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                            default=str))
    state.record("report", input_hash, outputs)
    return rep


_STAGE_FUNCS = {
    "data": _stage_data,
    "forecast": _stage_forecast,
    "backtest": _stage_backtest,
    "modelrisk": _stage_modelrisk,
    "mcs": _stage_mcs,
    "report": _stage_report,
}


def run_pipeline(cfg: dict, stages=STAGES, workers: int | None = None) -> Path:
    """Execute the requested stages in pipeline order; returns the output dir."""
    out_dir = Path(cfg["output"])
    out_dir.mkdir(parents=True, exist_ok=True)
    state = StageState(out_dir)
    wanted = [s for s in STAGES if s in stages]
    if not wanted:
        raise ConfigError(f"stage filter matched nothing among {STAGES}")
    n_workers = int(workers if workers is not None else cfg["workers"])
    for stage in wanted:
        try:
            if stage == "forecast":
                _STAGE_FUNCS[stage](cfg, out_dir, state, n_workers)
            else:
                _STAGE_FUNCS[stage](cfg, out_dir, state)
        except ConfigError:
            raise
        except Exception as exc:
            raise RuntimeError(f"stage {stage!r} failed: {exc}") from exc
    return out_dir


# ------------------------------------------------------------------ click


def _common_options(f):
    f = click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="YAML configuration file.")(f)
    f = click.option("--seed", type=int, default=None, help="Base seed override.")(f)
    f = click.option("--workers", type=int, default=None,
                     help="Worker process count override.")(f)
    f = click.option("--output", type=click.Path(), default=None,
                     help="Output directory override.")(f)
    return f


def _invoke(config_path, seed, workers, output, stages):
    try:
        cfg = load_config(config_path,
                          {"seed": seed, "workers": workers, "output": output})
    except (ConfigError, yaml.YAMLError, OSError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(1)
    try:
        out = run_pipeline(cfg, stages=stages)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    click.echo(str(out))
    sys.exit(0)


@click.group()
def main():
    """Rolling copula-GARCH risk forecasting and model-risk pipeline."""


def _make_command(name: str, stages: tuple, doc: str):
    @main.command(name=name, help=doc)
    @_common_options
    def _cmd(config_path, seed, workers, output):
        _invoke(config_path, seed, workers, output, stages)

    return _cmd


_make_command("simulate", ("data",), "Build or simulate the return panel.")
_make_command("forecast", ("data", "forecast"), "Run the rolling forecast grid.")
_make_command("backtest", ("backtest",), "Backtest forecasts into a candidate mask.")
_make_command("modelrisk", ("modelrisk",), "Compute daily model-risk series.")
_make_command("mcs", ("mcs",), "Run the model confidence set schedule.")
_make_command("report", ("report",), "Emit report and plot-data files.")


@main.command(name="run", help="Run every stage in order.")
@_common_options
@click.option("--stage-filter", default=None,
              help="Comma-separated stage names to run (subset of the pipeline).")
def _run(config_path, seed, workers, output, stage_filter):
    stages = STAGES if stage_filter is None else tuple(
        s.strip() for s in stage_filter.split(",") if s.strip()
    )
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        click.echo(f"configuration error: unknown stages {unknown}", err=True)
        sys.exit(1)
    _invoke(config_path, seed, workers, output, stages)


if __name__ == "__main__":
    main()
