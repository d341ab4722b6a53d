"""ARMA(1,1)-GARCH(1,1)-family marginal models.

The grid is 5 variance equations x 4 innovation distributions. Recursions:

  GARCH   sigma2_t = omega + alpha eps_{t-1}^2 + beta sigma2_{t-1}
  GJR     sigma2_t = omega + (alpha + gamma 1{eps<0}) eps_{t-1}^2 + beta sigma2_{t-1}
  EGARCH  log sigma2_t = omega + alpha z_{t-1} + gamma (|z_{t-1}| - E|z|) + beta log sigma2_{t-1}
  TGARCH  sigma_t = omega + alpha (|eps_{t-1}| - gamma eps_{t-1}) + beta sigma_{t-1}
  APARCH  sigma_t^d = omega + alpha (|eps_{t-1}| - gamma eps_{t-1})^d + beta sigma_{t-1}^d

TGARCH is the APARCH recursion with the power fixed at one. Constraint sets:
omega > 0 and alpha, beta >= 0 with persistence < 1 for GARCH/GJR; |beta| < 1
for EGARCH; additionally |gamma| < 1 and alpha * E[(|z|-gamma z)^d] + beta < 1
for TGARCH/APARCH. Recursions start at the unconditional variance where a
closed form exists (GARCH, GJR) and at the sample variance otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import optimize, stats

from . import distributions as dist

GARCH_FAMILIES = ("GARCH", "EGARCH", "GJR", "TGARCH", "APARCH")
INNOVATIONS = dist.NAMES

_PERSISTENCE_CAP = 0.9995


class FitError(ValueError):
    """Raised when a series cannot be fitted (too short, constant, invalid)."""


@dataclass(frozen=True)
class MarginalSpec:
    garch_family: str
    innovation: str

    def __post_init__(self):
        if self.garch_family not in GARCH_FAMILIES:
            raise ValueError(f"unknown garch family {self.garch_family!r}")
        if self.innovation not in INNOVATIONS:
            raise ValueError(f"unknown innovation {self.innovation!r}")

    @property
    def label(self) -> str:
        return f"{self.garch_family}-{self.innovation}"


def full_grid() -> list[MarginalSpec]:
    return [MarginalSpec(f, d) for f in GARCH_FAMILIES for d in INNOVATIONS]


@dataclass(frozen=True)
class ArmaGarchParams:
    mu: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    omega: float = 1e-6
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 2.0
    dist_params: dict = field(default_factory=dict)


def n_free_params(spec: MarginalSpec) -> int:
    k = 3  # mu, phi, theta
    k += {"GARCH": 3, "GJR": 4, "EGARCH": 4, "TGARCH": 4, "APARCH": 5}[spec.garch_family]
    k += {"normal": 0, "student_t": 1, "ged": 1, "skew_t": 2}[spec.innovation]
    return k


def check_stationarity(p: ArmaGarchParams, spec: MarginalSpec) -> None:
    """Reject parameter sets outside the family's stationarity region."""
    if abs(p.phi) >= 1:
        raise ValueError(f"|phi| must be < 1, got {p.phi}")
    fam = spec.garch_family
    if fam in ("GARCH", "GJR", "TGARCH", "APARCH") and not p.omega > 0:
        raise ValueError(f"omega must be > 0, got {p.omega}")
    if fam == "GARCH":
        if p.alpha < 0 or p.beta < 0 or p.alpha + p.beta >= 1:
            raise ValueError("GARCH needs alpha, beta >= 0 and alpha + beta < 1")
    elif fam == "GJR":
        kneg = dist.prob_negative(spec.innovation, p.dist_params)
        if p.alpha < 0 or p.beta < 0 or p.alpha + p.gamma < 0:
            raise ValueError("GJR needs alpha, beta >= 0 and alpha + gamma >= 0")
        if p.alpha + p.beta + p.gamma * kneg >= 1:
            raise ValueError("GJR persistence must be < 1")
    elif fam == "EGARCH":
        if abs(p.beta) >= 1:
            raise ValueError("EGARCH needs |beta| < 1")
    else:  # TGARCH / APARCH
        delta = 1.0 if fam == "TGARCH" else p.delta
        if p.alpha < 0 or p.beta < 0 or abs(p.gamma) >= 1 or delta <= 0:
            raise ValueError("TGARCH/APARCH needs alpha, beta >= 0, |gamma| < 1, delta > 0")
        kappa = dist.power_asymmetry_moment(spec.innovation, p.dist_params, p.gamma, delta)
        if p.alpha * kappa + p.beta >= 1:
            raise ValueError("TGARCH/APARCH persistence must be < 1")


# ---------------------------------------------------------------------------
# filtering recursions


@njit(cache=True)
def _arma_residuals(r, mu, phi, theta):
    t = r.shape[0]
    mean = np.empty(t)
    eps = np.empty(t)
    r_prev = mu / (1.0 - phi) if abs(phi) < 1.0 else mu
    e_prev = 0.0
    for i in range(t):
        mean[i] = mu + phi * r_prev + theta * e_prev
        eps[i] = r[i] - mean[i]
        r_prev = r[i]
        e_prev = eps[i]
    return mean, eps


@njit(cache=True)
def _garch_recursion(eps, omega, alpha, beta, gamma, s2_0, asym):
    # asym=0: plain GARCH; asym=1: GJR indicator term
    t = eps.shape[0]
    s2 = np.empty(t)
    prev_e2 = s2_0
    prev_ind = 0.0
    prev_s2 = s2_0
    for i in range(t):
        a = alpha + gamma * prev_ind if asym == 1 else alpha
        s2[i] = omega + a * prev_e2 + beta * prev_s2
        prev_e2 = eps[i] * eps[i]
        prev_ind = 1.0 if eps[i] < 0.0 else 0.0
        prev_s2 = s2[i]
    return s2


@njit(cache=True)
def _egarch_recursion(eps, omega, alpha, beta, gamma, eabs, ls2_0):
    t = eps.shape[0]
    s2 = np.empty(t)
    prev_ls2 = ls2_0
    prev_z = 0.0
    first = True
    for i in range(t):
        if first:
            ls2 = omega + beta * prev_ls2
            first = False
        else:
            ls2 = omega + alpha * prev_z + gamma * (abs(prev_z) - eabs) + beta * prev_ls2
        if ls2 > 200.0:
            ls2 = 200.0
        s2[i] = math.exp(ls2)
        prev_z = eps[i] / math.sqrt(s2[i])
        prev_ls2 = ls2
    return s2


@njit(cache=True)
def _aparch_recursion(eps, omega, alpha, beta, gamma, delta, sd_0):
    t = eps.shape[0]
    s2 = np.empty(t)
    prev_term = sd_0  # (|eps| - gamma eps)^delta proxy at start
    prev_sd = sd_0
    for i in range(t):
        sd = omega + alpha * prev_term + beta * prev_sd
        s2[i] = sd ** (2.0 / delta)
        prev_term = (abs(eps[i]) - gamma * eps[i]) ** delta
        prev_sd = sd
    return s2


def _initial_state(p: ArmaGarchParams, spec: MarginalSpec, eps: np.ndarray):
    fam = spec.garch_family
    n = eps.size
    m = float(eps.sum()) / n
    sample_var = max(float(eps @ eps) / n - m * m, 1e-12)
    if fam == "GARCH":
        pers = p.alpha + p.beta
        return p.omega / (1 - pers) if pers < 1 else sample_var
    if fam == "GJR":
        kneg = dist.prob_negative(spec.innovation, p.dist_params)
        pers = p.alpha + p.beta + p.gamma * kneg
        return p.omega / (1 - pers) if pers < 1 else sample_var
    if fam == "EGARCH":
        # E log sigma2 = omega / (1 - beta); guard against wild values
        if abs(p.beta) < 1:
            ls = p.omega / (1 - p.beta)
            if abs(ls) < 50:
                return ls
        return math.log(sample_var)
    delta = 1.0 if fam == "TGARCH" else p.delta
    return sample_var ** (delta / 2.0)


def garch_filter(p: ArmaGarchParams, spec: MarginalSpec, series: np.ndarray):
    """Run the mean and variance recursions; returns (cond_mean, cond_var, std_resid)."""
    r = np.ascontiguousarray(series, dtype=float)
    mean, eps = _arma_residuals(r, p.mu, p.phi, p.theta)
    fam = spec.garch_family
    init = _initial_state(p, spec, eps)
    if fam == "GARCH":
        s2 = _garch_recursion(eps, p.omega, p.alpha, p.beta, 0.0, init, 0)
    elif fam == "GJR":
        s2 = _garch_recursion(eps, p.omega, p.alpha, p.beta, p.gamma, init, 1)
    elif fam == "EGARCH":
        eabs = dist.abs_moment(spec.innovation, p.dist_params)
        s2 = _egarch_recursion(eps, p.omega, p.alpha, p.beta, p.gamma, eabs, init)
    else:
        delta = 1.0 if fam == "TGARCH" else p.delta
        s2 = _aparch_recursion(eps, p.omega, p.alpha, p.beta, p.gamma, delta, init)
    if not np.all(np.isfinite(s2)) or np.any(s2 <= 0):
        bad = int(np.argmax(~(np.isfinite(s2) & (s2 > 0))))
        raise FloatingPointError(f"variance recursion failed at index {bad}")
    return mean, s2, eps / np.sqrt(s2)


# alias matching the operation name used elsewhere in the pipeline
filter_series = garch_filter


@dataclass(frozen=True)
class FittedMarginal:
    spec: MarginalSpec
    params: ArmaGarchParams
    cond_mean: np.ndarray
    cond_var: np.ndarray
    std_resid: np.ndarray
    pit: np.ndarray
    loglik: float
    aic: float
    converged: bool
    last_return: float
    param_stderr: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# estimation: constrained transforms + Nelder-Mead multi-start


def _sigmoid(x):
    x = -35.0 if x < -35.0 else (35.0 if x > 35.0 else float(x))
    return 1.0 / (1.0 + math.exp(-x))


def _clip_s(x, lo, hi):
    return lo if x < lo else (hi if x > hi else float(x))


def _logit(p):
    p = min(max(p, 1e-9), 1 - 1e-9)
    return math.log(p / (1 - p))


def _param_names(spec: MarginalSpec) -> list[str]:
    names = ["mu", "phi", "theta"]
    fam = spec.garch_family
    if fam == "GARCH":
        names += ["omega", "persist", "frac"]
    elif fam == "GJR":
        names += ["omega", "persist", "split1", "split2"]
    elif fam == "EGARCH":
        names += ["omega", "alpha", "gamma", "beta"]
    elif fam == "TGARCH":
        names += ["omega", "alpha", "gamma", "beta"]
    else:
        names += ["omega", "alpha", "gamma", "beta", "delta"]
    inn = spec.innovation
    if inn in ("student_t", "skew_t"):
        names.append("nu")
    if inn == "skew_t":
        names.append("xi")
    if inn == "ged":
        names.append("ged_shape")
    return names


def _decode(x: np.ndarray, spec: MarginalSpec) -> ArmaGarchParams:
    fam = spec.garch_family
    mu = x[0]
    phi = 0.999 * math.tanh(x[1])
    theta = 0.999 * math.tanh(x[2])
    i = 3
    gamma, delta = 0.0, 2.0
    if fam == "GARCH":
        omega = math.exp(_clip_s(x[i], -60, 30))
        pers = _PERSISTENCE_CAP * _sigmoid(x[i + 1])
        frac = _sigmoid(x[i + 2])
        alpha, beta = pers * frac, pers * (1 - frac)
        i += 3
    elif fam == "GJR":
        omega = math.exp(_clip_s(x[i], -60, 30))
        pers = _PERSISTENCE_CAP * _sigmoid(x[i + 1])
        s1, s2 = _sigmoid(x[i + 2]), _sigmoid(x[i + 3])
        alpha = pers * s1 * s2
        gamma = 2.0 * pers * s1 * (1 - s2)  # gamma/2 enters persistence
        beta = pers * (1 - s1)
        i += 4
    elif fam == "EGARCH":
        omega, alpha, gamma = x[i], x[i + 1], x[i + 2]
        beta = 0.999 * math.tanh(x[i + 3])
        i += 4
    else:  # TGARCH / APARCH
        omega = math.exp(_clip_s(x[i], -60, 30))
        alpha = math.exp(_clip_s(x[i + 1], -60, 5))
        gamma = 0.99 * math.tanh(x[i + 2])
        beta = _PERSISTENCE_CAP * _sigmoid(x[i + 3])
        i += 4
        if fam == "APARCH":
            delta = 0.5 + 3.5 * _sigmoid(x[i])
            i += 1
        else:
            delta = 1.0
    dp = {}
    inn = spec.innovation
    if inn in ("student_t", "skew_t"):
        dp["nu"] = 2.1 + 97.9 * _sigmoid(x[i])
        i += 1
    if inn == "skew_t":
        dp["xi"] = math.exp(2.3 * math.tanh(x[i]))
        i += 1
    if inn == "ged":
        dp["nu"] = 0.3 + 9.7 * _sigmoid(x[i])
        i += 1
    return ArmaGarchParams(mu, phi, theta, omega, alpha, beta, gamma, delta, dp)


def _encode_start(spec: MarginalSpec, series: np.ndarray, style: str) -> np.ndarray:
    fam = spec.garch_family
    var = max(float(np.var(series)), 1e-12)
    mean = float(np.mean(series))
    a, b = {"mom": (0.05, 0.90), "high": (0.02, 0.96), "low": (0.10, 0.60)}[style]
    x = [mean, 0.0, 0.0]
    if fam in ("GARCH", "GJR"):
        omega = var * (1 - a - b)
        x.append(math.log(max(omega, 1e-30)))
        x.append(_logit((a + b) / _PERSISTENCE_CAP))
        if fam == "GARCH":
            x.append(_logit(a / (a + b)))
        else:
            # start symmetric: half the arch mass in the asymmetry term
            x.append(_logit(a / (a + b)))
            x.append(_logit(0.7))
    elif fam == "EGARCH":
        x += [math.log(var) * (1 - b), -0.05, 2.0 * a, math.atanh(b / 0.999)]
    else:
        delta = 1.0 if fam == "TGARCH" else 2.0
        kappa = dist.abs_moment("normal", {}) if delta == 1.0 else 1.0
        omega = var ** (delta / 2) * (1 - a * kappa - b)
        x.append(math.log(max(omega, 1e-30)))
        x.append(math.log(max(a, 1e-6)))
        x.append(0.05)
        x.append(_logit(b / _PERSISTENCE_CAP))
        if fam == "APARCH":
            x.append(_logit((delta - 0.5) / 3.5))
    inn = spec.innovation
    if inn in ("student_t", "skew_t"):
        x.append(_logit((8.0 - 2.1) / 97.9))
    if inn == "skew_t":
        x.append(0.0)
    if inn == "ged":
        x.append(_logit((1.5 - 0.3) / 9.7))
    return np.array(x, dtype=float)


def loglikelihood(p: ArmaGarchParams, spec: MarginalSpec, series: np.ndarray) -> float:
    try:
        _, s2, z = garch_filter(p, spec, series)
    except FloatingPointError:
        return -np.inf
    ll = float(np.sum(dist.logpdf(spec.innovation, p.dist_params, z)) - 0.5 * np.sum(np.log(s2)))
    return ll if np.isfinite(ll) else -np.inf


def _neg_loglik(x: np.ndarray, spec: MarginalSpec, series: np.ndarray) -> float:
    p = _decode(x, spec)
    if spec.garch_family in ("TGARCH", "APARCH"):
        delta = 1.0 if spec.garch_family == "TGARCH" else p.delta
        try:
            kappa = dist.power_asymmetry_moment(spec.innovation, p.dist_params, p.gamma, delta)
        except Exception:
            return 1e12
        if p.alpha * kappa + p.beta >= _PERSISTENCE_CAP:
            return 1e12
    ll = loglikelihood(p, spec, series)
    return -ll if np.isfinite(ll) else 1e12


def _natural_vector(p: ArmaGarchParams, spec: MarginalSpec):
    vec = [p.mu, p.phi, p.theta, p.omega, p.alpha, p.beta]
    names = ["mu", "phi", "theta", "omega", "alpha", "beta"]
    if spec.garch_family in ("GJR", "EGARCH", "TGARCH", "APARCH"):
        vec.append(p.gamma)
        names.append("gamma")
    if spec.garch_family == "APARCH":
        vec.append(p.delta)
        names.append("delta")
    if spec.innovation in ("student_t", "skew_t", "ged"):
        vec.append(p.dist_params["nu"])
        names.append("nu")
    if spec.innovation == "skew_t":
        vec.append(p.dist_params["xi"])
        names.append("xi")
    return np.array(vec), names


def _from_natural(vec: np.ndarray, p: ArmaGarchParams, spec: MarginalSpec) -> ArmaGarchParams:
    _, names = _natural_vector(p, spec)
    d = dict(zip(names, vec))
    dp = dict(p.dist_params)
    if "nu" in d:
        dp["nu"] = d["nu"]
    if "xi" in d:
        dp["xi"] = d["xi"]
    return ArmaGarchParams(
        d["mu"], d["phi"], d["theta"], d["omega"], d["alpha"], d["beta"],
        d.get("gamma", p.gamma), d.get("delta", p.delta), dp,
    )


def _asymptotic_stderr(p: ArmaGarchParams, spec: MarginalSpec, series: np.ndarray) -> dict:
    """Inverse-Hessian standard errors in the natural parametrization."""
    x0, names = _natural_vector(p, spec)
    n = len(x0)
    step = np.maximum(np.abs(x0), 1e-3) * 1e-4

    def f(v):
        try:
            return -loglikelihood(_from_natural(v, p, spec), spec, series)
        except (ValueError, FloatingPointError):
            return np.nan

    h = np.full((n, n), np.nan)
    f0 = f(x0)
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n); ei[i] = step[i]
            ej = np.zeros(n); ej[j] = step[j]
            if i == j:
                h[i, i] = (f(x0 + ei) - 2 * f0 + f(x0 - ei)) / step[i] ** 2
            else:
                h[i, j] = h[j, i] = (
                    f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)
                ) / (4 * step[i] * step[j])
    try:
        cov = np.linalg.inv(h)
        se = np.sqrt(np.diag(cov))
        se = np.where(np.isfinite(se), se, np.nan)
    except np.linalg.LinAlgError:
        se = np.full(n, np.nan)
    return dict(zip(names, se))


def fit_marginal(
    series,
    spec: MarginalSpec,
    compute_stderr: bool = True,
    max_iter: int = 500,
) -> FittedMarginal:
    """Constrained ML fit via simplex search from three starting points."""
    r = np.asarray(series, dtype=float)
    if r.ndim != 1 or r.size < 100:
        raise FitError(f"series must be 1-D with at least 100 observations, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise FitError("series contains non-finite values")
    if np.var(r) < 1e-18:
        raise FitError("series is (numerically) constant; zero variance cannot be fitted")

    best_x, best_f, converged = None, np.inf, False
    for style in ("mom", "high", "low"):
        x0 = _encode_start(spec, r, style)
        res = optimize.minimize(
            _neg_loglik, x0, args=(spec, r), method="Nelder-Mead",
            options={"maxiter": max_iter, "fatol": 1e-8 * max(1.0, abs(_neg_loglik(x0, spec, r))),
                     "xatol": 1e-8, "adaptive": True},
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
            converged = bool(res.success)
    # polish passes from the best point, same per-pass iteration cap; each
    # restart rebuilds the simplex. Converged once a full pass improves the
    # log-likelihood by less than the relative tolerance.
    ftol = 1e-8 * max(1.0, abs(best_f))
    for _ in range(8):
        res = optimize.minimize(
            _neg_loglik, best_x, args=(spec, r), method="Nelder-Mead",
            options={"maxiter": max_iter, "fatol": ftol, "xatol": 1e-10, "adaptive": True},
        )
        improvement = best_f - res.fun
        if res.fun <= best_f:
            best_x, best_f = res.x, res.fun
        if bool(res.success) or improvement <= ftol:
            converged = True
            break

    p = _decode(best_x, spec)
    mean, s2, z = garch_filter(p, spec, r)
    pit = np.clip(dist.cdf(spec.innovation, p.dist_params, z), 1e-10, 1 - 1e-10)
    ll = -best_f
    k = n_free_params(spec)
    stderr = _asymptotic_stderr(p, spec, r) if compute_stderr else {}
    return FittedMarginal(
        spec=spec, params=p, cond_mean=mean, cond_var=s2, std_resid=z, pit=pit,
        loglik=ll, aic=2 * k - 2 * ll, converged=converged,
        last_return=float(r[-1]), param_stderr=stderr,
    )


# ---------------------------------------------------------------------------
# forecasting


def forecast_one_step(fm: FittedMarginal, allow_unconverged: bool = False) -> tuple[float, float]:
    """One-step conditional mean and variance from the fitted state."""
    if not fm.converged and not allow_unconverged:
        raise ValueError("fit did not converge; pass allow_unconverged=True to override")
    p, spec = fm.params, fm.spec
    eps_t = fm.last_return - fm.cond_mean[-1]
    s2_t = fm.cond_var[-1]
    mu_next = p.mu + p.phi * fm.last_return + p.theta * eps_t
    fam = spec.garch_family
    if fam == "GARCH":
        s2_next = p.omega + p.alpha * eps_t**2 + p.beta * s2_t
    elif fam == "GJR":
        s2_next = p.omega + (p.alpha + p.gamma * (eps_t < 0)) * eps_t**2 + p.beta * s2_t
    elif fam == "EGARCH":
        z_t = eps_t / math.sqrt(s2_t)
        eabs = dist.abs_moment(spec.innovation, p.dist_params)
        s2_next = math.exp(
            p.omega + p.alpha * z_t + p.gamma * (abs(z_t) - eabs) + p.beta * math.log(s2_t)
        )
    else:
        delta = 1.0 if fam == "TGARCH" else p.delta
        sd_next = p.omega + p.alpha * (abs(eps_t) - p.gamma * eps_t) ** delta + p.beta * s2_t ** (delta / 2)
        s2_next = sd_next ** (2 / delta)
    return float(mu_next), float(s2_next)


def forecast_h_step_var(params: ArmaGarchParams, sigma2_next: float, h: int) -> float:
    """GARCH(1,1) h-step variance: sigma2 + (alpha+beta)^(h-1) (sigma2_next - sigma2)."""
    if h < 1:
        raise ValueError("h must be >= 1")
    pers = params.alpha + params.beta
    if params.alpha < 0 or params.beta < 0 or pers >= 1 or params.omega <= 0:
        raise ValueError("h-step formula requires a stationary GARCH(1,1)")
    uncond = params.omega / (1 - pers)
    return uncond + pers ** (h - 1) * (sigma2_next - uncond)


def innovation_quantile(innovation: str, dist_params: dict, u) -> np.ndarray | float:
    """Inverse CDF of the standardized innovation law."""
    out = dist.ppf(innovation, dist_params, u)
    return float(out) if np.ndim(u) == 0 else out


def forecast_univariate_risk(
    fm: FittedMarginal, level: float, allow_unconverged: bool = False
) -> tuple[float, float]:
    """One-day VaR/ES (positive loss fractions) from the marginal alone."""
    if not 0.5 < level < 1:
        raise ValueError("confidence level must lie in (0.5, 1)")
    mu_next, s2_next = forecast_one_step(fm, allow_unconverged=allow_unconverged)
    sigma = math.sqrt(s2_next)
    alpha = 1 - level
    if sigma < 1e-300:
        return -mu_next, -mu_next
    q = float(dist.ppf(fm.spec.innovation, fm.params.dist_params, alpha))
    es_z = dist.tail_mean(fm.spec.innovation, fm.params.dist_params, alpha)
    return -(mu_next + sigma * q), -(mu_next + sigma * es_z)


# ---------------------------------------------------------------------------
# simulation (DGP support)


def simulate_path(p: ArmaGarchParams, spec: MarginalSpec, innovations: np.ndarray) -> np.ndarray:
    """Generate a return path by running the recursions forward over given z_t."""
    z = np.asarray(innovations, dtype=float)
    t = z.size
    fam = spec.garch_family
    eabs = dist.abs_moment(spec.innovation, p.dist_params) if fam == "EGARCH" else 0.0
    delta = 1.0 if fam == "TGARCH" else p.delta
    if fam == "GARCH":
        s2 = p.omega / (1 - p.alpha - p.beta)
    elif fam == "GJR":
        kneg = dist.prob_negative(spec.innovation, p.dist_params)
        s2 = p.omega / (1 - p.alpha - p.beta - p.gamma * kneg)
    elif fam == "EGARCH":
        s2 = math.exp(p.omega / (1 - p.beta))
    else:
        kappa = dist.power_asymmetry_moment(spec.innovation, p.dist_params, p.gamma, delta)
        s2 = (p.omega / (1 - p.alpha * kappa - p.beta)) ** (2 / delta)
    r = np.empty(t)
    r_prev = p.mu / (1 - p.phi) if abs(p.phi) < 1 else p.mu
    e_prev, z_prev = 0.0, 0.0
    s2_prev = s2
    first = True
    for i in range(t):
        if first:
            s2_i = s2
            first = False
        elif fam == "GARCH":
            s2_i = p.omega + p.alpha * e_prev**2 + p.beta * s2_prev
        elif fam == "GJR":
            s2_i = p.omega + (p.alpha + p.gamma * (e_prev < 0)) * e_prev**2 + p.beta * s2_prev
        elif fam == "EGARCH":
            s2_i = math.exp(
                p.omega + p.alpha * z_prev + p.gamma * (abs(z_prev) - eabs) + p.beta * math.log(s2_prev)
            )
        else:
            sd = p.omega + p.alpha * (abs(e_prev) - p.gamma * e_prev) ** delta + p.beta * s2_prev ** (delta / 2)
            s2_i = sd ** (2 / delta)
        eps = z[i] * math.sqrt(s2_i)
        r[i] = p.mu + p.phi * r_prev + p.theta * e_prev + eps
        r_prev, e_prev, z_prev, s2_prev = r[i], eps, z[i], s2_i
    return r


def pit_values(fm: FittedMarginal) -> np.ndarray:
    return fm.pit


def ks_uniform_pvalue(pit: np.ndarray) -> float:
    """Kolmogorov-Smirnov uniformity p-value of PIT values."""
    return float(stats.kstest(pit, "uniform").pvalue)
