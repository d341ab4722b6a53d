"""The nine dependence models: fit on pseudo-observations, simulate uniforms.

Families: gaussian, student_t, clayton, gumbel, frank, joe, vine, gmc
(three-component Gaussian-mixture copula), and dcc. Elliptical correlation
matrices come from pairwise Kendall tau via rho = sin(pi tau / 2) with a
nearest-positive-definite repair; Archimedean scalars come from inverting
the tau(theta) map at the average pairwise tau. Every simulator is
deterministic given its seed and emits values strictly inside (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats
from sklearn.mixture import GaussianMixture

from . import bivariate
from .bivariate import THETA_CAP, kendall_tau_from_theta, theta_from_kendall_tau

FAMILIES = ("gaussian", "student_t", "clayton", "gumbel", "frank", "joe", "vine", "gmc", "dcc")

_EPS = 1e-10


class CopulaFitError(ValueError):
    """Raised when a dependence model cannot be fitted."""


@dataclass(frozen=True)
class CopulaSpec:
    family: str

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown copula family {self.family!r}")


@dataclass(frozen=True)
class FittedCopula:
    family: str
    dim: int
    params: dict
    loglik: float | None = None


def pseudo_obs(std_resid: np.ndarray) -> np.ndarray:
    """Rank-based uniforms: U_{t,k} = rank(z_{t,k}) / (T + 1), average ranks on ties."""
    z = np.asarray(std_resid, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    t = z.shape[0]
    if t < 2:
        raise ValueError("need at least two rows to rank")
    return stats.rankdata(z, axis=0, method="average") / (t + 1)


def kendall_tau_matrix(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    k = u.shape[1]
    tau = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            tau[i, j] = tau[j, i] = stats.kendalltau(u[:, i], u[:, j]).statistic
    return tau


def nearest_pd_correlation(r: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Eigenvalue clipping followed by renormalization to unit diagonal."""
    r = 0.5 * (r + r.T)
    vals, vecs = np.linalg.eigh(r)
    if vals.min() >= floor:
        return r
    vals = np.clip(vals, floor, None)
    fixed = vecs @ np.diag(vals) @ vecs.T
    d = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(d, d)
    np.fill_diagonal(fixed, 1.0)
    return fixed


def _check_u(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError("pseudo-observations must be a T x K matrix")
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("pseudo-observations must lie strictly in (0, 1)")
    return u


# ---------------------------------------------------------------------------
# elliptical and Archimedean fitting


def _gaussian_loglik(u: np.ndarray, r: np.ndarray) -> float:
    x = stats.norm.ppf(u)
    sign, logdet = np.linalg.slogdet(r)
    rinv = np.linalg.inv(r)
    quad = np.einsum("ti,ij,tj->t", x, rinv - np.eye(r.shape[0]), x)
    return float(-0.5 * u.shape[0] * logdet - 0.5 * quad.sum())


def _t_copula_loglik(u: np.ndarray, r: np.ndarray, nu: float) -> float:
    x = stats.t.ppf(u, nu)
    t, k = x.shape
    sign, logdet = np.linalg.slogdet(r)
    rinv = np.linalg.inv(r)
    quad = np.einsum("ti,ij,tj->t", x, rinv, x)
    log_num = (
        special.gammaln((nu + k) / 2)
        + (k - 1) * special.gammaln(nu / 2)
        - k * special.gammaln((nu + 1) / 2)
        - 0.5 * logdet
        - (nu + k) / 2 * np.log1p(quad / nu)
    )
    log_den = -(nu + 1) / 2 * np.log1p(x**2 / nu).sum(axis=1)
    return float(np.sum(log_num - log_den))


def fit_copula(u: np.ndarray, spec: CopulaSpec) -> FittedCopula:
    """Fit one of the static dependence families to pseudo-observations.

    vine and gmc route to their dedicated fitters; dcc needs standardized
    residuals rather than uniforms, use fit_dcc.
    """
    u = _check_u(u)
    t, k = u.shape
    if k < 2:
        raise CopulaFitError("dependence models need K >= 2")
    if t < 50:
        raise CopulaFitError(f"need T >= 50 observations, got {t}")
    fam = spec.family
    if fam == "vine":
        return fit_vine(u)
    if fam == "gmc":
        return fit_gmc(u)
    if fam == "dcc":
        raise CopulaFitError("dcc is fitted on standardized residuals; use fit_dcc")

    tau = kendall_tau_matrix(u)
    if fam in ("gaussian", "student_t"):
        r = nearest_pd_correlation(np.sin(np.pi * tau / 2.0))
        if fam == "gaussian":
            return FittedCopula("gaussian", k, {"corr": r}, _gaussian_loglik(u, r))
        res = optimize.minimize_scalar(
            lambda nu: -_t_copula_loglik(u, r, nu),
            bounds=(2.1, 100.0),
            method="bounded",
            options={"xatol": 1e-3},
        )
        nu = float(res.x)
        return FittedCopula("student_t", k, {"corr": r, "nu": nu}, -float(res.fun))

    iu = np.triu_indices(k, 1)
    tau_bar = float(np.mean(tau[iu]))
    clamped = False
    if fam in ("clayton", "gumbel", "joe") and tau_bar < 0:
        clamped = True
    if fam == "frank" and k > 2 and tau_bar < 0:
        clamped = True
    theta = theta_from_kendall_tau(fam, tau_bar if not clamped else 1e-6)
    return FittedCopula(fam, k, {"theta": float(theta), "tau_bar": tau_bar, "clamped": clamped})


def copula_from_params(family: str, params: dict, dim: int) -> FittedCopula:
    """Build a FittedCopula directly from known parameters (DGP support)."""
    if family in ("gaussian", "student_t"):
        p = dict(params)
        if "corr" not in p:
            rho = float(p.pop("rho"))
            r = np.full((dim, dim), rho)
            np.fill_diagonal(r, 1.0)
            p["corr"] = r
        else:
            p["corr"] = np.asarray(p["corr"], dtype=float)
        return FittedCopula(family, dim, p)
    if family in ("clayton", "gumbel", "frank", "joe"):
        return FittedCopula(family, dim, {"theta": float(params["theta"])})
    if family == "gmc":
        return FittedCopula(family, dim, dict(params))
    raise ValueError(f"cannot build {family!r} from raw parameters")


# ---------------------------------------------------------------------------
# simulation


def _sim_gaussian(r: np.ndarray, n: int, rng) -> np.ndarray:
    chol = np.linalg.cholesky(nearest_pd_correlation(r))
    z = rng.standard_normal((n, r.shape[0])) @ chol.T
    return stats.norm.cdf(z)


def _sim_t(r: np.ndarray, nu: float, n: int, rng) -> np.ndarray:
    chol = np.linalg.cholesky(nearest_pd_correlation(r))
    z = rng.standard_normal((n, r.shape[0])) @ chol.T
    w = rng.chisquare(nu, size=n) / nu
    return stats.t.cdf(z / np.sqrt(w)[:, None], nu)


def _sim_stable(alpha: float, n: int, rng) -> np.ndarray:
    """Positive stable S(alpha, 1) via Chambers-Mallows-Stuck (Gumbel frailty)."""
    v = rng.uniform(0.0, math.pi, size=n)
    w = rng.standard_exponential(size=n)
    return (
        np.sin(alpha * v) / np.sin(v) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def _sim_logseries(p: float, n: int, rng) -> np.ndarray:
    """Logarithmic(p) frailty via Kemp's LK algorithm (Frank copula)."""
    u1 = rng.uniform(size=n)
    u2 = rng.uniform(size=n)
    q = 1.0 - np.exp(u1 * math.log1p(-p))
    v = np.ones(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.floor(1.0 + np.log(u2) / np.log(q))
    small = u2 <= q * q
    v = np.where(small, np.where(np.isfinite(k), k, 1.0), v)
    v = np.where(~small & (u2 <= q), 2.0, v)
    return np.maximum(v, 1.0)


def _sim_sibuya(alpha: float, n: int, rng) -> np.ndarray:
    """Sibuya(alpha) frailty (Joe copula): exact CDF table, asymptotic tail."""
    cap = 2000
    ks = np.arange(1, cap + 1)
    surv = np.cumprod(1.0 - alpha / ks)  # P(N > k)
    cdf = 1.0 - surv
    u = rng.uniform(size=n)
    v = np.searchsorted(cdf, u) + 1.0
    tail = u > cdf[-1]
    if np.any(tail):
        # P(N > n) ~ n^-alpha / Gamma(1 - alpha)
        v[tail] = np.ceil(((1.0 - u[tail]) * special.gamma(1.0 - alpha)) ** (-1.0 / alpha))
    return v


def _sim_archimedean(family: str, theta: float, k: int, n: int, rng) -> np.ndarray:
    e = rng.standard_exponential((n, k))
    if family == "clayton":
        v = rng.standard_gamma(1.0 / theta, size=n)
        return (1.0 + e / v[:, None]) ** (-1.0 / theta)
    if family == "gumbel":
        if theta < 1 + 1e-9:
            return np.clip(rng.uniform(size=(n, k)), _EPS, 1 - _EPS)
        v = _sim_stable(1.0 / theta, n, rng)
        return np.exp(-((e / v[:, None]) ** (1.0 / theta)))
    if family == "frank":
        if abs(theta) < 1e-8:
            return np.clip(rng.uniform(size=(n, k)), _EPS, 1 - _EPS)
        if theta < 0:
            if k != 2:
                raise ValueError("negative Frank dependence only supported for K = 2")
            u1 = rng.uniform(size=n)
            w = rng.uniform(size=n)
            pc = bivariate.PairCopula("frank", theta)
            return np.column_stack([u1, pc.h2_inv(w, u1)])
        v = _sim_logseries(-math.expm1(-theta), n, rng)
        arg = np.exp(-e / v[:, None])
        return -np.log1p(arg * math.expm1(-theta)) / theta
    if family == "joe":
        if theta < 1 + 1e-9:
            return np.clip(rng.uniform(size=(n, k)), _EPS, 1 - _EPS)
        v = _sim_sibuya(1.0 / theta, n, rng)
        return 1.0 - (-np.expm1(-e / v[:, None])) ** (1.0 / theta)
    raise ValueError(f"not an Archimedean family: {family!r}")


def simulate_copula(fc: FittedCopula, n: int, seed: int) -> np.ndarray:
    """Draw n uniform K-vectors from the fitted dependence model."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    fam, k = fc.family, fc.dim
    if fam == "gaussian":
        u = _sim_gaussian(fc.params["corr"], n, rng)
    elif fam == "student_t":
        u = _sim_t(fc.params["corr"], fc.params["nu"], n, rng)
    elif fam in ("clayton", "gumbel", "frank", "joe"):
        u = _sim_archimedean(fam, fc.params["theta"], k, n, rng)
    elif fam == "vine":
        from .vine import simulate_vine

        u = simulate_vine(fc, n, rng)
    elif fam == "gmc":
        u = _sim_gmc(fc, n, rng)
    elif fam == "dcc":
        z = simulate_dcc_innovations(fc, n, rng)
        nu = fc.params["nu"]
        u = stats.t.cdf(z * math.sqrt(nu / (nu - 2.0)), nu)
    else:
        raise ValueError(f"unknown family {fam!r}")
    return np.clip(u, _EPS, 1 - _EPS)


def fit_vine(u: np.ndarray) -> FittedCopula:
    from .vine import fit_vine as _fit

    return _fit(_check_u(u))


# ---------------------------------------------------------------------------
# Gaussian mixture copula


def _mixture_marginal_cdf(x: np.ndarray, w, means, sds) -> np.ndarray:
    # x: (n,), component params for one dimension
    return np.sum(w[None, :] * stats.norm.cdf((x[:, None] - means[None, :]) / sds[None, :]), axis=1)


def _mixture_marginal_ppf(u: np.ndarray, w, means, sds) -> np.ndarray:
    """Inverse mixture CDF via monotone interpolation on a dense grid."""
    lo = float(np.min(means - 10 * sds))
    hi = float(np.max(means + 10 * sds))
    grid = np.linspace(lo, hi, 4001)
    cdf = _mixture_marginal_cdf(grid, w, means, sds)
    cdf, keep = np.unique(cdf, return_index=True)
    return np.interp(u, cdf, grid[keep])


def _gmc_marginal_params(weights, means, covs, dim_idx):
    sds = np.sqrt(covs[:, dim_idx, dim_idx])
    return weights, means[:, dim_idx], sds


def _gmc_pseudo_loglik(z: np.ndarray, gm_weights, gm_means, gm_covs) -> float:
    n, k = z.shape
    total = np.zeros(n)
    comp = np.zeros((n, len(gm_weights)))
    for c, (w, m, s) in enumerate(zip(gm_weights, gm_means, gm_covs)):
        comp[:, c] = math.log(max(w, 1e-300)) + stats.multivariate_normal.logpdf(z, m, s, allow_singular=True)
    total = special.logsumexp(comp, axis=1)
    for d in range(k):
        w, m, s = _gmc_marginal_params(gm_weights, gm_means, gm_covs, d)
        dens = np.sum(w[None, :] * stats.norm.pdf((z[:, d : d + 1] - m[None, :]) / s[None, :]) / s[None, :], axis=1)
        total -= np.log(np.clip(dens, 1e-300, None))
    return float(np.sum(total))


def fit_gmc(u: np.ndarray, k_components: int = 3, n_restarts: int = 5, seed: int = 0) -> FittedCopula:
    """Pseudo-EM for the Gaussian-mixture copula.

    Alternates mapping U through the current mixture's marginal quantiles
    with a Gaussian-mixture EM step on the mapped data; keeps the best of
    the seeded restarts by pseudo-likelihood.
    """
    u = _check_u(u)
    t, k = u.shape
    if t < 100:
        raise CopulaFitError(f"gmc needs T >= 100, got {t}")
    best = None
    best_ll = -np.inf
    for restart in range(n_restarts):
        z = stats.norm.ppf(u)
        gm = GaussianMixture(
            n_components=k_components,
            covariance_type="full",
            reg_covar=1e-6,
            max_iter=25,
            n_init=1,
            random_state=seed * 1000 + restart,
        )
        gm.fit(z)
        prev_ll = -np.inf
        for _ in range(200):
            weights, means, covs = gm.weights_, gm.means_, gm.covariances_
            for c in range(k_components):
                if np.linalg.det(covs[c]) < 1e-12:
                    covs = covs.copy()
                    covs[c] = np.eye(k)
                    gm.covariances_ = covs
            z = np.column_stack(
                [
                    _mixture_marginal_ppf(u[:, d], *_gmc_marginal_params(weights, means, covs, d))
                    for d in range(k)
                ]
            )
            gm = GaussianMixture(
                n_components=k_components,
                covariance_type="full",
                reg_covar=1e-6,
                max_iter=10,
                n_init=1,
                random_state=seed * 1000 + restart,
                weights_init=weights,
                means_init=means,
                precisions_init=np.linalg.inv(covs),
            )
            gm.fit(z)
            ll = _gmc_pseudo_loglik(z, gm.weights_, gm.means_, gm.covariances_)
            if np.isfinite(prev_ll) and abs(ll - prev_ll) < 1e-6 * max(1.0, abs(prev_ll)):
                prev_ll = ll
                break
            prev_ll = ll
        if prev_ll > best_ll:
            best_ll = prev_ll
            best = (gm.weights_.copy(), gm.means_.copy(), gm.covariances_.copy())
    w, m, c = best
    order = np.argsort(-w)  # identifiability: components sorted by weight
    return FittedCopula(
        "gmc",
        k,
        {"weights": w[order], "means": m[order], "covs": c[order]},
        loglik=best_ll,
    )


def _sim_gmc(fc: FittedCopula, n: int, rng) -> np.ndarray:
    w = np.asarray(fc.params["weights"], dtype=float)
    means = np.asarray(fc.params["means"], dtype=float)
    covs = np.asarray(fc.params["covs"], dtype=float)
    k = fc.dim
    comp = rng.choice(len(w), size=n, p=w / w.sum())
    x = np.empty((n, k))
    for c in range(len(w)):
        idx = comp == c
        if idx.any():
            chol = np.linalg.cholesky(covs[c] + 1e-12 * np.eye(k))
            x[idx] = means[c] + rng.standard_normal((int(idx.sum()), k)) @ chol.T
    u = np.empty_like(x)
    for d in range(k):
        u[:, d] = _mixture_marginal_cdf(x[:, d], *_gmc_marginal_params(w, means, covs, d))
    return u


# ---------------------------------------------------------------------------
# DCC on standardized residuals


def _dcc_path(z: np.ndarray, a: float, b: float, qbar: np.ndarray):
    """Correlation path R_1..R_T stacked (T, k, k), plus the final Q."""
    t, k = z.shape
    q = qbar.copy()
    rs = np.empty((t, k, k))
    for i in range(t):
        if i > 0:
            q = (1 - a - b) * qbar + a * np.outer(z[i - 1], z[i - 1]) + b * q
        d = 1.0 / np.sqrt(np.diag(q))
        rs[i] = q * np.outer(d, d)
    return q, rs


def _dcc_negloglik(x: np.ndarray, z: np.ndarray, qbar: np.ndarray) -> float:
    s = 0.999 / (1.0 + math.exp(-min(max(x[0], -35), 35)))
    frac = 1.0 / (1.0 + math.exp(-min(max(x[1], -35), 35)))
    a, b = s * frac, s * (1 - frac)
    nu = 2.1 + 97.9 / (1.0 + math.exp(-min(max(x[2], -35), 35)))
    _, rs = _dcc_path(z, a, b, qbar)
    t, k = z.shape
    scale = rs * ((nu - 2.0) / nu)
    try:
        chol = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        return 1e12
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    sol = np.linalg.solve(chol, z[:, :, None])[:, :, 0]
    quad = np.einsum("ti,ti->t", sol, sol)
    const = (
        special.gammaln((nu + k) / 2)
        - special.gammaln(nu / 2)
        - 0.5 * k * math.log(nu * math.pi)
    )
    ll = float(np.sum(const - 0.5 * logdet - (nu + k) / 2 * np.log1p(quad / nu)))
    return -ll if np.isfinite(ll) else 1e12


def fit_dcc(std_resid: np.ndarray, shape_start: float = 8.0) -> FittedCopula:
    """Second-stage DCC estimation under a multivariate Student-t.

    Q_t = (1-a-b) Qbar + a z_{t-1} z_{t-1}' + b Q_{t-1}; (a, b, nu) by ML.
    Stores Q_T and the one-step correlation R_{T+1} for forecasting.
    """
    z = np.asarray(std_resid, dtype=float)
    if z.ndim != 2 or z.shape[1] < 2:
        raise CopulaFitError("dcc needs a T x K residual matrix with K >= 2")
    t, k = z.shape
    if t < 100:
        raise CopulaFitError(f"dcc needs T >= 100, got {t}")
    qbar = nearest_pd_correlation(np.corrcoef(z, rowvar=False))

    def logit(p):
        return math.log(p / (1 - p))

    x0 = np.array([logit(0.95 / 0.999), logit(0.05 / 0.95), logit((shape_start - 2.1) / 97.9)])
    res = optimize.minimize(
        _dcc_negloglik, x0, args=(z, qbar), method="Nelder-Mead",
        options={"maxiter": 400, "fatol": 1e-6, "xatol": 1e-6, "adaptive": True},
    )
    s = 0.999 / (1.0 + math.exp(-min(max(res.x[0], -35), 35)))
    frac = 1.0 / (1.0 + math.exp(-min(max(res.x[1], -35), 35)))
    a, b = s * frac, s * (1 - frac)
    nu = 2.1 + 97.9 / (1.0 + math.exp(-min(max(res.x[2], -35), 35)))
    q_last, _ = _dcc_path(z, a, b, qbar)
    q_next = (1 - a - b) * qbar + a * np.outer(z[-1], z[-1]) + b * q_last
    d = 1.0 / np.sqrt(np.diag(q_next))
    r_next = q_next * np.outer(d, d)
    return FittedCopula(
        "dcc",
        k,
        {"a": float(a), "b": float(b), "nu": float(nu), "qbar": qbar, "q_last": q_last,
         "r_next": nearest_pd_correlation(r_next)},
        loglik=-float(res.fun),
    )


def simulate_dcc_innovations(fc: FittedCopula, n: int, rng) -> np.ndarray:
    """Unit-variance multivariate-t innovations with correlation R_{T+1}."""
    nu = fc.params["nu"]
    r = fc.params["r_next"]
    chol = np.linalg.cholesky(nearest_pd_correlation(r))
    g = rng.standard_normal((n, fc.dim)) @ chol.T
    w = rng.chisquare(nu, size=n) / nu
    x = g / np.sqrt(w)[:, None]  # multivariate t with correlation matrix r
    return x * math.sqrt((nu - 2.0) / nu)  # rescale margins to unit variance
