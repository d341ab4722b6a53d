"""Bivariate copula building blocks: densities, h-functions, and tau maps.

These are the pair copulas used both for the exchangeable multivariate
families and as vine edges. Conventions:

  h1(u, v) = P(U <= u | V = v) = dC(u, v)/dv
  h2(u, v) = P(V <= v | U = u) = dC(u, v)/du

Rotations follow the usual quadrant convention: 90 rotates the first
argument (negative dependence), 270 the second, 180 is the survival copula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

PAIR_FAMILIES = ("gaussian", "student_t", "frank", "clayton", "gumbel", "joe")
ROTATABLE = ("clayton", "gumbel", "joe")

_EPS = 1e-10
THETA_CAP = 50.0


def _clip01(u):
    return np.clip(np.asarray(u, dtype=float), _EPS, 1 - _EPS)


# ---------------------------------------------------------------------------
# Kendall tau <-> parameter maps


def _debye1(theta: float) -> float:
    if theta == 0:
        return 1.0
    val, _ = integrate.quad(lambda t: t / math.expm1(t), 0, abs(theta), limit=200, epsabs=1e-14)
    return val / abs(theta)


def _joe_tau(theta: float) -> float:
    # tau = 1 + 2 (psi(2) - psi(2/theta + 1)) / (2 - theta), from the Beta
    # integral representation of the Joe generator
    if theta == 1:
        return 0.0
    h = theta - 2.0
    if abs(h) < 1e-5:
        d1 = float(special.polygamma(1, 2.0))
        d2 = float(special.polygamma(2, 2.0))
        return 1.0 - d1 + h * (d1 / 2.0 + d2 / 4.0)
    num = float(special.digamma(2.0) - special.digamma(2.0 / theta + 1.0))
    return 1.0 + 2.0 * num / (2.0 - theta)


def kendall_tau_from_theta(family: str, theta: float) -> float:
    """tau(theta) for the one-parameter Archimedean families (and Gaussian rho)."""
    if family == "clayton":
        if theta <= 0:
            raise ValueError("Clayton needs theta > 0")
        return theta / (theta + 2.0)
    if family == "gumbel":
        if theta < 1:
            raise ValueError("Gumbel needs theta >= 1")
        return 1.0 - 1.0 / theta
    if family == "frank":
        if theta == 0:
            raise ValueError("Frank needs theta != 0")
        tau = 1.0 - 4.0 / abs(theta) * (1.0 - _debye1(theta))
        return math.copysign(tau, theta)
    if family == "joe":
        if theta < 1:
            raise ValueError("Joe needs theta >= 1")
        return _joe_tau(theta)
    if family in ("gaussian", "student_t"):
        if not -1 < theta < 1:
            raise ValueError("correlation must lie in (-1, 1)")
        return 2.0 / math.pi * math.asin(theta)
    raise ValueError(f"unknown family {family!r}")


def theta_from_kendall_tau(family: str, tau: float) -> float:
    """Invert the tau(theta) map, clamped to each family's admissible range."""
    if family in ("gaussian", "student_t"):
        return math.sin(math.pi * tau / 2.0)
    if family == "clayton":
        tau = min(max(tau, 1e-6), THETA_CAP / (THETA_CAP + 2.0))
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        tau = min(max(tau, 0.0), 1.0 - 1.0 / THETA_CAP)
        return 1.0 / (1.0 - tau)
    if family == "frank":
        sign = 1.0 if tau >= 0 else -1.0
        at = abs(tau)
        if at < 1e-9:
            return sign * 1e-6
        hi = THETA_CAP
        if kendall_tau_from_theta("frank", hi) <= at:
            return sign * hi
        theta = optimize.brentq(
            lambda th: kendall_tau_from_theta("frank", th) - at, 1e-9, hi, xtol=1e-13, rtol=8.9e-16
        )
        return sign * theta
    if family == "joe":
        tau = max(tau, 1e-9)
        hi = THETA_CAP
        if _joe_tau(hi) <= tau:
            return hi
        return optimize.brentq(lambda th: _joe_tau(th) - tau, 1.0 + 1e-12, hi, xtol=1e-13, rtol=8.9e-16)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# base-family densities and h-functions (positive-dependence orientation)


def _gauss_logpdf(u, v, rho):
    x, y = stats.norm.ppf(_clip01(u)), stats.norm.ppf(_clip01(v))
    r2 = rho * rho
    return -0.5 * math.log(1 - r2) - (r2 * (x * x + y * y) - 2 * rho * x * y) / (2 * (1 - r2))

def _gauss_h1(u, v, rho):
    x, y = stats.norm.ppf(_clip01(u)), stats.norm.ppf(_clip01(v))
    return stats.norm.cdf((x - rho * y) / math.sqrt(1 - rho * rho))

def _gauss_h1inv(p, v, rho):
    y = stats.norm.ppf(_clip01(v))
    return stats.norm.cdf(stats.norm.ppf(_clip01(p)) * math.sqrt(1 - rho * rho) + rho * y)


def _t_logpdf(u, v, rho, nu):
    x = stats.t.ppf(_clip01(u), nu)
    y = stats.t.ppf(_clip01(v), nu)
    r2 = rho * rho
    quad_form = (x * x - 2 * rho * x * y + y * y) / (1 - r2)
    log_num = (
        special.gammaln((nu + 2) / 2)
        + special.gammaln(nu / 2)
        - 2 * special.gammaln((nu + 1) / 2)
        - 0.5 * math.log(1 - r2)
        - (nu + 2) / 2 * np.log1p(quad_form / nu)
    )
    log_den = -(nu + 1) / 2 * (np.log1p(x * x / nu) + np.log1p(y * y / nu))
    return log_num - log_den

def _t_h1(u, v, rho, nu):
    x = stats.t.ppf(_clip01(u), nu)
    y = stats.t.ppf(_clip01(v), nu)
    scale = np.sqrt((nu + y * y) * (1 - rho * rho) / (nu + 1))
    return stats.t.cdf((x - rho * y) / scale, nu + 1)

def _t_h1inv(p, v, rho, nu):
    y = stats.t.ppf(_clip01(v), nu)
    scale = np.sqrt((nu + y * y) * (1 - rho * rho) / (nu + 1))
    x = stats.t.ppf(_clip01(p), nu + 1) * scale + rho * y
    return stats.t.cdf(x, nu)


def _clayton_logpdf(u, v, th):
    u, v = _clip01(u), _clip01(v)
    s = u ** (-th) + v ** (-th) - 1.0
    return math.log1p(th) - (1 + th) * (np.log(u) + np.log(v)) - (2 + 1 / th) * np.log(s)

def _clayton_h1(u, v, th):
    u, v = _clip01(u), _clip01(v)
    s = u ** (-th) + v ** (-th) - 1.0
    return v ** (-th - 1) * s ** (-1 / th - 1)

def _clayton_h1inv(p, v, th):
    p, v = _clip01(p), _clip01(v)
    inner = (p * v ** (th + 1)) ** (-th / (th + 1)) - v ** (-th) + 1.0
    return np.clip(inner, _EPS, None) ** (-1 / th)


def _gumbel_logcdf(u, v, th):
    lu, lv = -np.log(_clip01(u)), -np.log(_clip01(v))
    return -((lu ** th + lv ** th) ** (1 / th))

def _gumbel_logpdf(u, v, th):
    u, v = _clip01(u), _clip01(v)
    lu, lv = -np.log(u), -np.log(v)
    s = lu ** th + lv ** th
    w = s ** (1 / th)
    return (
        -w
        + np.log(w + th - 1)
        + (1 / th - 2) * np.log(s)
        + (th - 1) * (np.log(lu) + np.log(lv))
        + lu
        + lv
    )

def _gumbel_h1(u, v, th):
    u, v = _clip01(u), _clip01(v)
    lu, lv = -np.log(u), -np.log(v)
    s = lu ** th + lv ** th
    return np.exp(-(s ** (1 / th))) * lv ** (th - 1) * s ** (1 / th - 1) / v


def _frank_logpdf(u, v, th):
    u, v = _clip01(u), _clip01(v)
    # stable form of log of th (1-e^-th) e^{-th(u+v)} / (denominator)^2
    em = -math.expm1(-th)  # 1 - e^-th
    denom = em - (-np.expm1(-th * u)) * (-np.expm1(-th * v))
    return math.log(abs(th)) + math.log(abs(em)) - th * (u + v) - 2 * np.log(np.abs(denom))

def _frank_h1(u, v, th):
    u, v = _clip01(u), _clip01(v)
    a = np.expm1(-th * u)  # e^{-th u} - 1
    b = np.expm1(-th * v)
    d = math.expm1(-th)
    return np.exp(-th * v) * a / (d + a * b)

def _frank_h1inv(p, v, th):
    p, v = _clip01(p), _clip01(v)
    a = np.exp(-th * v)
    d = math.expm1(-th)
    b = p * d / (a - p * (a - 1.0))
    return -np.log1p(np.clip(b, -1 + _EPS, None)) / th


def _joe_logpdf(u, v, th):
    u, v = _clip01(u), _clip01(v)
    x, y = (1 - u) ** th, (1 - v) ** th
    s = np.clip(x + y - x * y, _EPS, None)
    return (
        (1 / th - 2) * np.log(s)
        + (th - 1) * (np.log1p(-u) + np.log1p(-v))
        + np.log(th - 1 + x + y - x * y)
    )

def _joe_h1(u, v, th):
    u, v = _clip01(u), _clip01(v)
    x, y = (1 - u) ** th, (1 - v) ** th
    s = np.clip(x + y - x * y, _EPS, None)
    return (1 - x) * (1 - v) ** (th - 1) * s ** (1 / th - 1)


def _bisect_h1inv(h1, p, v, args):
    """Invert u -> h1(u, v) by bisection; h1 is increasing in u."""
    p = _clip01(p)
    v = np.broadcast_to(np.asarray(v, dtype=float), p.shape).copy()
    lo = np.full_like(p, _EPS)
    hi = np.full_like(p, 1 - _EPS)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        too_low = h1(mid, v, *args) < p
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return 0.5 * (lo + hi)


_BASE = {
    "gaussian": (_gauss_logpdf, _gauss_h1, _gauss_h1inv),
    "student_t": (_t_logpdf, _t_h1, _t_h1inv),
    "clayton": (_clayton_logpdf, _clayton_h1, _clayton_h1inv),
    "gumbel": (_gumbel_logpdf, _gumbel_h1, None),
    "frank": (_frank_logpdf, _frank_h1, _frank_h1inv),
    "joe": (_joe_logpdf, _joe_h1, None),
}


@dataclass(frozen=True)
class PairCopula:
    """A bivariate copula with optional quadrant rotation."""

    family: str
    theta: float
    rotation: int = 0
    nu: float = 0.0  # student_t only

    def __post_init__(self):
        if self.family not in _BASE:
            raise ValueError(f"unknown pair family {self.family!r}")
        if self.rotation not in (0, 90, 180, 270):
            raise ValueError(f"rotation must be one of 0/90/180/270, got {self.rotation}")
        if self.rotation != 0 and self.family not in ROTATABLE:
            raise ValueError(f"{self.family} does not support rotations")

    @property
    def n_params(self) -> int:
        return 2 if self.family == "student_t" else 1

    def _args(self):
        return (self.theta, self.nu) if self.family == "student_t" else (self.theta,)

    def _rot_uv(self, u, v):
        if self.rotation == 0:
            return u, v
        if self.rotation == 90:
            return 1 - np.asarray(u, dtype=float), v
        if self.rotation == 180:
            return 1 - np.asarray(u, dtype=float), 1 - np.asarray(v, dtype=float)
        return u, 1 - np.asarray(v, dtype=float)

    def logpdf(self, u, v):
        lp, _, _ = _BASE[self.family]
        ru, rv = self._rot_uv(u, v)
        return lp(ru, rv, *self._args())

    def h1(self, u, v):
        """P(U <= u | V = v)."""
        _, h1, _ = _BASE[self.family]
        args = self._args()
        if self.rotation == 0:
            return h1(u, v, *args)
        if self.rotation == 90:
            return 1.0 - h1(1 - np.asarray(u, dtype=float), v, *args)
        if self.rotation == 180:
            return 1.0 - h1(1 - np.asarray(u, dtype=float), 1 - np.asarray(v, dtype=float), *args)
        return h1(u, 1 - np.asarray(v, dtype=float), *args)

    def h2(self, u, v):
        """P(V <= v | U = u); uses exchangeability of the base families."""
        _, h1, _ = _BASE[self.family]
        args = self._args()
        if self.rotation == 0:
            return h1(v, u, *args)
        if self.rotation == 90:
            return h1(v, 1 - np.asarray(u, dtype=float), *args)
        if self.rotation == 180:
            return 1.0 - h1(1 - np.asarray(v, dtype=float), 1 - np.asarray(u, dtype=float), *args)
        return 1.0 - h1(1 - np.asarray(v, dtype=float), u, *args)

    def h1_inv(self, p, v):
        """u such that h1(u, v) = p."""
        _, h1, h1inv = _BASE[self.family]
        args = self._args()
        if h1inv is None:
            return _bisect_hinv_dispatch(self, "h1", p, v)
        if self.rotation == 0:
            return h1inv(p, v, *args)
        if self.rotation == 90:
            return 1.0 - h1inv(1 - np.asarray(p, dtype=float), v, *args)
        if self.rotation == 180:
            return 1.0 - h1inv(1 - np.asarray(p, dtype=float), 1 - np.asarray(v, dtype=float), *args)
        return h1inv(p, 1 - np.asarray(v, dtype=float), *args)

    def h2_inv(self, p, u):
        """v such that h2(u, v) = p."""
        _, h1, h1inv = _BASE[self.family]
        args = self._args()
        if h1inv is None:
            return _bisect_hinv_dispatch(self, "h2", p, u)
        if self.rotation == 0:
            return h1inv(p, u, *args)
        if self.rotation == 90:
            return h1inv(p, 1 - np.asarray(u, dtype=float), *args)
        if self.rotation == 180:
            return 1.0 - h1inv(1 - np.asarray(p, dtype=float), 1 - np.asarray(u, dtype=float), *args)
        return 1.0 - h1inv(1 - np.asarray(p, dtype=float), u, *args)

    def swapped(self) -> "PairCopula":
        """Same copula with its two arguments exchanged (rotation 90 <-> 270)."""
        rot = {0: 0, 180: 180, 90: 270, 270: 90}[self.rotation]
        return PairCopula(self.family, self.theta, rot, self.nu)

    def tau(self) -> float:
        base = kendall_tau_from_theta(self.family, self.theta)
        return -base if self.rotation in (90, 270) else base


def _bisect_hinv_dispatch(pc: PairCopula, which: str, p, target):
    p = _clip01(np.asarray(p, dtype=float))
    target = np.broadcast_to(np.asarray(target, dtype=float), p.shape)
    lo = np.full_like(p, _EPS)
    hi = np.full_like(p, 1 - _EPS)
    func = (lambda m: pc.h1(m, target)) if which == "h1" else (lambda m: pc.h2(target, m))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        too_low = func(mid) < p
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# edge fitting: tau inversion per candidate, AIC selection


def _profile_t_nu(u, v, rho) -> tuple[float, float]:
    def nll(nu):
        return -float(np.sum(_t_logpdf(u, v, rho, nu)))

    res = optimize.minimize_scalar(nll, bounds=(2.1, 100.0), method="bounded", options={"xatol": 1e-3})
    return float(res.x), -float(res.fun)


def candidate_pair_copulas(u, v) -> list[tuple[PairCopula, float]]:
    """All AIC candidates for one edge: families, rotations, tau-inverted."""
    tau = float(stats.kendalltau(u, v).statistic)
    if not np.isfinite(tau):
        tau = 0.0
    out = []
    rho = theta_from_kendall_tau("gaussian", tau)
    rho = min(max(rho, -0.9999), 0.9999)
    out.append(PairCopula("gaussian", rho))
    nu, _ = _profile_t_nu(np.asarray(u), np.asarray(v), rho)
    out.append(PairCopula("student_t", rho, nu=nu))
    out.append(PairCopula("frank", theta_from_kendall_tau("frank", tau)))
    for fam in ROTATABLE:
        for rot in (0, 90, 180, 270):
            eff_tau = -tau if rot in (90, 270) else tau
            theta = theta_from_kendall_tau(fam, max(eff_tau, 1e-9))
            out.append(PairCopula(fam, theta, rotation=rot))
    result = []
    for pc in out:
        ll = float(np.sum(pc.logpdf(u, v)))
        if not np.isfinite(ll):
            ll = -np.inf
        result.append((pc, ll))
    return result


def fit_pair_copula(u, v) -> tuple[PairCopula, float]:
    """Minimum-AIC pair copula for one edge; returns (copula, loglik)."""
    best, best_aic, best_ll = None, np.inf, -np.inf
    for pc, ll in candidate_pair_copulas(u, v):
        aic = 2 * pc.n_params - 2 * ll
        if aic < best_aic:
            best, best_aic, best_ll = pc, aic, ll
    return best, best_ll
