"""Pair copulas: tau maps, densities vs numerical oracles, h-functions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from riskgrid import bivariate as bv

ARCHIMEDEAN = ("clayton", "gumbel", "frank", "joe")


def test_tau_closed_forms():
    # clayton: tau = theta / (theta + 2); gumbel: 1 - 1/theta
    assert abs(bv.kendall_tau_from_theta("clayton", 2.0) - 0.5) < 1e-12
    assert abs(bv.kendall_tau_from_theta("gumbel", 2.0) - 0.5) < 1e-12
    # frank via the Debye integral evaluated independently
    theta = 4.0
    d1 = integrate.quad(lambda t: t / np.expm1(t), 0, theta)[0] / theta
    oracle = 1.0 - 4.0 / theta * (1.0 - d1)
    assert abs(bv.kendall_tau_from_theta("frank", theta) - oracle) < 1e-9
    # joe via the direct series sum
    th = 3.0
    s = sum(1.0 / (k * (2.0 + k * th) * (th * (k - 1) + 2.0)) for k in range(1, 400000))
    oracle_joe = 1.0 - 4.0 * s
    assert abs(bv.kendall_tau_from_theta("joe", th) - oracle_joe) < 1e-7


@pytest.mark.parametrize("family", ARCHIMEDEAN)
def test_tau_round_trip(family):
    taus = np.linspace(0.05, 0.85, 17)
    if family == "frank":
        taus = np.concatenate([-taus, taus])
    for tau in taus:
        theta = bv.theta_from_kendall_tau(family, float(tau))
        back = bv.kendall_tau_from_theta(family, theta)
        assert abs(back - tau) < 1e-10, (family, tau)


def test_gaussian_tau_round_trip():
    for tau in np.linspace(-0.9, 0.9, 19):
        rho = np.sin(np.pi * tau / 2.0)
        assert abs(2.0 / np.pi * np.arcsin(rho) - tau) < 1e-12


def test_joe_tau_smooth_near_theta_two():
    left = bv.kendall_tau_from_theta("joe", 2.0 - 1e-7)
    mid = bv.kendall_tau_from_theta("joe", 2.0)
    right = bv.kendall_tau_from_theta("joe", 2.0 + 1e-7)
    assert abs(left - mid) < 1e-6 and abs(right - mid) < 1e-6


def _pc(family, **kw):
    nu = kw.pop("nu", 0.0)
    theta = kw.pop("theta", kw.pop("rho", 0.0))
    return bv.PairCopula(family, theta, nu=nu)


PAIR_CASES = [
    _pc("gaussian", rho=0.6),
    _pc("student_t", rho=0.5, nu=5.0),
    _pc("clayton", theta=2.0),
    _pc("gumbel", theta=1.8),
    _pc("frank", theta=4.0),
    _pc("frank", theta=-3.0),
    _pc("joe", theta=2.2),
]


@pytest.mark.parametrize("pc", PAIR_CASES, ids=lambda p: f"{p.family}-{p.theta}-{p.nu}")
def test_density_integrates_to_one(pc):
    val, _ = integrate.dblquad(
        lambda v, u: np.exp(pc.logpdf(u, v)), 1e-6, 1 - 1e-6,
        lambda u: 1e-6, lambda u: 1 - 1e-6, epsabs=1e-6,
    )
    assert abs(val - 1.0) < 1e-3


@pytest.mark.parametrize("pc", PAIR_CASES, ids=lambda p: f"{p.family}-{p.theta}-{p.nu}")
def test_h1_is_conditional_cdf(pc):
    # h1(u, v) = d C(u,v) / dv checked by integrating the density over u
    for u, v in [(0.3, 0.4), (0.7, 0.2), (0.5, 0.8)]:
        oracle, _ = integrate.quad(
            lambda s: np.exp(pc.logpdf(s, v)), 1e-9, u, limit=200
        )
        assert abs(float(pc.h1(u, v)) - oracle) < 1e-6, (pc.family, u, v)


@pytest.mark.parametrize("pc", PAIR_CASES, ids=lambda p: f"{p.family}-{p.theta}-{p.nu}")
def test_h_inverse_round_trip(pc):
    rng = np.random.default_rng(7)
    u = rng.uniform(0.02, 0.98, 50)
    v = rng.uniform(0.02, 0.98, 50)
    p = pc.h1(u, v)
    back = pc.h1_inv(p, v)
    assert np.allclose(back, u, atol=1e-6)


def test_gaussian_h1_closed_form():
    rho = 0.6
    pc = _pc("gaussian", rho=rho)
    u, v = 0.3, 0.7
    x, y = stats.norm.ppf(u), stats.norm.ppf(v)
    oracle = stats.norm.cdf((x - rho * y) / np.sqrt(1 - rho * rho))
    assert abs(float(pc.h1(u, v)) - oracle) < 1e-12


def test_rotation_relations():
    base = _pc("clayton", theta=2.0)
    r90 = bv.PairCopula("clayton", 2.0, rotation=90)
    r180 = bv.PairCopula("clayton", 2.0, rotation=180)
    u, v = 0.3, 0.6
    # survival rotation: density reflected through (1-u, 1-v)
    assert abs(float(r180.logpdf(u, v)) - float(base.logpdf(1 - u, 1 - v))) < 1e-10
    # 90: density mirrored in the first argument
    assert abs(float(r90.logpdf(u, v)) - float(base.logpdf(1 - u, v))) < 1e-10
    # rotations flip the sign of dependence
    assert bv.kendall_tau_from_theta("clayton", 2.0) > 0
    tau90 = r90.tau()
    assert tau90 < 0


def test_swapped_consistency():
    pc = bv.PairCopula("clayton", 2.5, rotation=90)
    sw = pc.swapped()
    u, v = 0.25, 0.65
    assert abs(float(pc.logpdf(u, v)) - float(sw.logpdf(v, u))) < 1e-10
    assert abs(float(pc.h2(u, v)) - float(sw.h1(v, u))) < 1e-10


def test_fit_pair_copula_recovers_family():
    rng = np.random.default_rng(3)
    n = 4000
    # clayton sampler via the conditional-inverse method
    theta = 2.0
    u = rng.uniform(size=n)
    w = rng.uniform(size=n)
    v = ((w ** (-theta / (1 + theta)) - 1) * u ** (-theta) + 1) ** (-1 / theta)
    pc, aic = bv.fit_pair_copula(u, v)
    assert pc.family == "clayton" and pc.rotation == 0
    assert abs(pc.theta - theta) < 0.3


def test_fit_pair_copula_gaussian_data():
    rng = np.random.default_rng(4)
    n = 4000
    z = rng.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]], size=n)
    u, v = stats.norm.cdf(z[:, 0]), stats.norm.cdf(z[:, 1])
    pc, _ = bv.fit_pair_copula(u, v)
    assert pc.family in ("gaussian", "student_t")
    assert abs(pc.theta - 0.5) < 0.06


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
@settings(max_examples=40, deadline=None)
def test_h1_monotone_in_u_property(u, v):
    pc = _pc("gumbel", theta=2.0)
    eps = 1e-4
    lo = min(max(u - eps, 1e-6), 1 - 1e-6)
    hi = min(max(u + eps, 1e-6), 1 - 1e-6)
    if lo < hi:
        assert float(pc.h1(hi, v)) >= float(pc.h1(lo, v)) - 1e-9
