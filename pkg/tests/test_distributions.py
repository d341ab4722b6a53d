"""Standardized innovation laws against quadrature and bisection oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from riskgrid import distributions as dist

CASES = [
    ("normal", {}),
    ("student_t", {"nu": 5.0}),
    ("student_t", {"nu": 8.5}),
    ("skew_t", {"nu": 6.0, "xi": 1.5}),
    ("skew_t", {"nu": 9.0, "xi": 0.7}),
    ("ged", {"nu": 1.3}),
    ("ged", {"nu": 2.0}),
]


@pytest.mark.parametrize("name,params", CASES)
def test_density_integrates_to_one(name, params):
    val, err = integrate.quad(lambda z: dist.pdf(name, params, z), -np.inf, np.inf, limit=400)
    assert abs(val - 1.0) < 1e-8


@pytest.mark.parametrize("name,params", CASES)
def test_unit_variance_standardization(name, params):
    mean, _ = integrate.quad(lambda z: z * dist.pdf(name, params, z), -np.inf, np.inf, limit=400)
    var, _ = integrate.quad(
        lambda z: (z - mean) ** 2 * dist.pdf(name, params, z), -np.inf, np.inf, limit=400
    )
    assert abs(mean) < 1e-7
    assert abs(var - 1.0) < 1e-6


@pytest.mark.parametrize("name,params", CASES)
def test_cdf_matches_integrated_pdf(name, params):
    for z in (-2.5, -0.7, 0.0, 0.4, 1.9):
        val, _ = integrate.quad(lambda x: dist.pdf(name, params, x), -np.inf, z, limit=400)
        assert abs(dist.cdf(name, params, z) - val) < 1e-8


@pytest.mark.parametrize("name,params", CASES)
def test_ppf_inverts_cdf(name, params):
    u = np.array([0.001, 0.01, 0.25, 0.5, 0.9, 0.999])
    z = dist.ppf(name, params, u)
    assert np.allclose(dist.cdf(name, params, z), u, atol=1e-9)


def test_student_t_quantile_bisection_oracle():
    # independent oracle: bisect the standardized-t CDF built from scipy
    nu = 5.0
    scale = math.sqrt((nu - 2.0) / nu)

    def cdf(z):
        return stats.t.cdf(z / scale, df=nu)

    oracle = optimize.brentq(lambda z: cdf(z) - 0.975, -50, 50, xtol=1e-12)
    assert abs(float(dist.ppf("student_t", {"nu": nu}, 0.975)) - oracle) < 1e-8


def test_skew_t_symmetric_limit_reduces_to_student_t():
    u = np.linspace(0.01, 0.99, 21)
    a = dist.ppf("skew_t", {"nu": 7.0, "xi": 1.0}, u)
    b = dist.ppf("student_t", {"nu": 7.0}, u)
    assert np.allclose(a, b, atol=1e-9)


def test_normal_median_quantile_is_zero():
    assert abs(float(dist.ppf("normal", {}, 0.5))) < 1e-12


def test_ged_shape_two_is_normal():
    u = np.linspace(0.05, 0.95, 10)
    assert np.allclose(
        dist.ppf("ged", {"nu": 2.0}, u), dist.ppf("normal", {}, u), atol=1e-9
    )


@pytest.mark.parametrize("name,params", CASES)
def test_abs_moment_against_quadrature(name, params):
    val, _ = integrate.quad(
        lambda z: abs(z) * dist.pdf(name, params, z), -np.inf, np.inf, limit=400
    )
    assert abs(dist.abs_moment(name, params) - val) < 5e-7


@pytest.mark.parametrize("name,params", CASES)
@pytest.mark.parametrize("gamma,delta", [(0.0, 2.0), (0.3, 1.0), (-0.2, 1.4), (0.5, 0.8)])
def test_power_asymmetry_moment_against_quadrature(name, params, gamma, delta):
    val, _ = integrate.quad(
        lambda z: (abs(z) - gamma * z) ** delta * dist.pdf(name, params, z),
        -60, 60, limit=400, points=[0.0],
    )
    assert abs(dist.power_asymmetry_moment(name, params, gamma, delta) - val) < 1e-6


def test_normal_tail_mean_matches_closed_form():
    # E[Z | Z <= q_alpha] = -phi(q_alpha) / alpha for the standard normal
    alpha = 0.01
    q = stats.norm.ppf(alpha)
    oracle = -stats.norm.pdf(q) / alpha
    assert abs(dist.tail_mean("normal", {}, alpha) - oracle) < 1e-10


@pytest.mark.parametrize("name,params", CASES)
def test_tail_mean_against_quadrature(name, params):
    alpha = 0.025
    q = float(dist.ppf(name, params, alpha))
    val, _ = integrate.quad(lambda z: z * dist.pdf(name, params, z), -np.inf, q, limit=400)
    assert abs(dist.tail_mean(name, params, alpha) - val / alpha) < 1e-6


@pytest.mark.parametrize("name,params", CASES)
def test_prob_negative_matches_cdf_at_zero(name, params):
    assert abs(dist.prob_negative(name, params) - float(dist.cdf(name, params, 0.0))) < 1e-12


@given(u=st.floats(min_value=1e-6, max_value=1 - 1e-6))
@settings(max_examples=60, deadline=None)
def test_skew_t_ppf_cdf_round_trip_property(u):
    params = {"nu": 6.0, "xi": 1.8}
    z = float(dist.ppf("skew_t", params, u))
    assert abs(float(dist.cdf("skew_t", params, z)) - u) < 1e-8


def test_unknown_name_rejected():
    with pytest.raises(ValueError):
        dist.pdf("cauchy", {}, 0.0)
