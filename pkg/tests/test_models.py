import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from threshdiff import models
from threshdiff.errors import (
    ConfigError,
    DegenerateSigma,
    IndexOutOfRange,
    InvalidThresholdOrder,
    NonErgodicModel,
)

TOU114 = models.TOU(1.0, 4.0, 1.0, 1.0)
SWITCH = models.SimpleSwitching(1.0, 1.0, 0.0)
MTOU = models.MultiThresholdOU((3.0, 1.0, 3.0), (-1.0, 1.0), 1.0)


# --- construction -----------------------------------------------------------

def test_validation_errors():
    with pytest.raises(DegenerateSigma):
        models.TOU(1.0, 2.0, 0.0, 1.0)
    with pytest.raises(DegenerateSigma):
        models.SimpleSwitching(1.0, -1.0, 0.0)
    with pytest.raises(NonErgodicModel):
        models.TOU(-1.0, 2.0, 1.0, 1.0)
    with pytest.raises(NonErgodicModel):
        models.SimpleThreshold(1.0, 0.0, 1.0, 0.5)
    with pytest.raises(InvalidThresholdOrder):
        models.MultiThresholdOU((1.0, 2.0, 1.0), (1.0, -1.0), 1.0)
    with pytest.raises(ConfigError):
        models.MultiThresholdOU((1.0, 2.0), (-1.0, 1.0), 1.0)
    with pytest.raises(ConfigError):
        # equal adjacent rates make the threshold between them meaningless
        models.MultiThresholdOU((2.0, 2.0, 1.0), (-1.0, 1.0), 1.0)
    with pytest.raises(NonErgodicModel):
        models.PiecewiseLinearDrift((0.0,), (1.0, -1.0), (0.0, 0.0), 1.0)
    with pytest.raises(NonErgodicModel):
        models.GeneralThreshold((lambda x: x, lambda x: -x), (0.0,),
                                lambda x: 1.0 + 0.0 * x)


# --- trend evaluation -------------------------------------------------------

def test_trend_eval_two_regime_boundary():
    m = models.TOU(1.0, 2.0, 1.0, 1.0)
    assert models.trend_eval(m, 0.5) == -0.5
    # x = theta belongs to the upper regime for two-regime models
    assert models.trend_eval(m, 1.0) == -2.0
    assert models.trend_eval(SWITCH, 0.3) == -1.0
    assert models.trend_eval(SWITCH, -0.3) == 1.0


def test_trend_eval_multi_band_boundary():
    # bands are (theta_{l-1}, theta_l]: each threshold belongs to its left band
    assert models.trend_eval(MTOU, -1.0) == 3.0
    assert models.trend_eval(MTOU, -0.999) == pytest.approx(0.999)
    assert models.trend_eval(MTOU, 1.0) == -1.0
    assert models.trend_eval(MTOU, 1.001) == pytest.approx(-3.003)


def test_trend_eval_vector_matches_scalar():
    xs = np.linspace(-3, 3, 41)
    for m in (TOU114, SWITCH, MTOU):
        vec = models.trend_eval(m, xs)
        assert vec.tolist() == [models.trend_eval(m, float(x)) for x in xs]


def test_regime_index_agrees_with_trend_eval():
    trends = models.regime_trends(MTOU)
    for x in (-2.0, -1.0, -0.5, 1.0, 1.5):
        j = models.regime_index(MTOU, x)
        assert models.trend_eval(MTOU, x) == float(trends[j](x))


def test_equal_slopes_collapse_to_plain_ou():
    # the band structure must be invisible when every regime has the same
    # drift; MultiThresholdOU forbids equal adjacent rates, so the check
    # runs on the two variants that allow duplicates
    pl = models.PiecewiseLinearDrift((-1.0, 1.0), (-2.0, -2.0, -2.0),
                                     (0.0, 0.0, 0.0), 1.0)
    gt = models.GeneralThreshold(
        tuple(lambda x: -2.0 * np.asarray(x, float) for _ in range(3)),
        (-1.0, 1.0), lambda x: np.ones_like(np.asarray(x, float)))
    xs = np.linspace(-4, 4, 101)
    np.testing.assert_allclose(models.trend_eval(pl, xs), -2.0 * xs, rtol=0,
                               atol=0)
    np.testing.assert_allclose(models.trend_eval(gt, xs), -2.0 * xs, rtol=0,
                               atol=0)


# --- invariant law ----------------------------------------------------------

def test_switching_density_closed_form():
    # Laplace law rho/sigma^2 * exp(-2 rho |x - theta| / sigma^2)
    m = models.SimpleSwitching(1.3, 0.9, 0.4)
    xs = np.linspace(-4, 5, 81)
    want = (m.rho / m.sigma**2
            * np.exp(-2 * m.rho * np.abs(xs - m.theta) / m.sigma**2))
    np.testing.assert_allclose(models.invariant_density(m, xs), want,
                               rtol=1e-8)
    assert models.invariant_density(SWITCH, 0.0) == pytest.approx(1.0,
                                                                  rel=1e-8)


def test_simple_threshold_normalizer():
    # G = sigma^2 (rho1 + rho2) / (2 rho1 rho2) and f(theta) = 1/G
    for r1, r2, s, th in [(1.0, 2.0, 1.0, 0.0), (0.7, 3.1, 1.4, -0.8)]:
        m = models.SimpleThreshold(r1, r2, s, th)
        g = s**2 * (r1 + r2) / (2 * r1 * r2)
        assert models.invariant_density(m, th) == pytest.approx(1 / g,
                                                                rel=1e-8)


@pytest.mark.parametrize("model", [
    TOU114,
    models.TOU(2.0, 0.5, 1.3, -0.7),
    models.SimpleThreshold(1.0, 2.0, 1.0, 0.3),
    SWITCH,
    MTOU,
    models.PiecewiseLinearDrift((0.0, 1.0), (-1.0, -2.0, -1.0),
                                (0.5, 1.0, -0.5), 0.8),
    models.GeneralThreshold(
        (lambda x: -np.asarray(x, float) ** 3, lambda x: -2.0 * np.asarray(x, float)),
        (0.5,), lambda x: 1.0 + 0.1 * np.tanh(np.asarray(x, float))),
])
def test_density_normalizes(model):
    val, err = integrate.quad(lambda x: models.invariant_density(model, x),
                              -30, 30, limit=400,
                              points=list(model.thresholds))
    assert val == pytest.approx(1.0, abs=1e-7)


def test_tou_density_solves_stationary_balance():
    # zero-flux check S(x) f(x) = (sigma^2 / 2) f'(x), away from theta
    m = models.TOU(1.5, 0.8, 1.1, 0.6)
    for x in (-1.7, -0.2, 0.3, 1.4, 2.5):
        eps = 1e-5
        fprime = (models.invariant_density(m, x + eps)
                  - models.invariant_density(m, x - eps)) / (2 * eps)
        lhs = models.trend_eval(m, x) * models.invariant_density(m, x)
        assert lhs == pytest.approx(m.sigma**2 / 2 * fprime, rel=1e-5)


def test_density_continuous_at_thresholds():
    for m in (TOU114, MTOU):
        for th in m.thresholds:
            lo = models.invariant_density(m, th - 1e-9)
            hi = models.invariant_density(m, th + 1e-9)
            assert lo == pytest.approx(hi, rel=1e-6)


def test_cdf_properties():
    xs = np.linspace(-6, 6, 201)
    for m in (TOU114, SWITCH, MTOU):
        F = models.invariant_cdf(m, xs)
        assert np.all(np.diff(F) >= 0)
        assert F[0] < 1e-4 and F[-1] > 1 - 1e-4
        # quadrature cross-check at a few interior points
        for x in (-1.2, 0.0, 0.9):
            val, _ = integrate.quad(
                lambda y: models.invariant_density(m, y), -30, x,
                limit=400, points=[t for t in m.thresholds if t < x])
            assert models.invariant_cdf(m, x) == pytest.approx(val, abs=1e-6)


def test_cdf_inverse_roundtrip():
    qs = np.linspace(0.01, 0.99, 25)
    for m in (TOU114, SWITCH, MTOU):
        x = models.invariant_cdf_inverse(m, qs)
        np.testing.assert_allclose(models.invariant_cdf(m, x), qs, atol=1e-6)


def test_stationary_moment_switching():
    m = models.SimpleSwitching(1.2, 1.1, 2.0)
    b = m.sigma**2 / (2 * m.rho)   # Laplace scale
    assert models.stationary_moment(m, 1) == pytest.approx(m.theta, abs=1e-8)
    assert (models.stationary_moment(m, 2) - m.theta**2
            == pytest.approx(2 * b**2, rel=1e-7))


# --- identification weights -------------------------------------------------

def test_gamma_sq_closed_forms():
    m1 = models.SimpleThreshold(1.0, 2.0, 1.0, 0.4)
    assert models.gamma_sq(m1) == pytest.approx(12.0, rel=1e-10)
    m2 = models.SimpleSwitching(1.0, 1.0, 0.0)
    assert models.gamma_sq(m2) == pytest.approx(4.0, rel=1e-10)
    # closed forms 2 rho1 rho2 (rho1 + rho2) / sigma^4 and 4 rho^3 / sigma^4
    m3 = models.SimpleThreshold(0.8, 2.5, 1.3, -1.0)
    want = 2 * 0.8 * 2.5 * 3.3 / 1.3**4
    assert models.gamma_sq(m3) == pytest.approx(want, rel=1e-10)
    m4 = models.SimpleSwitching(1.7, 0.9, 3.0)
    assert models.gamma_sq(m4) == pytest.approx(4 * 1.7**3 / 0.9**4,
                                                rel=1e-10)


def test_gamma_sq_relabel_symmetry():
    a = models.SimpleThreshold(0.8, 2.5, 1.1, 0.3)
    b = models.SimpleThreshold(2.5, 0.8, 1.1, 0.3)
    assert models.gamma_sq(a) == pytest.approx(models.gamma_sq(b), rel=1e-12)


def _tou_density_oracle(m, x):
    # direct quadrature of exp(-rho(x) (x^2 - theta^2) / sigma^2); kept
    # independent of the package's stationary-law machinery
    def phi(y):
        rho = m.rho1 if y < m.theta else m.rho2
        return math.exp(-rho * (y * y - m.theta**2) / m.sigma**2)
    g, _ = integrate.quad(phi, -25, 25, limit=300, points=[m.theta])
    return phi(x) / g


def test_gamma_sq_tou_general_formula():
    for m in (TOU114, models.TOU(2.0, 0.7, 1.2, -0.9)):
        jump = (m.rho1 - m.rho2) * m.theta
        want = jump**2 / m.sigma**2 * _tou_density_oracle(m, m.theta)
        assert models.gamma_sq(m) == pytest.approx(want, rel=1e-8)
    assert models.gamma_sq(TOU114) == pytest.approx(1.977039, rel=1e-5)


def test_gamma_sq_damped_variant():
    m = TOU114
    want = models.gamma_sq(m) * math.exp(-m.rho1**2 * m.theta**2 / m.sigma**2)
    assert models.gamma_sq(m, variant="damped") == pytest.approx(want,
                                                                 rel=1e-12)
    with pytest.raises(ValueError):
        models.gamma_sq(SWITCH, variant="damped")
    with pytest.raises(IndexOutOfRange):
        models.gamma_sq(m, j=1)


def test_gamma_sq_mtou_components():
    def f(x):
        return models.invariant_density(MTOU, x)
    for j, th in enumerate(MTOU.thresholds):
        jump = (-MTOU.rates[j + 1] - -MTOU.rates[j]) * th
        assert models.gamma_sq(MTOU, j) == pytest.approx(
            jump**2 / MTOU.sigma**2 * f(th), rel=1e-9)
    # symmetric model: both components carry the same weight
    assert models.gamma_sq(MTOU, 0) == pytest.approx(models.gamma_sq(MTOU, 1),
                                                     rel=1e-9)


def test_rate_error_variance_against_quadrature():
    m = models.TOU(1.0, 3.0, 1.0, 0.7)
    lo, _ = integrate.quad(lambda x: x * x * models.invariant_density(m, x),
                           -25, m.theta, limit=300)
    hi, _ = integrate.quad(lambda x: x * x * models.invariant_density(m, x),
                           m.theta, 25, limit=300)
    assert models.rate_error_variance(m, 0) == pytest.approx(m.sigma**2 / lo,
                                                             rel=1e-7)
    assert models.rate_error_variance(m, 1) == pytest.approx(m.sigma**2 / hi,
                                                             rel=1e-7)
    with pytest.raises(IndexOutOfRange):
        models.rate_error_variance(m, 2)
    with pytest.raises(TypeError):
        models.rate_error_variance(SWITCH, 0)


# --- plumbing ----------------------------------------------------------------

def test_with_thresholds():
    m = models.with_thresholds(TOU114, (0.5,))
    assert m.theta == 0.5 and m.rho2 == 4.0
    m2 = models.with_thresholds(MTOU, (-0.5, 0.5))
    assert m2.thresholds == (-0.5, 0.5)
    with pytest.raises(InvalidThresholdOrder):
        models.with_thresholds(TOU114, (0.5, 1.5))


def test_dict_roundtrip():
    for m in (TOU114, SWITCH, MTOU,
              models.SimpleThreshold(1.0, 2.0, 1.0, 0.3),
              models.PiecewiseLinearDrift((0.0,), (-1.0, -2.0), (0.1, 0.2),
                                          1.0, boundary="upper")):
        assert models.model_from_dict(models.model_to_dict(m)) == m
    with pytest.raises(ConfigError):
        models.model_from_dict({"kind": "nope"})
    gt = models.GeneralThreshold((lambda x: -x, lambda x: -2 * x), (0.0,),
                                 lambda x: 1.0)
    with pytest.raises(ConfigError):
        models.model_to_dict(gt)


@settings(max_examples=25, deadline=None)
@given(
    r1=st.floats(0.2, 3.0),
    r2=st.floats(0.2, 3.0),
    sigma=st.floats(0.5, 2.0),
    theta=st.floats(-1.5, 1.5),
)
def test_two_regime_invariant_law_properties(r1, r2, sigma, theta):
    m = models.TOU(r1, r2, sigma, theta)
    assert models.stationary_moment(m, 0) == pytest.approx(1.0, abs=1e-7)
    x = models.invariant_cdf_inverse(m, 0.37)
    assert models.invariant_cdf(m, x) == pytest.approx(0.37, abs=1e-6)
    assert models.invariant_density(m, theta) > 0
