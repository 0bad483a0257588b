import math

import numpy as np
import pytest
from scipy.special import zeta

from threshdiff import models
from threshdiff.errors import BoundaryHit, ConfigError
from threshdiff.limitlaws import (
    UHAT_SECOND_MOMENT,
    UTILDE_SECOND_MOMENT,
    predicted_error_scale,
    quantile_table,
    read_table,
    sample_brownian_functional,
    sample_uhat_utilde,
    write_table,
)
from threshdiff.simulate import RngStream


@pytest.fixture(scope="module")
def uu_main():
    return sample_uhat_utilde(RngStream(601, 0), 100_000, U=60.0, h=0.01)


def _m2_se(x):
    sq = x * x
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(len(sq)))


def test_field_moments_are_symmetric(uu_main):
    uhat, utilde = uu_main
    for ls in (uhat, utilde):
        se = ls.samples.std(ddof=1) / math.sqrt(len(ls.samples))
        assert abs(ls.samples.mean()) <= 3 * se
        assert np.all(np.isfinite(ls.samples))
        assert np.all(np.abs(ls.samples) <= 60.0)
    assert uhat.tag == "ArgmaxU" and utilde.tag == "BayesU"
    assert uhat.discarded == utilde.discarded >= 0


def test_second_moments_near_known_constants(uu_main):
    # loose bands here; the tight ones run at acceptance scale
    m2_hat, se_hat = _m2_se(uu_main[0].samples)
    m2_til, se_til = _m2_se(uu_main[1].samples)
    assert m2_hat == pytest.approx(UHAT_SECOND_MOMENT, abs=4 * se_hat)
    assert m2_til == pytest.approx(UTILDE_SECOND_MOMENT, abs=4 * se_til)
    assert UTILDE_SECOND_MOMENT == pytest.approx(16 * zeta(3), rel=1e-15)


def test_argmax_and_posterior_mean_are_paired(uu_main):
    # both functionals come from one field per draw, so they are strongly
    # correlated; mispaired streams would decorrelate them
    r = np.corrcoef(uu_main[0].samples, uu_main[1].samples)[0, 1]
    assert r > 0.8


def test_doubling_horizon_changes_nothing(uu_main):
    m2_base, se_base = _m2_se(uu_main[0].samples)
    wide, _ = sample_uhat_utilde(RngStream(602, 0), 30_000, U=120.0, h=0.01)
    m2_wide, se_wide = _m2_se(wide.samples)
    assert abs(m2_wide - m2_base) <= math.hypot(se_base, se_wide)


def test_halving_step_changes_little(uu_main):
    m2_base, se_base = _m2_se(uu_main[0].samples)
    fine, _ = sample_uhat_utilde(RngStream(603, 0), 30_000, U=60.0, h=0.005)
    m2_fine, se_fine = _m2_se(fine.samples)
    assert abs(m2_fine - m2_base) <= 2 * math.hypot(se_base, se_fine)


def test_sampler_determinism_and_rng_forms():
    a, _ = sample_uhat_utilde(RngStream(9, 3), 500, U=40.0, h=0.02)
    b, _ = sample_uhat_utilde(RngStream(9, 3), 500, U=40.0, h=0.02)
    assert np.array_equal(a.samples, b.samples)
    assert a.seed == (9, 3)
    c, _ = sample_uhat_utilde(17, 200, U=40.0, h=0.02)
    d, _ = sample_uhat_utilde(np.random.default_rng(17), 200, U=40.0, h=0.02)
    assert np.array_equal(c.samples, d.samples)
    with pytest.raises(ConfigError):
        sample_uhat_utilde("seed", 10)


def test_boundary_and_config_errors():
    with pytest.raises(BoundaryHit):
        sample_uhat_utilde(RngStream(11, 0), 2000, U=2.0, h=0.05)
    with pytest.raises(ConfigError):
        sample_uhat_utilde(RngStream(11, 0), 10, U=0.05, h=0.05)
    with pytest.raises(ConfigError):
        sample_uhat_utilde(RngStream(11, 0), 10, U=10.0, h=-1.0)
    with pytest.raises(ConfigError):
        sample_brownian_functional("NoSuchTag", RngStream(11, 0), 10)


# --- Brownian functionals ------------------------------------------------------

@pytest.fixture(scope="module")
def w2_draws():
    return sample_brownian_functional("IntW2_01", RngStream(604, 0), 40_000)


@pytest.fixture(scope="module")
def sup_draws():
    return sample_brownian_functional("SupAbsW_01", RngStream(605, 0),
                                      40_000)


def test_int_w2_mean_and_variance(w2_draws):
    x = w2_draws.samples
    assert x.mean() == pytest.approx(0.5, abs=0.01)
    assert x.var(ddof=1) == pytest.approx(1.0 / 3.0, abs=0.02)
    assert np.all(x >= 0)


def test_int_w2_exp_mean():
    x = sample_brownian_functional("IntW2Exp", RngStream(502, 0),
                                   50_000).samples
    assert x.mean() == pytest.approx(1.0, abs=0.02)
    assert np.all(x >= 0)


def _sup_abs_w_cdf(x):
    # P(sup |W| <= x) on [0,1] by the alternating series
    if x <= 0:
        return 0.0
    s = 0.0
    for k in range(60):
        s += ((-1) ** k / (2 * k + 1)
              * math.exp(-((2 * k + 1) ** 2) * math.pi ** 2 / (8 * x * x)))
    return 4.0 / math.pi * s


def test_sup_abs_w_against_series(sup_draws):
    x = np.sort(sup_draws.samples)
    n = len(x)
    for q in (0.5, 0.83, 1.2, 2.0):
        emp = np.searchsorted(x, q, side="right") / n
        truth = _sup_abs_w_cdf(q)
        # grid max understates the sup, so the empirical CDF sits above the
        # exact one by at most the expected overshoot ~0.58 sqrt(h) * density
        assert emp >= truth - 0.004
        assert emp <= truth + 0.025


def test_brownian_sampler_determinism(w2_draws):
    again = sample_brownian_functional("IntW2_01", RngStream(604, 0), 40_000)
    assert np.array_equal(again.samples, w2_draws.samples)


# --- quantile tables -------------------------------------------------------------

ALPHAS = (0.01, 0.05, 0.10, 0.5, 0.9)


@pytest.fixture(scope="module")
def w2_table():
    return quantile_table("IntW2_01", ALPHAS, 20_000, RngStream(606, 0),
                          grid_step=5e-3)


def test_table_monotone_with_ses(w2_table):
    assert np.all(np.diff(w2_table.alphas) > 0)
    assert np.all(np.diff(w2_table.thresholds) < 0)
    assert np.all(w2_table.ses > 0)
    assert w2_table.replicates == 20_000


def test_table_lookup_and_interpolation(w2_table):
    assert w2_table.threshold(0.05) == w2_table.thresholds[1]
    mid = w2_table.threshold(0.07)
    assert w2_table.thresholds[2] < mid < w2_table.thresholds[1]
    with pytest.raises(ConfigError):
        w2_table.threshold(0.001)
    with pytest.raises(ConfigError):
        quantile_table("IntW2_01", [0.0, 0.5], 100, RngStream(1, 0))


def test_argmax_table_median_is_zero():
    tab = quantile_table("ArgmaxU", [0.25, 0.5, 0.75], 20_000,
                         RngStream(607, 0), U=40.0, h=0.02)
    assert abs(tab.threshold(0.5)) <= 0.15
    assert tab.threshold(0.25) > 0 > tab.threshold(0.75)


def test_table_roundtrip(tmp_path, w2_table):
    fn = tmp_path / "IntW2_01.csv"
    write_table(w2_table, fn)
    back = read_table(fn)
    assert back.tag == "IntW2_01"
    assert np.array_equal(back.alphas, w2_table.alphas)
    assert np.allclose(back.thresholds, w2_table.thresholds, rtol=0,
                       atol=1e-16)
    assert back.grid == w2_table.grid
    fn2 = tmp_path / "junk.csv"
    fn2.write_text("alpha,threshold\n0.05,1.0\n")
    with pytest.raises(ConfigError):
        read_table(fn2)


# --- predicted scales ---------------------------------------------------------------

def test_predicted_scale_switching():
    m = models.SimpleSwitching(1.0, 1.0, 2.0)
    mle, bayes = predicted_error_scale(m)
    assert mle == pytest.approx(26.0 / 16.0, rel=1e-12)
    assert bayes == pytest.approx(float(zeta(3)), rel=1e-12)


def test_predicted_scale_relabel_invariance():
    a = models.SimpleThreshold(1.0, 3.0, 1.0, 0.0)
    b = models.SimpleThreshold(3.0, 1.0, 1.0, 0.0)
    assert predicted_error_scale(a) == pytest.approx(
        predicted_error_scale(b), rel=1e-10)
    g = 2 * 1 * 3 * (1 + 3) / 1.0
    assert predicted_error_scale(a)[0] == pytest.approx(26.0 / g**2,
                                                        rel=1e-10)


def test_predicted_scale_damped_variant_propagates():
    m = models.TOU(1.0, 4.0, 1.0, 1.0)
    gen = predicted_error_scale(m)
    damp = predicted_error_scale(m, variant="damped")
    assert damp[0] == pytest.approx(gen[0] * math.exp(2.0), rel=1e-10)
    with pytest.raises(ValueError):
        predicted_error_scale(models.SimpleSwitching(1.0, 1.0, 0.0),
                              variant="damped")
