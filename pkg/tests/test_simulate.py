import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threshdiff import models
from threshdiff.errors import ConfigError, NumericalBlowup
from threshdiff.simulate import (
    Burnin,
    Fixed,
    Path,
    RngStream,
    Stationary,
    empirical_cdf,
    local_time_density,
    path_from_csv,
    path_slice,
    path_to_csv,
    simulate_path,
)

TOU = models.TOU(1.0, 4.0, 1.0, 1.0)
SWITCH = models.SimpleSwitching(1.0, 1.0, 0.0)

# linear ODE x' = -x once sigma is driven to numerical zero
ODE = models.PiecewiseLinearDrift((0.0,), (-1.0, -1.0), (0.0, 0.0), 1e-12)


def test_path_grid_arithmetic():
    p = simulate_path(TOU, 10.0, 0.01, RngStream(1, 0))
    assert len(p.values) == 1001
    assert p.n_steps == 1000
    assert p.horizon == pytest.approx(10.0)
    assert p.times()[0] == 0.0
    assert p.times()[-1] == pytest.approx(10.0)


def test_determinism_and_streams():
    a = simulate_path(TOU, 5.0, 1e-3, RngStream(42, 3), init=Stationary())
    b = simulate_path(TOU, 5.0, 1e-3, RngStream(42, 3), init=Stationary())
    c = simulate_path(TOU, 5.0, 1e-3, RngStream(42, 4), init=Stationary())
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.seed == (42, 3)


def test_draw_order_contract():
    # stationary init consumes one uniform, then exactly n normals
    rng = RngStream(7, 11)
    p = simulate_path(TOU, 2.0, 1e-3, rng, init=Stationary())
    gen = rng.generator()
    x0 = models.invariant_cdf_inverse(TOU, gen.random())
    assert p.values[0] == pytest.approx(x0, abs=1e-12)
    z = gen.standard_normal(1)
    step = x0 + models.trend_eval(TOU, x0) * 1e-3 + np.sqrt(1e-3) * z[0]
    assert p.values[1] == pytest.approx(step, rel=1e-12)


def test_burnin_equals_deferred_fixed_run():
    full = simulate_path(TOU, 3.0, 1e-3, RngStream(5, 0), init=Fixed(0.2))
    burned = simulate_path(TOU, 2.0, 1e-3, RngStream(5, 0),
                           init=Burnin(1.0, 0.2))
    assert np.array_equal(burned.values, full.values[1000:])


def test_ode_limit_endpoint():
    p = simulate_path(ODE, 1.0, 1e-3, RngStream(3, 0), init=Fixed(2.0))
    assert p.values[-1] == pytest.approx(2.0 * np.exp(-1.0), abs=5e-3)


def test_ode_error_halves_with_dt():
    target = 2.0 * np.exp(-1.0)
    errs = []
    for dt in (2e-3, 1e-3):
        p = simulate_path(ODE, 1.0, dt, RngStream(3, 0), init=Fixed(2.0))
        errs.append(abs(p.values[-1] - target))
    assert errs[1] <= 0.6 * errs[0]


def test_blowup_guard():
    with pytest.raises(NumericalBlowup):
        simulate_path(TOU, 1.0, 1e-3, RngStream(1, 0), init=Fixed(2.0),
                      guard=1.5)
    with pytest.raises(ConfigError):
        simulate_path(TOU, 0.0, 1e-3, RngStream(1, 0))


def test_general_model_path_matches_piecewise_fast_path():
    # the callable-trend fallback must produce the same trajectory as the
    # compiled piecewise-linear scheme when the drift coincides
    gt = models.GeneralThreshold(
        (lambda x: -1.0 * x, lambda x: -4.0 * x), (1.0,),
        lambda x: 1.0 + 0.0 * np.asarray(x, float))
    a = simulate_path(gt, 1.0, 1e-3, RngStream(9, 2), init=Fixed(0.5))
    # same increments, same start; TOU boundary convention differs only on a
    # null set the path never hits exactly
    b = simulate_path(TOU, 1.0, 1e-3, RngStream(9, 2), init=Fixed(0.5))
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


# --- occupation estimators ---------------------------------------------------

def test_empirical_cdf_left_point_rule():
    p = Path(np.array([0.0, 1.0, 2.0, 3.0]), dt=1.0)
    assert empirical_cdf(p, -1.0) == 0.0
    assert empirical_cdf(p, 0.5) == pytest.approx(1 / 3)
    assert empirical_cdf(p, 1.0) == pytest.approx(1 / 3)  # strict "below x"
    assert empirical_cdf(p, 2.5) == 1.0   # final state not counted
    assert empirical_cdf(p, 99.0) == 1.0
    xs = np.linspace(-1, 4, 31)
    F = empirical_cdf(p, xs)
    assert np.all(np.diff(F) >= 0)


def test_empirical_cdf_halves_at_switching_threshold():
    p = simulate_path(SWITCH, 2000.0, 1e-3, RngStream(21, 0),
                      init=Stationary())
    assert empirical_cdf(p, 0.0) == pytest.approx(0.5, abs=0.02)


def test_local_time_zero_off_path():
    p = simulate_path(ODE, 1.0, 1e-3, RngStream(3, 0), init=Fixed(2.0))
    # path decays from 2 toward 0.7; x=0.2 is never crossed
    assert local_time_density(p, 0.2) == pytest.approx(0.0, abs=1e-9)


def test_local_time_matches_invariant_density():
    p = simulate_path(SWITCH, 5000.0, 1e-3, RngStream(31, 0),
                      init=Stationary())
    assert local_time_density(p, 0.0) == pytest.approx(1.0, abs=0.05)
    grid = np.linspace(-3.5, 3.5, 29)
    vals = local_time_density(p, grid)
    assert np.trapezoid(vals, grid) == pytest.approx(1.0, abs=0.03)


def test_local_time_identity_vs_kernel():
    p = simulate_path(SWITCH, 2000.0, 1e-3, RngStream(33, 0),
                      init=Stationary())
    grid = np.linspace(-2.0, 2.0, 20)
    ident = local_time_density(p, grid)
    kern = local_time_density(p, grid, bandwidth=0.05, method="kernel")
    # same occupation information; kernel smoothing bias is O(bw^2)
    np.testing.assert_allclose(ident, kern, atol=0.035)
    with pytest.raises(ConfigError):
        local_time_density(p, 0.0, method="kernel")


def test_occupation_histogram_matches_laplace_density():
    p = simulate_path(SWITCH, 5000.0, 0.005, RngStream(906, 0),
                      init=Stationary())
    edges = np.arange(-3.0, 3.0 + 1e-9, 0.2)  # edge at the kink x=0
    hist, _ = np.histogram(p.values[:-1], bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    f = models.invariant_density(SWITCH, centers)
    assert np.max(np.abs(hist - f)) <= 0.02


# --- slicing and serialization ------------------------------------------------

def test_path_slice():
    p = simulate_path(TOU, 4.0, 1e-3, RngStream(2, 0))
    s = path_slice(p, 1.0, 3.0)
    assert s.t0 == pytest.approx(1.0)
    assert s.n_steps == 2000
    assert np.array_equal(s.values, p.values[1000:3001])
    ss = path_slice(s, 2.0, 3.0)
    assert np.array_equal(ss.values, p.values[2000:3001])
    with pytest.raises(ConfigError):
        path_slice(p, 3.0, 5.0)
    with pytest.raises(ConfigError):
        path_slice(p, 2.0, 2.0)


def test_csv_roundtrip(tmp_path):
    p = simulate_path(TOU, 1.0, 1e-3, RngStream(17, 4), init=Stationary())
    fn = tmp_path / "path.csv"
    path_to_csv(p, fn)
    q = path_from_csv(fn)
    assert np.array_equal(q.values, p.values)
    assert q.dt == p.dt and q.t0 == p.t0
    assert q.seed == p.seed and q.model == p.model

    (tmp_path / "path.csv.json").unlink()
    with pytest.raises(ConfigError):
        path_from_csv(fn)


def test_csv_sidecar_mismatch(tmp_path):
    p = simulate_path(TOU, 0.1, 1e-3, RngStream(17, 4))
    fn = tmp_path / "p.csv"
    path_to_csv(p, fn)
    side = tmp_path / "p.csv.json"
    side.write_text(side.read_text().replace('"n_steps": 100',
                                             '"n_steps": 99'))
    with pytest.raises(ConfigError):
        path_from_csv(fn)


@settings(max_examples=20, deadline=None)
@given(T=st.floats(0.05, 3.0), k=st.integers(1, 40))
def test_step_count_rounding(T, k):
    dt = T / k
    p = simulate_path(SWITCH, T, dt, RngStream(1, 0))
    assert p.n_steps == k
    assert p.horizon == pytest.approx(T, rel=1e-9)
