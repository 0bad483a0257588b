"""Goodness-of-fit statistics for an ergodic threshold diffusion null.

The simple-null statistics compare the path to the null trend through the
normalized residual process M_t = int_0^t (dX - S dX... see _inner) whose
null limit is a standard Brownian motion after time rescaling:

    W2 = (1 / T^2) int_0^T M_t^2 dt     -> int_0^1 W(s)^2 ds
    D  = sup_t |M_t| / sqrt(T)          -> sup_{[0,1]} |W(s)|

Composite versions plug in a rate-T threshold estimate, which does not
move the limit law.  The weighted CDF statistic uses the time change given
by the variance function of the occupation CDF error,

    Var sqrt(T) (F_T(x) - F(x)) = 4 (1 - F(x))^2 Psi(x),

so with the exponential weight it converges to int_0^inf W(s)^2 e^{-s} ds.
Psi itself is the two-integral expression implemented by psi_function; the
factor 4 comes from the Poisson-equation variance calculation and is
checked empirically in the tests.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path as FsPath

import numpy as np
from scipy import integrate

from . import models
from .errors import ConfigError, QuadratureFailure
from .estimators import bayes_threshold, mle_threshold
from .limitlaws import QuantileTable
from .simulate import Path

__all__ = [
    "w2_statistic",
    "d_statistic",
    "v2_statistic",
    "psi_function",
    "GofReport",
    "gof_test",
    "composite_test",
    "ks_distance_to_table",
]

_STAT_TABLE = {"w2": "IntW2_01", "d": "SupAbsW_01", "v2": "IntW2Exp"}


def _inner(path: Path, model) -> np.ndarray:
    """Normalized residuals M_i = sum_{l<i} (dX_l - S(X_l) dt) / sigma(X_l)."""
    v = path.values
    x, dx = v[:-1], np.diff(v)
    s = models.trend_eval(model, x)
    sig = models.sigma_eval(model, x)
    steps = (dx - s * path.dt) / sig
    return np.concatenate([[0.0], np.cumsum(steps)])


def w2_statistic(path: Path, model) -> float:
    """Integrated squared residual process, left-point rule, scaled by T^2."""
    m = _inner(path, model)
    T = path.horizon
    return float(np.sum(m[:-1] * m[:-1]) * path.dt / (T * T))


def d_statistic(path: Path, model) -> float:
    """Scaled sup of the residual process over the whole grid."""
    m = _inner(path, model)
    return float(np.max(np.abs(m)) / math.sqrt(path.horizon))


def psi_function(model, x):
    """Time-change integrand of the weighted CDF statistic:

    Psi(x) = int_{-inf}^x F^2 / (sigma^2 f) dy
             + F(x)^2 / (1 - F(x))^2 * int_x^inf (1 - F)^2 / (sigma^2 f) dy.

    Both integrals are evaluated by adaptive quadrature against the cached
    stationary law; Psi is increasing with Psi(-inf) = 0.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    st = models._stationary(model)
    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        a = _psi_left(model, float(xi), st)
        b = _psi_right(model, float(xi), st)
        F = float(st.cdf(xi))
        out[i] = a + F * F / (1.0 - F) ** 2 * b
    return out if np.ndim(x) else float(out[0])


def _quad(fn, a, b, inner_points):
    pts = [p for p in inner_points if a < p < b] or None
    with warnings.catch_warnings():
        # the error estimate is checked explicitly below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, points=pts, limit=400,
                                  epsabs=1e-13, epsrel=1e-10)
    if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise QuadratureFailure(
            f"integral on [{a:g}, {b:g}] unreliable: value {val:g}, "
            f"error estimate {err:g}")
    return val


def _psi_left(model, x, st):
    def f(y):
        F = float(st.cdf(y))
        return F * F / (sigma2(model, y) * max(float(st.density(y)), 1e-300))
    return _quad(f, st.lo, x, model.thresholds) if x > st.lo else 0.0


def _psi_right(model, x, st):
    def f(y):
        F = float(st.cdf(y))
        return (1.0 - F) ** 2 / (sigma2(model, y)
                                 * max(float(st.density(y)), 1e-300))
    return _quad(f, x, st.hi, model.thresholds) if x < st.hi else 0.0


def sigma2(model, y):
    return float(models.sigma_eval(model, y)) ** 2


def _psi_grid_cumulants(model, st, per_seg: int = 8193):
    """Dense-grid cumulative forms of the two Psi integrals.

    Returns (xs, A, B) with A(x) = int_lo^x F^2/(sigma^2 f) and
    B(x) = int_x^hi (1-F)^2/(sigma^2 f).  Simpson sums run per segment
    between thresholds because the integrands kink there.
    """
    edges = [st.lo] + [float(t) for t in model.thresholds
                       if st.lo < t < st.hi] + [st.hi]
    segments = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = np.linspace(lo, hi, per_seg)
        f = np.maximum(np.asarray(st.density(xs), dtype=float), 1e-300)
        F = np.asarray(st.cdf(xs), dtype=float)
        s2 = np.broadcast_to(
            np.asarray(models.sigma_eval(model, xs), dtype=float),
            xs.shape) ** 2
        segments.append((xs, F * F / (s2 * f), (1.0 - F) ** 2 / (s2 * f)))

    # A grows from the left.  B must accumulate from the right: its
    # integrand explodes like 1/f in the lower tail, so total-minus-
    # cumulative would cancel away every digit in the bulk.
    xs_parts, a_parts, b_parts = [], [], []
    a_off = 0.0
    for xs, la, _ in segments:
        a = integrate.cumulative_simpson(la, x=xs, initial=0.0) + a_off
        a_off = a[-1]
        skip = 1 if xs_parts else 0
        xs_parts.append(xs[skip:])
        a_parts.append(a[skip:])
    b_off = 0.0
    for xs, _, rb in reversed(segments):
        u = xs[-1] - xs[::-1]
        b = integrate.cumulative_simpson(rb[::-1], x=u, initial=0.0)[::-1] \
            + b_off
        b_off = b[0]
        b_parts.append(b)
    b_parts.reverse()
    for i in range(1, len(b_parts)):
        b_parts[i] = b_parts[i][1:]
    return (np.concatenate(xs_parts), np.concatenate(a_parts),
            np.concatenate(b_parts))


@lru_cache(maxsize=16)
def _v2_weights(model, n_grid: int):
    """Quantile grid with the exponential-clock weights for v2_statistic.

    Returns (x, q, H) with H(x) = s'(x) exp(-s(x)) / (f(x) (1-F(x))^2) for
    the clock s = 4 Psi, assembled through the analytic derivative
    Psi'(x) = 2 F f B / (1-F)^3 rather than finite differences.  Psi comes
    from dense-grid Simpson cumulants (the adaptive-quadrature route in
    psi_function is too slow to rebuild per plug-in fit).
    """
    st = models._stationary(model)
    q = (np.arange(n_grid) + 0.5) / n_grid
    x = np.asarray(st.cdf_inverse(q), dtype=float)

    xs, A, B = _psi_grid_cumulants(model, st)
    a_q = np.interp(x, xs, A)
    b_q = np.interp(x, xs, B)

    psi = a_q + q * q * b_q / (1.0 - q) ** 2
    clock = 4.0 * psi
    H = np.zeros(n_grid)
    keep = clock < 700.0
    bk = np.maximum(b_q[keep], 1e-300)
    H[keep] = np.exp(math.log(8.0) + np.log(q[keep]) + np.log(bk)
                     - clock[keep] - 5.0 * np.log1p(-q[keep]))
    return x, q, H


def v2_statistic(path: Path, model, n_grid: int = 2000) -> float:
    """Weighted CvM-type distance between the occupation CDF and the null.

    T int H (F_T - F)^2 dF evaluated on a midpoint quantile grid, with the
    weight H chosen so the null limit is int_0^inf W(s)^2 e^{-s} ds.
    """
    x, q, H = _v2_weights(model, n_grid)
    v = path.values[:-1]
    # pos_i = #{grid points <= v_i}, so #{v_i < x_j} = #{i: pos_i <= j}
    pos = np.searchsorted(x, v, side="right")
    counts = np.bincount(pos, minlength=len(x) + 1)
    fhat = np.cumsum(counts)[:-1] / len(v)
    diff = fhat - q
    return float(path.horizon * np.mean(H * diff * diff))


@dataclass(frozen=True)
class GofReport:
    statistic: str
    value: float
    alpha: float
    threshold: float
    reject: bool
    model: str
    estimate: tuple[float, ...] | None = None

    def to_json(self, fname=None) -> str:
        payload = {
            "statistic": self.statistic,
            "value": self.value,
            "alpha": self.alpha,
            "threshold": self.threshold,
            "reject": self.reject,
            "model": self.model,
            "estimate": list(self.estimate) if self.estimate else None,
        }
        text = json.dumps(payload, indent=2)
        if fname is not None:
            FsPath(fname).write_text(text)
        return text


def _stat_value(path, model, statistic):
    if statistic == "w2":
        return w2_statistic(path, model)
    if statistic == "d":
        return d_statistic(path, model)
    if statistic == "v2":
        return v2_statistic(path, model)
    raise ConfigError(f"unknown statistic {statistic!r}")


def table_tag(statistic: str) -> str:
    """Quantile-table tag whose law matches the statistic under the null."""
    try:
        return _STAT_TABLE[statistic]
    except KeyError:
        raise ConfigError(f"unknown statistic {statistic!r}") from None


def _check_table(statistic, table: QuantileTable):
    want = table_tag(statistic)
    if table.tag != want:
        raise ConfigError(
            f"statistic {statistic!r} needs table {want}, got {table.tag}")


def gof_test(path: Path, model, alpha: float, table: QuantileTable,
             statistic: str = "w2") -> GofReport:
    """Simple-null test at level alpha against the tabulated limit law."""
    _check_table(statistic, table)
    val = _stat_value(path, model, statistic)
    thr = table.threshold(alpha)
    return GofReport(statistic, val, alpha, thr, val > thr,
                     models.model_id(model))


def composite_test(path: Path, model, box, alpha: float, table: QuantileTable,
                   statistic: str = "w2", estimator: str = "mle") -> GofReport:
    """Composite-null test: thresholds estimated from the same path.

    The estimates converge at rate T, fast enough that the simple-null
    tables stay valid for the plug-in statistic.
    """
    _check_table(statistic, table)
    if estimator == "mle":
        est = mle_threshold(path, model, box)
    elif estimator == "bayes":
        est = bayes_threshold(path, model, box)
    else:
        raise ConfigError(f"unknown estimator {estimator!r}")
    fitted = models.with_thresholds(model, est.thresholds)
    val = _stat_value(path, fitted, statistic)
    thr = table.threshold(alpha)
    return GofReport(statistic, val, alpha, thr, val > thr,
                     models.model_id(fitted), est.thresholds)


def ks_distance_to_table(samples, table: QuantileTable) -> float:
    """Sup over tabulated rows of |empirical tail - alpha|."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    sf = 1.0 - np.searchsorted(s, table.thresholds, side="right") / n
    return float(np.max(np.abs(sf - table.alphas)))
