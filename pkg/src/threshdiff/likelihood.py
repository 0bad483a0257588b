"""Discretized log-likelihood ratios for threshold drift models.

All integrals use the left-point rule on the sampling grid: the dX integral
is sum g(X_i) (X_{i+1} - X_i) and the dt integral is sum q(X_i) dt, both over
i = 0..n-1.  The reference measure term coming from the diffusion alone is
dropped everywhere, as is the initial-state density, so values are

    ln L = int S(X)/sigma(X)^2 dX - int S(X)^2 / (2 sigma(X)^2) dt

up to those parameter-free terms.  As a function of any one threshold this
is piecewise constant with jumps only where the threshold crosses a sampled
value, which is what the sweep construction exploits.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import models
from .errors import ConfigError, IndexOutOfRange
from .simulate import Path

__all__ = [
    "loglik_tou",
    "loglik_general",
    "loglik_parts",
    "base_loglik",
    "factorized_loglik",
    "loglik_curve",
    "LogLikCurve",
    "curve_to_csv",
]


def _samples(path: Path):
    v = path.values
    return v[:-1], np.diff(v), path.dt


def loglik_tou(path: Path, rho1: float, rho2: float, sigma: float,
               theta: float) -> float:
    """Log-likelihood of the TOU model, regimes {x < theta} / {x >= theta}."""
    x, dx, dt = _samples(path)
    s2 = sigma * sigma
    low = x < theta
    s1x = np.sum(x[low] * dx[low])
    s1t = np.sum(x[low] * x[low]) * dt
    s2x = np.sum(x[~low] * dx[~low])
    s2t = np.sum(x[~low] * x[~low]) * dt
    return float(
        -(rho1 * s1x + rho2 * s2x) / s2
        - (rho1 * rho1 * s1t + rho2 * rho2 * s2t) / (2.0 * s2)
    )


def loglik_parts(path: Path, model, thresholds=None):
    """(dX part, dt part) of the log-likelihood; their sum is the value."""
    x, dx, dt = _samples(path)
    work = model if thresholds is None else models.with_thresholds(
        model, thresholds)
    idx = models.regime_index(work, x)
    trends = models.regime_trends(work)
    sig2 = models.sigma_eval(work, x) ** 2
    part_dx = 0.0
    part_dt = 0.0
    for j, fn in enumerate(trends):
        mask = idx == j
        if not np.any(mask):
            continue
        s = np.asarray(fn(x[mask]), dtype=float)
        w = sig2[mask] if np.ndim(sig2) else sig2
        part_dx += np.sum(s / w * dx[mask])
        part_dt += -np.sum(s * s / (2.0 * w)) * dt
    return float(part_dx), float(part_dt)


def loglik_general(path: Path, model, thresholds=None) -> float:
    """Log-likelihood of any model spec, optionally at replaced thresholds."""
    a, b = loglik_parts(path, model, thresholds)
    return a + b


def base_loglik(path: Path, model) -> float:
    """Log-likelihood with the top band's trend applied to every sample."""
    x, dx, dt = _samples(path)
    s = np.asarray(models.regime_trends(model)[-1](x), dtype=float)
    sig2 = models.sigma_eval(model, x) ** 2
    return float(np.sum(s / sig2 * dx) - np.sum(s * s / (2.0 * sig2)) * dt)


def _component_terms(path: Path, model, j: int):
    """Per-sample jump sizes a_i of component j and the sample values."""
    k = len(model.thresholds)
    if not 0 <= j < k:
        raise IndexOutOfRange(f"threshold index {j} outside 0..{k - 1}")
    x, dx, dt = _samples(path)
    trends = models.regime_trends(model)
    sj = np.asarray(trends[j](x), dtype=float)
    sj1 = np.asarray(trends[j + 1](x), dtype=float)
    sig2 = models.sigma_eval(model, x) ** 2
    a = (sj - sj1) / sig2 * dx - (sj * sj - sj1 * sj1) / (2.0 * sig2) * dt
    return x, a


def factorized_loglik(path: Path, model, j: int, theta_j: float) -> float:
    """Component j of the factorized log-likelihood at candidate theta_j.

    Sums the trend difference of bands j and j+1 over samples with
    X_i <= theta_j.  Adding all components at the model's thresholds to
    base_loglik reproduces loglik_general exactly.
    """
    x, a = _component_terms(path, model, j)
    return float(np.sum(a[x <= theta_j]))


@dataclass(frozen=True)
class LogLikCurve:
    """Piecewise constant likelihood component over a search interval.

    values[i] applies on [breakpoints[i-1], breakpoints[i]) with the box
    edges closing the two outer intervals, so value_at uses right-open
    intervals and the curve has len(breakpoints) + 1 levels.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    box: tuple[float, float]
    component: int
    empty: bool

    def interval_edges(self) -> np.ndarray:
        return np.concatenate([[self.box[0]], self.breakpoints, [self.box[1]]])

    def midpoints(self) -> np.ndarray:
        e = self.interval_edges()
        return 0.5 * (e[:-1] + e[1:])

    def value_at(self, theta) -> np.ndarray:
        inside = (theta >= self.box[0]) & (theta <= self.box[1])
        if not np.all(inside):
            raise ConfigError("theta outside the search box")
        i = np.searchsorted(self.breakpoints, theta, side="right")
        out = self.values[i]
        return out if np.ndim(theta) else float(out)

    def argmax_interval(self) -> tuple[float, float]:
        e = self.interval_edges()
        i = int(np.argmax(self.values))  # leftmost maximizer on ties
        return float(e[i]), float(e[i + 1])


def loglik_curve(path: Path, model, j: int, box, time_mask=None) -> LogLikCurve:
    """Exact likelihood component j as a function of theta_j over `box`.

    Sorts the sampled values once and accumulates the per-sample jumps, so
    the whole curve costs O(n log n).  Samples at identical values are
    merged into a single breakpoint.  time_mask, when given, restricts the
    sums to selected sampling intervals (used by windowed estimators).
    """
    lo, hi = float(box[0]), float(box[1])
    if not lo < hi:
        raise ConfigError(f"empty search box ({lo}, {hi})")
    x, a = _component_terms(path, model, j)
    if time_mask is not None:
        if len(time_mask) != len(x):
            raise ConfigError("time_mask must have one entry per interval")
        x, a = x[time_mask], a[time_mask]
    c0 = float(np.sum(a[x <= lo]))
    inside = (x > lo) & (x < hi)
    xi, ai = x[inside], a[inside]
    if xi.size == 0:
        return LogLikCurve(np.empty(0), np.array([c0]), (lo, hi), j, True)
    order = np.argsort(xi, kind="stable")
    xs, asrt = xi[order], ai[order]
    uniq, start = np.unique(xs, return_index=True)
    sums = np.add.reduceat(asrt, start)
    vals = c0 + np.concatenate([[0.0], np.cumsum(sums)])
    return LogLikCurve(uniq, vals, (lo, hi), j, False)


def curve_to_csv(curve: LogLikCurve, fname) -> None:
    """Write `theta,loglik` rows, one per constancy interval (midpoints)."""
    data = np.column_stack([curve.midpoints(), curve.values])
    np.savetxt(FsPath(fname), data, fmt="%.17g", delimiter=",",
               header="theta,loglik", comments="")
