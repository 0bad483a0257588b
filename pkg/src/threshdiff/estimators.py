"""Threshold and rate estimators built on the piecewise-constant likelihood.

Threshold estimates are reported as midpoints of the maximizing constancy
interval (leftmost interval on exact ties).  When the truth is supplied the
estimate also carries the horizon-normalized errors T (est - truth), which
is the scale on which these estimators have nondegenerate limits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from . import models
from .errors import BoundaryHit, ConfigError, RegimeStarved
from .likelihood import LogLikCurve, loglik_curve
from .simulate import Path, path_slice

__all__ = [
    "ThresholdEstimate",
    "mle_threshold",
    "bayes_threshold",
    "joint_estimate_tou3",
    "two_stage_estimate",
    "mom_switching",
    "windowed_mle_switching",
    "estimate_to_json",
    "estimate_from_json",
]


@dataclass(frozen=True)
class ThresholdEstimate:
    method: str
    thresholds: tuple[float, ...]
    rates: tuple[float, ...] | None = None
    diagnostics: dict = field(default_factory=dict)
    scaled_errors: tuple[float, ...] | None = None


def _norm_box(box) -> tuple[float, float]:
    try:
        lo, hi = float(box[0]), float(box[1])
    except (TypeError, IndexError, ValueError):
        raise ConfigError(f"a box must be a (lo, hi) pair, got {box!r}")
    if not lo < hi:
        raise ConfigError(f"box must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi


def _norm_boxes(model, box) -> list[tuple[float, float]]:
    k = len(model.thresholds)
    if k == 1 and np.ndim(box[0]) == 0:
        boxes = [_norm_box(box)]
    else:
        boxes = [_norm_box(b) for b in box]
    if len(boxes) != k:
        raise ConfigError(f"need {k} boxes, got {len(boxes)}")
    for (_, b_hi), (a_lo, _) in zip(boxes, boxes[1:]):
        if not b_hi < a_lo:
            raise ConfigError("threshold boxes must be separated in order")
    return boxes


def _scaled(estimates, truth, T):
    if truth is None:
        return None
    t = np.atleast_1d(np.asarray(truth, dtype=float))
    return tuple(T * (np.asarray(estimates) - t))


def mle_threshold(path: Path, model, box, truth=None,
                  time_mask=None) -> ThresholdEstimate:
    """Componentwise likelihood maximizer over the box.

    A component whose curve is constant (no sample in its box) falls back
    to the box midpoint and is flagged flat in the diagnostics.
    """
    boxes = _norm_boxes(model, box)
    ests, intervals, flat = [], [], []
    for j, bj in enumerate(boxes):
        curve = loglik_curve(path, model, j, bj, time_mask=time_mask)
        is_flat = curve.empty or bool(np.all(curve.values == curve.values[0]))
        if is_flat:
            l, r = bj
        else:
            l, r = curve.argmax_interval()
        ests.append(0.5 * (l + r))
        intervals.append((l, r))
        flat.append(is_flat)
    diag = {"intervals": intervals, "flat": flat}
    return ThresholdEstimate(
        "mle", tuple(ests), None, diag,
        _scaled(ests, truth, path.horizon),
    )


def _interval_prior_moments(edges, prior):
    """Mass and first-moment integrals of the prior over each interval."""
    widths = np.diff(edges)
    if prior is None:
        mass = widths
        first = 0.5 * (edges[:-1] + edges[1:]) * widths
        return mass, first
    nodes, weights = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * widths
    theta = mid[:, None] + half[:, None] * nodes[None, :]
    p = np.asarray(prior(theta), dtype=float)
    if np.any(p < 0):
        raise ConfigError("prior must be nonnegative on the box")
    mass = half * (p * weights).sum(axis=1)
    first = half * (p * theta * weights).sum(axis=1)
    return mass, first


def bayes_threshold(path: Path, model, box, prior=None,
                    truth=None) -> ThresholdEstimate:
    """Posterior mean under quadratic loss, componentwise.

    The posterior over each component factorizes on the constancy
    intervals of the likelihood, so the quadrature is exact for a uniform
    prior and Gauss-Legendre accurate for a smooth one.
    """
    boxes = _norm_boxes(model, box)
    ests, lognorms = [], []
    for j, bj in enumerate(boxes):
        curve = loglik_curve(path, model, j, bj)
        edges = curve.interval_edges()
        mass, first = _interval_prior_moments(edges, prior)
        m = float(np.max(curve.values))
        w = np.exp(curve.values - m)
        den = float(np.sum(w * mass))
        num = float(np.sum(w * first))
        ests.append(num / den)
        lognorms.append(m + math.log(den))
    diag = {"log_normalizers": lognorms}
    return ThresholdEstimate(
        "bayes", tuple(ests), None, diag,
        _scaled(ests, truth, path.horizon),
    )


def _regime_sums_sorted(path: Path):
    """Sorted sample values with cumulative x dX and x^2 dt sums."""
    v = path.values
    x, dx = v[:-1], np.diff(v)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cum_xdx = np.concatenate([[0.0], np.cumsum(xs * dx[order])])
    cum_x2dt = np.concatenate([[0.0], np.cumsum(xs * xs)]) * path.dt
    return xs, cum_xdx, cum_x2dt


def joint_estimate_tou3(path: Path, sigma: float, rate_boxes, threshold_box,
                        truth=None) -> ThresholdEstimate:
    """Profile MLE of (rho1, rho2, theta) in the TOU model, known sigma.

    For fixed theta the rates have closed maximizers
    rho_hat_i = -(sum x dX over regime) / (sum x^2 dt over regime), clipped
    to their boxes; the resulting profile is piecewise constant in theta
    and is swept like a one-parameter curve.
    """
    (a1, b1), (a2, b2) = _norm_box(rate_boxes[0]), _norm_box(rate_boxes[1])
    if not (b1 < a2 and a2 > 0):
        raise ConfigError("rate boxes must satisfy b1 < a2 and a2 > 0")
    lo, hi = _norm_box(threshold_box)
    xs, cum_xdx, cum_x2dt = _regime_sums_sorted(path)
    s2 = sigma * sigma

    # candidate cuts: numbers of samples below theta, for theta running over
    # the constancy intervals of the box
    n_lo = int(np.searchsorted(xs, lo, side="right"))
    inside = xs[(xs > lo) & (xs < hi)]
    uniq = np.unique(inside)
    counts = n_lo + np.concatenate([[0], np.searchsorted(inside, uniq,
                                                         side="right")])
    edges = np.concatenate([[lo], uniq, [hi]])

    A1 = cum_xdx[counts]
    B1 = cum_x2dt[counts]
    A2 = cum_xdx[-1] - A1
    B2 = cum_x2dt[-1] - B1
    floor = 1e-8 * path.horizon * max(1.0, float(np.mean(path.values ** 2)))
    ok = (B1 > floor) & (B2 > floor)
    if not np.any(ok):
        raise RegimeStarved("a regime has almost no occupation in the box")
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.clip(-A1 / B1, a1, b1)
        r2 = np.clip(-A2 / B2, a2, b2)
    prof = (-(r1 * A1 + r2 * A2) - 0.5 * (r1 * r1 * B1 + r2 * r2 * B2)) / s2
    prof[~ok] = -np.inf
    i = int(np.argmax(prof))
    theta = 0.5 * (edges[i] + edges[i + 1])
    rates = (float(r1[i]), float(r2[i]))

    diag = {
        "interval": (float(edges[i]), float(edges[i + 1])),
        "profile_max": float(prof[i]),
        "unclipped_rates": (float(-A1[i] / B1[i]), float(-A2[i] / B2[i])),
    }
    scaled = None
    if truth is not None:
        rr1, rr2, th = truth
        root_t = math.sqrt(path.horizon)
        scaled = (root_t * (rates[0] - rr1), root_t * (rates[1] - rr2),
                  path.horizon * (theta - th))
    return ThresholdEstimate("profile_mle", (theta,), rates, diag, scaled)


def _eq_rates(path: Path, theta: float, floor_scale: float):
    """Closed-form regime rates given a threshold: -sum x dX / sum x^2 dt."""
    v = path.values
    x, dx = v[:-1], np.diff(v)
    low = x < theta
    floor = 1e-8 * path.horizon * floor_scale
    out = []
    for mask in (low, ~low):
        num = -float(np.sum(x[mask] * dx[mask]))
        den = float(np.sum(x[mask] * x[mask])) * path.dt
        if den <= floor:
            raise RegimeStarved(
                f"regime occupation {den:.3g} below floor {floor:.3g}")
        out.append(num / den)
    return out[0], out[1]


def two_stage_estimate(path: Path, sigma: float, rate_boxes, threshold_box,
                       truth=None) -> ThresholdEstimate:
    """Threshold and rates from a split-sample scheme.

    Stage 1 estimates the threshold on [0, sqrt(T)] under box-midpoint
    rates (a misspecification small enough to keep the threshold
    consistent when the boxes are narrower than the regime gap).  Stage 2
    recovers the rates on [sqrt(T), T] by the closed form at the stage-1
    threshold; stage 3 re-estimates the threshold there under those rates.
    """
    (a1, b1), (a2, b2) = _norm_box(rate_boxes[0]), _norm_box(rate_boxes[1])
    if not (b1 < a2 and a2 > 0):
        raise ConfigError("rate boxes must satisfy b1 < a2 and a2 > 0")
    lo, hi = _norm_box(threshold_box)
    T = path.horizon
    split = math.sqrt(T)
    if split < 10 * path.dt or T - split < 10 * path.dt:
        raise ConfigError("horizon too short to split at sqrt(T)")
    head = path_slice(path, path.t0, path.t0 + split)
    tail = path_slice(path, path.t0 + split, path.t0 + T)

    mid1, mid2 = 0.5 * (a1 + b1), 0.5 * (a2 + b2)
    pilot = models.TOU(mid1, mid2, sigma, 0.5 * (lo + hi))
    stage1 = mle_threshold(head, pilot, (lo, hi))
    th1 = stage1.thresholds[0]

    floor_scale = max(1.0, float(np.mean(path.values ** 2)))
    r1_raw, r2_raw = _eq_rates(tail, th1, floor_scale)
    r1 = min(max(r1_raw, a1), b1)
    r2 = min(max(r2_raw, a2), b2)

    refit = models.TOU(r1, r2, sigma, th1)
    stage3 = mle_threshold(tail, refit, (lo, hi))
    theta = stage3.thresholds[0]

    diag = {
        "stage1_threshold": th1,
        "stage2_rates_raw": (r1_raw, r2_raw),
        "stage3_interval": stage3.diagnostics["intervals"][0],
    }
    scaled = None
    if truth is not None:
        rr1, rr2, th = truth
        root_t = math.sqrt(T)
        scaled = (root_t * (r1 - rr1), root_t * (r2 - rr2), T * (theta - th))
    return ThresholdEstimate("two_stage", (theta,), (r1, r2), diag, scaled)


def mom_switching(path: Path, truth=None) -> ThresholdEstimate:
    """Moment estimator of the switching threshold: the time average of X
    over the initial [0, sqrt(T)] stretch (the stationary mean equals the
    threshold by symmetry of the switching trend)."""
    T = path.horizon
    m = int(math.floor(math.sqrt(T) / path.dt))
    if m < 1:
        raise ConfigError("horizon too short for the sqrt(T) stretch")
    est = float(np.mean(path.values[:m]))
    scaled = None
    if truth is not None:
        # sqrt(T)-length average converges at the T^(1/4) rate
        scaled = (T ** 0.25 * (est - float(truth)),)
    return ThresholdEstimate("moment", (est,), None, {"stretch": m}, scaled)


def windowed_mle_switching(path: Path, rho: float, sigma: float, box,
                           window: str = "auto",
                           truth=None) -> ThresholdEstimate:
    """Switching-model MLE on [sqrt(T), T] restricted to a localization
    window.

    window="auto" centers the window at the moment estimate from the
    initial stretch with half-width T^(-1/8); window="full" disables the
    restriction (the plain MLE on the same stretch); a (lo, hi) pair is
    used as given.  Sampling intervals whose state lies outside the window
    are excluded from both likelihood integrals.
    """
    lo, hi = _norm_box(box)
    T = path.horizon
    split = math.sqrt(T)
    tail = path_slice(path, path.t0 + split, path.t0 + T)
    pilot = mom_switching(path).thresholds[0]

    if window == "auto":
        w = T ** (-1.0 / 8.0)
        win = (max(lo, pilot - w), min(hi, pilot + w))
        if not win[0] < win[1]:
            # data-driven miss, not a configuration mistake: discardable
            raise BoundaryHit(
                f"auto window around pilot {pilot:.4g} misses the box")
    elif window == "full":
        win = (lo, hi)
    else:
        win = _norm_box(window)

    model = models.SimpleSwitching(rho, sigma, 0.5 * (lo + hi))
    x = tail.values[:-1]
    mask = (x >= win[0]) & (x <= win[1])
    curve = loglik_curve(tail, model, 0, win, time_mask=mask)
    l, r = curve.argmax_interval()
    est = 0.5 * (l + r)

    diag = {"window": win, "pilot": pilot, "interval": (l, r),
            "flat": curve.empty}
    if truth is not None:
        diag["window_miss"] = not (win[0] <= float(truth) <= win[1])
    return ThresholdEstimate(
        "windowed_mle", (est,), None, diag, _scaled([est], truth, T),
    )


def estimate_to_json(est: ThresholdEstimate, fname=None) -> str:
    """Serialize an estimate; diagnostics keep only JSON-able entries."""
    def clean(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, (tuple, list)):
            return [clean(o) for o in obj]
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        return obj

    payload = {
        "method": est.method,
        "thresholds": clean(list(est.thresholds)),
        "rates": clean(list(est.rates)) if est.rates is not None else None,
        "diagnostics": clean(est.diagnostics),
        "scaled_errors": clean(list(est.scaled_errors))
        if est.scaled_errors is not None else None,
    }
    text = json.dumps(payload, indent=2)
    if fname is not None:
        FsPath(fname).write_text(text)
    return text


def estimate_from_json(source) -> ThresholdEstimate:
    """Read back an estimate written by estimate_to_json."""
    p = FsPath(source)
    text = p.read_text() if p.exists() else str(source)
    d = json.loads(text)
    return ThresholdEstimate(
        d["method"], tuple(d["thresholds"]),
        tuple(d["rates"]) if d.get("rates") is not None else None,
        d.get("diagnostics", {}),
        tuple(d["scaled_errors"]) if d.get("scaled_errors") is not None
        else None,
    )
