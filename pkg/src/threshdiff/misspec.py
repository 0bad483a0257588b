"""Behavior of the threshold MLE when the observed trend is contaminated.

The observations come from dX = (S(theta0, X) + h(X)) dt + sigma dW with S
the TOU trend, while estimation fits the clean TOU family.  The pseudo-true
threshold minimizes

    K(theta) = int (S(theta, x) - S(theta0, x) - h(x))^2 f_h(x) dx

with f_h the contaminated stationary density.  The smallness condition on
the contamination,

    |h(y)| < (y / 2) (rho2 - rho1)  for all y in (alpha, beta),

forces argmin K = theta0, so the MLE stays consistent; these routines
require rho2 > rho1 (see mirror_tou for the relabeling reflection).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import models
from .errors import ConfigError, ConventionViolation
from .estimators import mle_threshold
from .simulate import RngStream, Stationary, simulate_path

__all__ = [
    "Contamination",
    "contamination_from_csv",
    "mirror_tou",
    "contaminated_model",
    "contaminated_density",
    "condition7_check",
    "Condition7Result",
    "kl_profile",
    "KLProfile",
    "kl_derivative",
    "misspec_experiment",
    "MisspecReport",
]


@dataclass(frozen=True)
class Contamination:
    """Additive trend perturbation h(x).

    Piecewise linear contaminations carry (breakpoints, slopes, intercepts)
    with the band at a breakpoint taken from above, matching the two-regime
    convention; those lower into exact piecewise-linear contaminated
    models.  A bare callable is also accepted but only supports the slower
    general-model machinery.
    """

    tag: str
    segments: tuple | None = None
    fn: Callable | None = None

    def __post_init__(self):
        if (self.segments is None) == (self.fn is None):
            raise ConfigError("give exactly one of segments or fn")
        if self.segments is not None:
            bps, slopes, icepts = self.segments
            bps = tuple(float(b) for b in bps)
            slopes = tuple(float(s) for s in slopes)
            icepts = tuple(float(c) for c in icepts)
            if len(slopes) != len(bps) + 1 or len(icepts) != len(slopes):
                raise ConfigError("segments must be (k bps, k+1 slopes, "
                                  "k+1 intercepts)")
            if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
                raise ConfigError("contamination breakpoints must increase")
            object.__setattr__(self, "segments", (bps, slopes, icepts))

    def __call__(self, x):
        if self.fn is not None:
            out = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
            return out if np.ndim(x) else float(out)
        bps, slopes, icepts = self.segments
        xf = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(bps), xf, side="right")
        a = np.asarray(slopes)[idx]
        b = np.asarray(icepts)[idx]
        out = a * xf + b
        return out if np.ndim(x) else float(out)

    @staticmethod
    def linear(c: float) -> "Contamination":
        """h(x) = c x everywhere."""
        return Contamination(f"linear({c:g})", ((), (c,), (0.0,)))

    @staticmethod
    def banded_linear(c: float, lo: float, hi: float) -> "Contamination":
        """h(x) = c x on [lo, hi), zero outside."""
        return Contamination(
            f"banded_linear({c:g},{lo:g},{hi:g})",
            ((lo, hi), (0.0, c, 0.0), (0.0, 0.0, 0.0)),
        )

    @staticmethod
    def two_regime_linear(c1: float, c2: float, split: float) -> "Contamination":
        """h(x) = c1 x below the split, c2 x from it on."""
        return Contamination(
            f"two_regime_linear({c1:g},{c2:g},{split:g})",
            ((split,), (c1, c2), (0.0, 0.0)),
        )

    @staticmethod
    def from_table(xs, hs, tag: str = "table") -> "Contamination":
        """Piecewise linear interpolation of (x, h) knots, zero outside."""
        xs = np.asarray(xs, dtype=float)
        hs = np.asarray(hs, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or len(xs) != len(hs):
            raise ConfigError("need at least two aligned knots")
        if np.any(np.diff(xs) <= 0):
            raise ConfigError("knot locations must increase")
        slopes = [0.0]
        icepts = [0.0]
        for x0, x1, h0, h1 in zip(xs[:-1], xs[1:], hs[:-1], hs[1:]):
            a = (h1 - h0) / (x1 - x0)
            slopes.append(a)
            icepts.append(h0 - a * x0)
        slopes.append(0.0)
        icepts.append(0.0)
        return Contamination(tag, (tuple(xs), tuple(slopes), tuple(icepts)))


def contamination_from_csv(fname, tag: str | None = None) -> Contamination:
    """Load `x,h` rows as a tabulated contamination."""
    data = np.loadtxt(fname, delimiter=",", skiprows=1, ndmin=2)
    return Contamination.from_table(data[:, 0], data[:, 1],
                                    tag or f"table({fname})")


def _require_ordered(model: models.TOU) -> None:
    if not isinstance(model, models.TOU):
        raise ConfigError("misspecification analysis takes a TOU base model")
    if not model.rho2 > model.rho1:
        raise ConventionViolation(
            "these results assume rho2 > rho1; reflect the state space "
            "with mirror_tou to relabel")


def mirror_tou(model: models.TOU) -> models.TOU:
    """Reflection x -> -x, which swaps the regime rates and negates theta."""
    return models.TOU(model.rho2, model.rho1, model.sigma, -model.theta)


def contaminated_model(base: models.TOU, h: Contamination):
    """Model with trend S(theta0, x) + h(x).

    Piecewise linear contaminations merge exactly with the TOU trend; a
    callable contamination produces a general model whose stationary
    machinery is grid based.  Raises NonErgodicModel when h destroys the
    inward pull at either end.
    """
    _require_ordered(base)
    if h.segments is not None:
        bps_h, sl_h, ic_h = h.segments
        bps = np.unique(np.concatenate([[base.theta], bps_h]))
        slopes, icepts = [], []
        for band_lo in np.concatenate([[-np.inf], bps]):
            probe = band_lo  # trend on [band_lo, next): evaluate from above
            base_rate = -base.rho1 if (probe < base.theta) else -base.rho2
            if band_lo == -np.inf:
                base_rate = -base.rho1
                j = 0
            else:
                j = int(np.searchsorted(np.asarray(bps_h), probe,
                                        side="right"))
            slopes.append(base_rate + sl_h[j])
            icepts.append(ic_h[j])
        return models.PiecewiseLinearDrift(
            tuple(bps), tuple(slopes), tuple(icepts), base.sigma,
            boundary="upper")
    trends = (
        lambda x: -base.rho1 * np.asarray(x, float) + h(x),
        lambda x: -base.rho2 * np.asarray(x, float) + h(x),
    )
    sig = float(base.sigma)
    return models.GeneralThreshold(
        trends, (base.theta,), lambda x: np.full_like(
            np.asarray(x, dtype=float), sig))


def contaminated_density(base: models.TOU, h: Contamination, x):
    """Stationary density of the contaminated dynamics."""
    return models.invariant_density(contaminated_model(base, h), x)


@dataclass(frozen=True)
class Condition7Result:
    ok: bool
    margin: float
    worst_y: float


def condition7_check(h: Contamination, rho1: float, rho2: float, box,
                     n_grid: int = 10001) -> Condition7Result:
    """Check |h(y)| < (y/2)(rho2 - rho1) strictly on the box grid.

    The box must sit in the positive half line (0 < alpha < beta); the
    margin is min over the grid of the slack, negative when violated.
    """
    if not rho2 > rho1:
        raise ConventionViolation("condition requires rho2 > rho1")
    lo, hi = float(box[0]), float(box[1])
    if not 0 < lo < hi:
        raise ConfigError("box must satisfy 0 < alpha < beta")
    y = np.linspace(lo, hi, n_grid)
    slack = 0.5 * y * (rho2 - rho1) - np.abs(h(y))
    i = int(np.argmin(slack))
    return Condition7Result(bool(slack[i] > 0), float(slack[i]), float(y[i]))


@dataclass(frozen=True)
class KLProfile:
    thetas: np.ndarray
    values: np.ndarray

    @property
    def argmin(self) -> float:
        return float(self.thetas[int(np.argmin(self.values))])


def _branch_quad(fn, a, b, inner_points):
    pts = [p for p in inner_points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, b, points=pts, limit=400,
                                epsabs=1e-12, epsrel=1e-10)
    return val


def kl_profile(base: models.TOU, h: Contamination, grid) -> KLProfile:
    """Trend mismatch K(theta) on a grid of candidate thresholds.

    K(theta) = int (S(theta, x) - S(theta0, x) - h(x))^2 f_h(x) dx, built
    incrementally from K(theta0) = int h^2 f_h by branch integrals over the
    region between theta and theta0.
    """
    _require_ordered(base)
    grid = np.sort(np.asarray(grid, dtype=float))
    cm = contaminated_model(base, h)
    st = models._stationary(cm)
    dens = lambda x: float(st.density(x))
    theta0 = base.theta
    drho = base.rho2 - base.rho1
    pts = cm.thresholds

    k0 = _branch_quad(lambda x: h(x) ** 2 * dens(x), st.lo, st.hi, pts)

    def up_int(x):   # theta above theta0: fitted regime 1 where truth has 2
        return ((drho * x - h(x)) ** 2 - h(x) ** 2) * dens(x)

    def dn_int(x):   # theta below theta0: fitted regime 2 where truth has 1
        return ((-drho * x - h(x)) ** 2 - h(x) ** 2) * dens(x)

    vals = np.empty_like(grid)
    above = grid > theta0
    prev, acc = theta0, k0
    for i in np.nonzero(above)[0]:
        acc += _branch_quad(up_int, prev, grid[i], pts)
        prev = grid[i]
        vals[i] = acc
    prev, acc = theta0, k0
    for i in np.nonzero(~above)[0][::-1]:
        acc += _branch_quad(dn_int, grid[i], prev, pts)
        prev = grid[i]
        vals[i] = acc
    return KLProfile(grid, vals)


def kl_derivative(base: models.TOU, h: Contamination, theta: float) -> float:
    """One-sided derivative of K at theta (right branch for theta >= theta0):

    dK/dtheta = ((rho1 - rho2)^2 theta^2
                 + 2 (rho1 - rho2) theta h(theta)) f_h(theta0, theta),
    negated and mirrored for the lower branch.
    """
    _require_ordered(base)
    drho = base.rho1 - base.rho2
    fh = contaminated_density(base, h, theta)
    hv = float(h(theta))
    if theta >= base.theta:
        return (drho * drho * theta * theta + 2.0 * drho * theta * hv) * fh
    return -(drho * drho * theta * theta - 2.0 * drho * theta * hv) * fh


@dataclass(frozen=True)
class MisspecReport:
    horizons: tuple[float, ...]
    medians: tuple[float, ...]
    estimates: dict = field(repr=False)
    kl: KLProfile
    condition7: Condition7Result
    failures: int


def misspec_experiment(base: models.TOU, h: Contamination, box, horizons,
                       replicates: int, rng: RngStream, dt: float = 1e-3,
                       kl_grid: int = 241) -> MisspecReport:
    """Fit the clean TOU family to contaminated paths over several horizons.

    Reports the per-horizon medians of the threshold MLE next to the
    argmin of the population mismatch K and the smallness-condition check.
    """
    _require_ordered(base)
    if not isinstance(rng, RngStream):
        raise ConfigError("misspec_experiment needs a seeded RngStream")
    lo, hi = float(box[0]), float(box[1])
    cm = contaminated_model(base, h)
    profile = kl_profile(base, h, np.linspace(lo, hi, kl_grid))
    cond = condition7_check(h, base.rho1, base.rho2, (lo, hi))

    estimates = {}
    medians = []
    failures = 0
    stream = 0
    for T in horizons:
        vals = np.empty(replicates)
        for r in range(replicates):
            stream += 1
            try:
                path = simulate_path(cm, T, dt, rng.child(stream),
                                     init=Stationary())
                est = mle_threshold(path, base, (lo, hi))
                vals[r] = est.thresholds[0]
            except Exception:
                vals[r] = np.nan
                failures += 1
        estimates[float(T)] = vals
        medians.append(float(np.nanmedian(vals)))
    return MisspecReport(tuple(float(t) for t in horizons), tuple(medians),
                         estimates, profile, cond, failures)
