"""Model specifications for scalar diffusions with threshold drift.

All models describe dX_t = S(X_t) dt + sigma(X_t) dW_t where the trend S is
defined bandwise between ordered thresholds.  Two boundary conventions are
used and kept consistent with the simulator and the likelihood:

* two-regime variants put x = theta into the upper regime ({x < theta} vs
  {x >= theta});
* multi-threshold variants use bands (theta_{j-1}, theta_j], so x = theta_j
  stays in band j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import (
    ConfigError,
    DegenerateSigma,
    IndexOutOfRange,
    InvalidThresholdOrder,
    NonErgodicModel,
)

__all__ = [
    "TOU",
    "SimpleThreshold",
    "SimpleSwitching",
    "MultiThresholdOU",
    "GeneralThreshold",
    "PiecewiseLinearDrift",
    "ModelSpec",
    "regime_index",
    "trend_eval",
    "sigma_eval",
    "regime_trends",
    "drift_segments",
    "invariant_density",
    "invariant_cdf",
    "invariant_cdf_inverse",
    "stationary_moment",
    "gamma_sq",
    "rate_error_variance",
    "with_thresholds",
    "model_to_dict",
    "model_from_dict",
    "model_id",
]

# Left tail of exp(phi) is chopped where it sits this far (in log units) below
# the mode; the discarded mass is < 1e-20 of the total for every model here.
_LOG_CUTOFF = 60.0


def _check_sigma_const(sigma: float) -> None:
    if not (np.isfinite(sigma) and sigma > 0):
        raise DegenerateSigma(f"sigma must be a positive number, got {sigma!r}")


def _check_thresholds(thresholds: Sequence[float]) -> None:
    arr = np.asarray(thresholds, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidThresholdOrder("need at least one threshold")
    if not np.all(np.isfinite(arr)):
        raise InvalidThresholdOrder("thresholds must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise InvalidThresholdOrder(f"thresholds must be strictly increasing: {arr}")


def _check_pl_ergodic(slopes: Sequence[float], icepts: Sequence[float]) -> None:
    a0, b0 = slopes[0], icepts[0]
    ak, bk = slopes[-1], icepts[-1]
    if not (a0 < 0 or (a0 == 0 and b0 > 0)):
        raise NonErgodicModel("drift does not pull right on the left tail")
    if not (ak < 0 or (ak == 0 and bk < 0)):
        raise NonErgodicModel("drift does not pull left on the right tail")


@dataclass(frozen=True)
class TOU:
    """Threshold Ornstein-Uhlenbeck: trend -rho1*x below theta, -rho2*x above."""

    rho1: float
    rho2: float
    sigma: float
    theta: float

    def __post_init__(self):
        _check_sigma_const(self.sigma)
        _check_thresholds((self.theta,))
        if self.rho1 <= 0 or self.rho2 <= 0:
            raise NonErgodicModel("TOU needs rho1 > 0 and rho2 > 0")

    boundary = "upper"

    @property
    def thresholds(self) -> tuple[float, ...]:
        return (self.theta,)


@dataclass(frozen=True)
class SimpleThreshold:
    """Constant trend +rho1 below theta, -rho2 above."""

    rho1: float
    rho2: float
    sigma: float
    theta: float

    def __post_init__(self):
        _check_sigma_const(self.sigma)
        _check_thresholds((self.theta,))
        if self.rho1 <= 0 or self.rho2 <= 0:
            raise NonErgodicModel("SimpleThreshold needs rho1 > 0 and rho2 > 0")

    boundary = "upper"

    @property
    def thresholds(self) -> tuple[float, ...]:
        return (self.theta,)


@dataclass(frozen=True)
class SimpleSwitching:
    """Trend -rho * sgn(x - theta); Laplace stationary law."""

    rho: float
    sigma: float
    theta: float

    def __post_init__(self):
        _check_sigma_const(self.sigma)
        _check_thresholds((self.theta,))
        if self.rho <= 0:
            raise NonErgodicModel("SimpleSwitching needs rho > 0")

    boundary = "upper"

    @property
    def thresholds(self) -> tuple[float, ...]:
        return (self.theta,)


@dataclass(frozen=True)
class MultiThresholdOU:
    """Trend -rho_l * x on band (theta_{l-1}, theta_l]."""

    rates: tuple[float, ...]
    thresholds: tuple[float, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(
            self, "thresholds", tuple(float(t) for t in self.thresholds)
        )
        _check_sigma_const(self.sigma)
        _check_thresholds(self.thresholds)
        if len(self.rates) != len(self.thresholds) + 1:
            raise ConfigError(
                f"need {len(self.thresholds) + 1} rates for "
                f"{len(self.thresholds)} thresholds, got {len(self.rates)}"
            )
        if any(r <= 0 for r in self.rates):
            raise NonErgodicModel("MultiThresholdOU rates must be positive")
        for a, b in zip(self.rates, self.rates[1:]):
            if a == b:
                raise ConfigError("adjacent rates must differ, else the "
                                  "threshold between them is unidentifiable")

    boundary = "lower"


@dataclass(frozen=True)
class GeneralThreshold:
    """Bandwise trend callables with a callable diffusion coefficient.

    trends[j] applies on (theta_{j-1}, theta_j]; sigma(x) must be positive
    and continuous.  Stationary quantities for this variant are computed on
    a dense grid, good to roughly 1e-9 for smooth inputs.
    """

    trends: tuple[Callable, ...]
    thresholds: tuple[float, ...]
    sigma: Callable

    def __post_init__(self):
        object.__setattr__(self, "trends", tuple(self.trends))
        object.__setattr__(
            self, "thresholds", tuple(float(t) for t in self.thresholds)
        )
        _check_thresholds(self.thresholds)
        if len(self.trends) != len(self.thresholds) + 1:
            raise ConfigError(
                f"need {len(self.thresholds) + 1} trend functions for "
                f"{len(self.thresholds)} thresholds"
            )
        scale = max(1.0, max(abs(t) for t in self.thresholds))
        for r in (8.0, 64.0, 512.0):
            lo, hi = -r * scale, r * scale
            s_lo = float(self.trends[0](lo))
            s_hi = float(self.trends[-1](hi))
            if float(self.sigma(lo)) <= 0 or float(self.sigma(hi)) <= 0:
                raise DegenerateSigma("sigma(x) must stay positive")
            if s_lo <= 0:
                raise NonErgodicModel(f"trend not positive at x={lo:g}")
            if s_hi >= 0:
                raise NonErgodicModel(f"trend not negative at x={hi:g}")

    boundary = "lower"


@dataclass(frozen=True)
class PiecewiseLinearDrift:
    """Generic piecewise linear trend a_l*x + b_l with constant sigma.

    This is the common lowering target for the concrete variants above and
    for contaminated models; bands follow the ``boundary`` convention.
    """

    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]
    intercepts: tuple[float, ...]
    sigma: float
    boundary: str = "lower"

    def __post_init__(self):
        object.__setattr__(
            self, "breakpoints", tuple(float(t) for t in self.breakpoints)
        )
        object.__setattr__(self, "slopes", tuple(float(a) for a in self.slopes))
        object.__setattr__(
            self, "intercepts", tuple(float(b) for b in self.intercepts)
        )
        _check_sigma_const(self.sigma)
        _check_thresholds(self.breakpoints)
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise ConfigError("need one more slope than breakpoints")
        if len(self.intercepts) != len(self.slopes):
            raise ConfigError("slopes and intercepts must align")
        if self.boundary not in ("upper", "lower"):
            raise ConfigError("boundary must be 'upper' or 'lower'")
        _check_pl_ergodic(self.slopes, self.intercepts)

    @property
    def thresholds(self) -> tuple[float, ...]:
        return self.breakpoints


ModelSpec = (
    TOU
    | SimpleThreshold
    | SimpleSwitching
    | MultiThresholdOU
    | GeneralThreshold
    | PiecewiseLinearDrift
)


def regime_index(model: ModelSpec, x):
    """Band index of each state value under the model's boundary convention."""
    bps = np.asarray(model.thresholds, dtype=float)
    side = "right" if model.boundary == "upper" else "left"
    idx = np.searchsorted(bps, x, side=side)
    return idx if np.ndim(x) else int(idx)


def regime_trends(model: ModelSpec) -> tuple[Callable, ...]:
    """Per-band trend callables S_1, ..., S_{k+1} (vectorized over x)."""
    if isinstance(model, TOU):
        r1, r2 = model.rho1, model.rho2
        return (lambda x: -r1 * np.asarray(x, float),
                lambda x: -r2 * np.asarray(x, float))
    if isinstance(model, SimpleThreshold):
        r1, r2 = model.rho1, model.rho2
        return (lambda x: np.full_like(np.asarray(x, float), r1),
                lambda x: np.full_like(np.asarray(x, float), -r2))
    if isinstance(model, SimpleSwitching):
        r = model.rho
        return (lambda x: np.full_like(np.asarray(x, float), r),
                lambda x: np.full_like(np.asarray(x, float), -r))
    if isinstance(model, MultiThresholdOU):
        def mk(rate):
            return lambda x: -rate * np.asarray(x, float)
        return tuple(mk(r) for r in model.rates)
    if isinstance(model, GeneralThreshold):
        return model.trends
    if isinstance(model, PiecewiseLinearDrift):
        def mk_lin(a, b):
            return lambda x: a * np.asarray(x, float) + b
        return tuple(mk_lin(a, b) for a, b in zip(model.slopes, model.intercepts))
    raise TypeError(f"not a model spec: {model!r}")


def trend_eval(model: ModelSpec, x):
    """Trend S(x), honoring the boundary convention at thresholds."""
    xf = np.asarray(x, dtype=float)
    idx = np.searchsorted(
        np.asarray(model.thresholds, float),
        xf,
        side="right" if model.boundary == "upper" else "left",
    )
    trends = regime_trends(model)
    out = np.empty_like(xf)
    for j, fn in enumerate(trends):
        mask = idx == j
        if np.any(mask):
            out[mask] = fn(xf[mask])
    return out if np.ndim(x) else float(out)


def sigma_eval(model: ModelSpec, x):
    """Diffusion coefficient sigma(x)."""
    if isinstance(model, GeneralThreshold):
        xf = np.asarray(x, dtype=float)
        out = np.asarray(model.sigma(xf), dtype=float)
        if out.shape != xf.shape:
            out = np.broadcast_to(out, xf.shape).copy()
        return out if np.ndim(x) else float(out)
    if np.ndim(x):
        return np.full(np.shape(x), float(model.sigma))
    return float(model.sigma)


def drift_segments(model: ModelSpec):
    """(breakpoints, slopes, intercepts) arrays for piecewise linear trends.

    Returns None for GeneralThreshold, whose trend is opaque.
    """
    if isinstance(model, TOU):
        return (np.array([model.theta]), np.array([-model.rho1, -model.rho2]),
                np.zeros(2))
    if isinstance(model, SimpleThreshold):
        return (np.array([model.theta]), np.zeros(2),
                np.array([model.rho1, -model.rho2]))
    if isinstance(model, SimpleSwitching):
        return (np.array([model.theta]), np.zeros(2),
                np.array([model.rho, -model.rho]))
    if isinstance(model, MultiThresholdOU):
        return (np.asarray(model.thresholds, float),
                -np.asarray(model.rates, float),
                np.zeros(len(model.rates)))
    if isinstance(model, PiecewiseLinearDrift):
        return (np.asarray(model.breakpoints, float),
                np.asarray(model.slopes, float),
                np.asarray(model.intercepts, float))
    return None


# ---------------------------------------------------------------------------
# stationary law


class _Stationary:
    """Cached stationary-law machinery for one model.

    Piecewise linear trends get an exact piecewise quadratic exponent and
    quad-based normalization; the general variant falls back to a dense grid.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        segs = drift_segments(model)
        if segs is not None:
            self._build_pl(*segs, float(model.sigma))
        else:
            self._build_general(model)

    # exp(phi(x)) is the unnormalized density (up to 1/sigma^2 factors that
    # are constant for the piecewise linear variants).
    def _build_pl(self, bps, slopes, icepts, sigma):
        self.kind = "pl"
        sig2 = sigma * sigma
        k = len(bps)
        consts = np.zeros(k + 1)

        def prim(i, x):
            return (slopes[i] * x * x + 2.0 * icepts[i] * x) / sig2

        # continuity of phi across breakpoints; anchor phi(bps[0]) = 0
        consts[0] = -prim(0, bps[0])
        for i in range(k):
            consts[i + 1] = consts[i] + prim(i, bps[i]) - prim(i + 1, bps[i])
        self._bps, self._slopes, self._icepts = bps, slopes, icepts
        self._consts, self._sig2 = consts, sig2

        # mode of phi: check band vertices and all breakpoints
        cand = list(bps)
        for i in range(k + 1):
            if slopes[i] < 0:
                v = -icepts[i] / slopes[i]
                lo = bps[i - 1] if i > 0 else -np.inf
                hi = bps[i] if i < k else np.inf
                if lo < v < hi:
                    cand.append(v)
        phimax = float(np.max(self._phi_pl(np.array(cand))))
        self._phimax = phimax

        lo = self._tail_cut(0, bps[0], phimax - _LOG_CUTOFF, left=True)
        hi = self._tail_cut(k, bps[-1], phimax - _LOG_CUTOFF, left=False)
        self.lo, self.hi = lo, hi

        knots = np.concatenate([[lo], bps, [hi]])
        self._knots = knots
        masses = self._band_mass(np.arange(k + 1), knots[:-1], knots[1:])
        self._mass_below = np.concatenate([[0.0], np.cumsum(masses)])
        total = float(self._mass_below[-1])
        self._total_mass = total
        self.log_g = math.log(total) + phimax
        self._build_cdf_grid(knots, phimax, total)

    def _band_mass(self, idx, l, r):
        """Exact integral of exp(phi - phimax) over [l, r] within band idx.

        Quadratic exponents reduce to erf differences; when a band sits
        entirely on one flank of its vertex the pair is rewritten through
        erfcx so the extended-parabola peak (which can exceed phimax) never
        enters an exponential.  Flat exponents are plain exponentials.
        """
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        l = np.broadcast_to(np.asarray(l, dtype=float), idx.shape)
        r = np.broadcast_to(np.asarray(r, dtype=float), idx.shape)
        a = np.asarray(self._slopes, dtype=float)[idx]
        b = np.asarray(self._icepts, dtype=float)[idx]
        c = np.asarray(self._consts, dtype=float)[idx] - self._phimax
        s2 = self._sig2
        out = np.zeros(idx.shape, dtype=float)

        quad = a < 0.0
        if np.any(quad):
            al = -a[quad] / s2
            mu = -b[quad] / a[quad]
            rt = np.sqrt(al)
            ul = rt * (l[quad] - mu)
            ur = rt * (r[quad] - mu)
            peak = al * mu * mu + c[quad]
            res = np.empty(al.shape, dtype=float)
            right = ul >= 0.0
            left = ur <= 0.0
            mid = ~(right | left)
            res[right] = (
                np.exp(peak[right] - ul[right] ** 2) * special.erfcx(ul[right])
                - np.exp(peak[right] - ur[right] ** 2) * special.erfcx(ur[right]))
            res[left] = (
                np.exp(peak[left] - ur[left] ** 2) * special.erfcx(-ur[left])
                - np.exp(peak[left] - ul[left] ** 2) * special.erfcx(-ul[left]))
            res[mid] = np.exp(peak[mid]) * (special.erf(ur[mid])
                                            - special.erf(ul[mid]))
            out[quad] = 0.5 * math.sqrt(math.pi) / rt * res
        lin = ~quad
        if np.any(lin):
            be = 2.0 * b[lin] / s2
            cl, ll, rl = c[lin], l[lin], r[lin]
            res = np.empty(be.shape, dtype=float)
            flat = be == 0.0
            res[flat] = np.exp(cl[flat]) * (rl[flat] - ll[flat])
            g = ~flat
            # c + be x = phi(x) - phimax <= 0 at band endpoints, so both
            # exponentials stay in range
            res[g] = (np.exp(cl[g] + be[g] * rl[g])
                      - np.exp(cl[g] + be[g] * ll[g])) / be[g]
            out[lin] = res
        return out

    def _tail_cut(self, band, edge, target, left):
        a = self._slopes[band]
        b = self._icepts[band]
        c = self._consts[band]
        s2 = self._sig2
        # solve (a x^2 + 2 b x)/s2 + c = target on the tail side
        if a < 0:
            disc = b * b + a * s2 * (target - c)
            if disc <= 0:
                root = -b / a + (-1.0 if left else 1.0)
            else:
                r1 = (-b - math.sqrt(disc)) / a
                r2 = (-b + math.sqrt(disc)) / a
                root = min(r1, r2) if left else max(r1, r2)
        else:  # a == 0, |b| > 0 with the correct sign per ergodicity check
            root = s2 * (target - c) / (2.0 * b)
        pad = 1e-6 * (1.0 + abs(edge))
        return min(root, edge - pad) if left else max(root, edge + pad)

    def _phi_pl(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._bps, x, side="left")
        a = self._slopes[idx]
        b = self._icepts[idx]
        return (a * x + 2.0 * b) * x / self._sig2 + self._consts[idx]

    def _phi_scalar(self, x):
        i = int(np.searchsorted(self._bps, x, side="left"))
        return ((self._slopes[i] * x + 2.0 * self._icepts[i]) * x / self._sig2
                + self._consts[i])

    def _build_general(self, model):
        self.kind = "general"
        bps = np.asarray(model.thresholds, float)
        trends = regime_trends(model)
        sig2 = lambda x: sigma_eval(model, x) ** 2
        # bandwise exponent slope, indexed by band so threshold points take
        # the value of whichever band is being integrated
        psi = [
            (lambda fn: lambda x: 2.0 * np.asarray(fn(x), float) / sig2(x))(fn)
            for fn in trends
        ]

        # expand bounds until the exponent has dropped far below its max
        lo = bps[0] - 1.0
        hi = bps[-1] + 1.0
        span = max(1.0, bps[-1] - bps[0])
        for _ in range(60):
            grid, phi = self._phi_on_grid(lo, hi, bps, psi, 4097)
            pmax = phi.max()
            ok_lo = phi[0] < pmax - _LOG_CUTOFF
            ok_hi = phi[-1] < pmax - _LOG_CUTOFF
            if ok_lo and ok_hi:
                break
            if not ok_lo:
                lo -= span
            if not ok_hi:
                hi += span
            span *= 1.5
        else:
            raise NonErgodicModel("stationary exponent does not decay")

        grid, phi = self._phi_on_grid(lo, hi, bps, psi, 65537)
        pmax = phi.max()
        dens = np.exp(phi - pmax) / sig2(grid)
        total = float(np.trapezoid(dens, grid))
        self.lo, self.hi = lo, hi
        self.log_g = math.log(total) + pmax
        self._grid_x = grid
        with np.errstate(divide="ignore"):
            self._grid_logf = np.log(dens) - math.log(total)
        cdf = integrate.cumulative_simpson(dens, x=grid, initial=0.0) / total
        self._grid_cdf = np.clip(np.maximum.accumulate(cdf), 0.0, 1.0)

    @staticmethod
    def _phi_on_grid(lo, hi, bps, psi, n_target):
        """Exponent by per-band Simpson integration of 2 S / sigma^2.

        Integrating band by band keeps the trend's jumps at the breakpoints
        out of any single Simpson panel.
        """
        knots = np.concatenate([[lo], bps, [hi]])
        width = hi - lo
        xs_parts, phi_parts = [], []
        offset = 0.0
        for band, (a, b) in enumerate(zip(knots[:-1], knots[1:])):
            m = max(33, int(n_target * (b - a) / width))
            xs = np.linspace(a, b, m)
            vals = np.broadcast_to(psi[band](xs), xs.shape)
            seg = integrate.cumulative_simpson(vals, x=xs, initial=0.0) + offset
            offset = seg[-1]
            xs_parts.append(xs)
            phi_parts.append(seg)
        grid = np.concatenate(xs_parts)
        phi = np.concatenate(phi_parts)
        grid, keep = np.unique(grid, return_index=True)
        return grid, phi[keep]

    def _build_cdf_grid(self, knots, phimax, total):
        pieces_x = []
        pieces_c = []
        offset = 0.0
        width = knots[-1] - knots[0]
        for a, b in zip(knots[:-1], knots[1:]):
            m = max(129, int(131073 * (b - a) / width))
            xs = np.linspace(a, b, m)
            ys = np.exp(self._phi_pl(xs) - phimax)
            cs = integrate.cumulative_simpson(ys, x=xs, initial=0.0) + offset
            offset = cs[-1]
            pieces_x.append(xs)
            pieces_c.append(cs)
        gx = np.concatenate(pieces_x)
        gc = np.concatenate(pieces_c) / total
        gx, keep = np.unique(gx, return_index=True)
        self._grid_x = gx
        self._grid_cdf = np.clip(np.maximum.accumulate(gc[keep]), 0.0, 1.0)

    # public evaluation ----------------------------------------------------
    def log_density(self, x):
        xf = np.asarray(x, dtype=float)
        if self.kind == "pl":
            out = self._phi_pl(xf) - self.log_g
        else:
            out = np.interp(xf, self._grid_x, self._grid_logf,
                            left=-np.inf, right=-np.inf)
        return out

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        xf = np.asarray(x, dtype=float)
        if self.kind != "pl":
            return np.interp(xf, self._grid_x, self._grid_cdf,
                             left=0.0, right=1.0)
        xc = np.atleast_1d(np.clip(xf, self.lo, self.hi))
        idx = np.searchsorted(self._bps, xc, side="left")
        part = self._band_mass(idx, self._knots[idx], xc)
        out = np.clip((self._mass_below[idx] + part) / self._total_mass,
                      0.0, 1.0)
        return out.reshape(xf.shape) if xf.ndim else out[0]

    def cdf_inverse(self, q):
        qf = np.asarray(q, dtype=float)
        if np.any((qf < 0) | (qf > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        return np.interp(qf, self._grid_cdf, self._grid_x)

    def moment(self, power, lo=None, hi=None):
        a = self.lo if lo is None or lo < self.lo else lo
        b = self.hi if hi is None or hi > self.hi else hi
        if b <= a:
            return 0.0
        if self.kind == "pl":
            knots = [a] + [t for t in self._bps if a < t < b] + [b]
            total = 0.0
            for l, r in zip(knots[:-1], knots[1:]):
                val, _ = integrate.quad(
                    lambda x: x ** power * math.exp(
                        self._phi_scalar(x) - self.log_g),
                    l, r, epsabs=1e-13, epsrel=1e-11, limit=200,
                )
                total += val
            return total
        mask = (self._grid_x >= a) & (self._grid_x <= b)
        xs = self._grid_x[mask]
        ys = xs ** power * np.exp(self._grid_logf[mask])
        return float(np.trapezoid(ys, xs))


@lru_cache(maxsize=64)
def _stationary(model: ModelSpec) -> _Stationary:
    return _Stationary(model)


def invariant_density(model: ModelSpec, x):
    """Stationary density f(x); normalized to integrate to one."""
    out = _stationary(model).density(x)
    return out if np.ndim(x) else float(out)


def invariant_cdf(model: ModelSpec, x):
    """Stationary distribution function F(x) on a cached dense grid."""
    out = _stationary(model).cdf(x)
    return out if np.ndim(x) else float(out)


def invariant_cdf_inverse(model: ModelSpec, q):
    """Quantile function of the stationary law (grid interpolation)."""
    out = _stationary(model).cdf_inverse(q)
    return out if np.ndim(q) else float(out)


def stationary_moment(model: ModelSpec, power: int = 1,
                      lo: float | None = None, hi: float | None = None) -> float:
    """Integral of x^power * f(x) over [lo, hi] (full line by default)."""
    return float(_stationary(model).moment(power, lo, hi))


def gamma_sq(model: ModelSpec, j: int = 0, variant: str = "general") -> float:
    """Squared identification weight of threshold j.

    gamma_j^2 = (S_{j+1}(theta_j) - S_j(theta_j))^2 / sigma(theta_j)^2
                * f(theta_j),
    with the density taken as its right limit at theta_j.  For TOU only,
    variant="damped" multiplies by exp(-rho1^2 theta^2 / sigma^2), a reduced
    weight kept for comparison runs; the default is the formula above.
    """
    k = len(model.thresholds)
    if not 0 <= j < k:
        raise IndexOutOfRange(f"threshold index {j} outside 0..{k - 1}")
    if variant not in ("general", "damped"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "damped" and not isinstance(model, TOU):
        raise ValueError("variant='damped' is defined for TOU only")
    theta = model.thresholds[j]
    trends = regime_trends(model)
    ds = float(trends[j + 1](theta)) - float(trends[j](theta))
    s2 = sigma_eval(model, theta) ** 2
    base = ds * ds / s2 * invariant_density(model, theta)
    if variant == "damped":
        base *= math.exp(-model.rho1 ** 2 * theta ** 2 / model.sigma ** 2)
    return float(base)


def rate_error_variance(model: TOU, regime: int) -> float:
    """Limit variance of sqrt(T)-normalized rate error in the TOU model.

    regime 0 is {x < theta} with variance sigma^2 / E[X^2 1{X < theta}];
    regime 1 uses the complementary truncation.
    """
    if not isinstance(model, TOU):
        raise TypeError("rate error variances are defined for TOU")
    if regime == 0:
        mass = stationary_moment(model, 2, hi=model.theta)
    elif regime == 1:
        mass = stationary_moment(model, 2, lo=model.theta)
    else:
        raise IndexOutOfRange("regime must be 0 or 1")
    return model.sigma ** 2 / mass


def with_thresholds(model: ModelSpec, thresholds: Sequence[float]) -> ModelSpec:
    """Copy of the model with its thresholds replaced."""
    th = tuple(float(t) for t in thresholds)
    if isinstance(model, (TOU, SimpleThreshold, SimpleSwitching)):
        if len(th) != 1:
            raise InvalidThresholdOrder("two-regime models take one threshold")
        return replace(model, theta=th[0])
    if isinstance(model, (MultiThresholdOU, GeneralThreshold)):
        return replace(model, thresholds=th)
    if isinstance(model, PiecewiseLinearDrift):
        return replace(model, breakpoints=th)
    raise TypeError(f"not a model spec: {model!r}")


def model_id(model: ModelSpec) -> str:
    """Short human-readable identifier used in path metadata."""
    if isinstance(model, TOU):
        return (f"tou(rho1={model.rho1:g},rho2={model.rho2:g},"
                f"sigma={model.sigma:g},theta={model.theta:g})")
    if isinstance(model, SimpleThreshold):
        return (f"simple(rho1={model.rho1:g},rho2={model.rho2:g},"
                f"sigma={model.sigma:g},theta={model.theta:g})")
    if isinstance(model, SimpleSwitching):
        return (f"switching(rho={model.rho:g},sigma={model.sigma:g},"
                f"theta={model.theta:g})")
    if isinstance(model, MultiThresholdOU):
        rates = ",".join(f"{r:g}" for r in model.rates)
        ths = ",".join(f"{t:g}" for t in model.thresholds)
        return f"mtou(rates=[{rates}],thresholds=[{ths}],sigma={model.sigma:g})"
    if isinstance(model, GeneralThreshold):
        ths = ",".join(f"{t:g}" for t in model.thresholds)
        return f"general(thresholds=[{ths}])"
    if isinstance(model, PiecewiseLinearDrift):
        ths = ",".join(f"{t:g}" for t in model.breakpoints)
        return f"pl(breakpoints=[{ths}],sigma={model.sigma:g})"
    raise TypeError(f"not a model spec: {model!r}")


def model_to_dict(model: ModelSpec) -> dict:
    """JSON-ready description; GeneralThreshold is not serializable."""
    if isinstance(model, TOU):
        return {"kind": "tou", "rho1": model.rho1, "rho2": model.rho2,
                "sigma": model.sigma, "theta": model.theta}
    if isinstance(model, SimpleThreshold):
        return {"kind": "simple_threshold", "rho1": model.rho1,
                "rho2": model.rho2, "sigma": model.sigma, "theta": model.theta}
    if isinstance(model, SimpleSwitching):
        return {"kind": "simple_switching", "rho": model.rho,
                "sigma": model.sigma, "theta": model.theta}
    if isinstance(model, MultiThresholdOU):
        return {"kind": "mtou", "rates": list(model.rates),
                "thresholds": list(model.thresholds), "sigma": model.sigma}
    if isinstance(model, PiecewiseLinearDrift):
        return {"kind": "piecewise_linear",
                "breakpoints": list(model.breakpoints),
                "slopes": list(model.slopes),
                "intercepts": list(model.intercepts),
                "sigma": model.sigma, "boundary": model.boundary}
    raise ConfigError(f"cannot serialize {type(model).__name__}")


def model_from_dict(spec: dict) -> ModelSpec:
    """Inverse of model_to_dict."""
    try:
        kind = spec["kind"]
    except (TypeError, KeyError):
        raise ConfigError(f"model spec needs a 'kind' field: {spec!r}")
    try:
        if kind == "tou":
            return TOU(spec["rho1"], spec["rho2"], spec["sigma"], spec["theta"])
        if kind == "simple_threshold":
            return SimpleThreshold(spec["rho1"], spec["rho2"], spec["sigma"],
                                   spec["theta"])
        if kind == "simple_switching":
            return SimpleSwitching(spec["rho"], spec["sigma"], spec["theta"])
        if kind == "mtou":
            return MultiThresholdOU(tuple(spec["rates"]),
                                    tuple(spec["thresholds"]), spec["sigma"])
        if kind == "piecewise_linear":
            return PiecewiseLinearDrift(
                tuple(spec["breakpoints"]), tuple(spec["slopes"]),
                tuple(spec["intercepts"]), spec["sigma"],
                spec.get("boundary", "lower"))
    except KeyError as exc:
        raise ConfigError(f"model spec missing field {exc}")
    raise ConfigError(f"unknown model kind {kind!r}")
