"""Path simulation and occupation-based nonparametric estimates."""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from . import models
from ._euler import euler_piecewise_linear
from .errors import ConfigError, NumericalBlowup

__all__ = [
    "RngStream",
    "Fixed",
    "Stationary",
    "Burnin",
    "Path",
    "simulate_path",
    "path_slice",
    "empirical_cdf",
    "local_time_density",
    "path_to_csv",
    "path_from_csv",
]

_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic generator stream: (master seed, stream index)."""

    master: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.master, self.stream])

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.master, stream)


@dataclass(frozen=True)
class Fixed:
    """Start the path at a fixed state."""

    x0: float = 0.0


@dataclass(frozen=True)
class Stationary:
    """Draw the initial state from the model's invariant law."""


@dataclass(frozen=True)
class Burnin:
    """Run the scheme for `duration` time units before recording."""

    duration: float
    x0: float = 0.0


@dataclass(frozen=True)
class Path:
    """Discretely observed trajectory on a uniform time grid."""

    values: np.ndarray
    dt: float
    t0: float = 0.0
    model: str = ""
    seed: tuple[int, int] | None = None

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.dt <= 0:
            raise ConfigError("dt must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) * self.dt


def _coerce_rng(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), (rng.master, rng.stream)
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), (int(rng), 0)
    if isinstance(rng, np.random.Generator):
        return rng, None
    raise ConfigError(f"rng must be RngStream, int or Generator, got {rng!r}")


def _simulate_general(model, x0, dt, z, guard):
    # slow fallback for callable trends / state dependent sigma
    trends = models.regime_trends(model)
    bps = list(model.thresholds)
    sigma = model.sigma
    out = np.empty(len(z) + 1)
    out[0] = x = float(x0)
    sq = np.sqrt(dt)
    for i, zi in enumerate(z):
        j = bisect.bisect_left(bps, x)
        x = x + float(trends[j](x)) * dt + float(sigma(x)) * sq * zi
        out[i + 1] = x
        if not (-guard < x < guard):
            return out, i + 1
    return out, -1


def simulate_path(model, T, dt, rng, init=Fixed(0.0), guard=1e6) -> Path:
    """Euler path of the model on [0, T] with n = round(T/dt) steps.

    The draw order is fixed (stationary initial state first, then the n
    increments), so equal (model, T, dt, seed, init) give bit-identical
    paths.  Raises NumericalBlowup when |X| leaves (-guard, guard).
    """
    if T <= 0 or dt <= 0:
        raise ConfigError("need T > 0 and dt > 0")
    n = int(round(T / dt))
    if n < 1:
        raise ConfigError("T/dt must round to at least one step")
    gen, seed = _coerce_rng(rng)

    n_extra = 0
    if isinstance(init, Fixed):
        x0 = float(init.x0)
    elif isinstance(init, Stationary):
        x0 = float(models.invariant_cdf_inverse(model, gen.random()))
    elif isinstance(init, Burnin):
        n_extra = int(round(init.duration / dt))
        x0 = float(init.x0)
    else:
        raise ConfigError(f"unknown init rule {init!r}")

    z = gen.standard_normal(n + n_extra)
    segs = models.drift_segments(model)
    if segs is not None:
        bps, slopes, icepts = segs
        vals, blow = euler_piecewise_linear(
            x0, dt, float(model.sigma), z, bps, slopes, icepts,
            model.boundary == "upper", guard,
        )
    else:
        vals, blow = _simulate_general(model, x0, dt, z, guard)
    if blow >= 0:
        raise NumericalBlowup(blow, blow * dt, vals[blow])
    return Path(vals[n_extra:], dt, 0.0, models.model_id(model), seed)


def path_slice(path: Path, t_from: float, t_to: float) -> Path:
    """Sub-path on [t_from, t_to]; endpoints snap to the grid."""
    i0 = int(round((t_from - path.t0) / path.dt))
    i1 = int(round((t_to - path.t0) / path.dt))
    if not 0 <= i0 < i1 <= path.n_steps:
        raise ConfigError(
            f"slice [{t_from:g}, {t_to:g}] outside the path horizon")
    return Path(path.values[i0:i1 + 1], path.dt, path.t0 + i0 * path.dt,
                path.model, path.seed)


def empirical_cdf(path: Path, x):
    """Occupation-time distribution function (1/T) * time spent below x.

    Left-point rule over the n sampling intervals, so the final state is
    not counted.
    """
    v = np.sort(path.values[:-1])
    out = np.searchsorted(v, x, side="left") / len(v)
    return out if np.ndim(x) else float(out)


def local_time_density(path: Path, x, bandwidth: float | None = None,
                       method: str = "identity"):
    """Invariant density estimate at x from the path's occupation.

    method="identity" uses the local time identity
        Lambda_T(x) = |X_T - x| - |X_0 - x| - sum_i sgn(X_i - x) dX_i
    and returns Lambda_T(x) / (T sigma^2); sigma^2 is recovered from the
    quadratic variation, so no model is needed.  method="kernel" is the
    smoothing cross-check and is the only user of `bandwidth`.
    """
    v = path.values
    T = path.horizon
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    dv = np.diff(v)
    if method == "identity":
        order = np.argsort(v[:-1])
        sv = v[:-1][order]
        cums = np.concatenate([[0.0], np.cumsum(dv[order])])
        total = cums[-1]
        below = np.searchsorted(sv, xq, side="left")
        # sum of sgn(v_i - x) dv_i; points at x itself contribute zero
        at = np.searchsorted(sv, xq, side="right")
        sgn_sum = (total - cums[at]) - cums[below]
        lam = np.abs(v[-1] - xq) - np.abs(v[0] - xq) - sgn_sum
        qv = np.sum(dv * dv) / T   # quadratic variation estimate of sigma^2
        out = lam / (T * qv)
    elif method == "kernel":
        if bandwidth is None or bandwidth <= 0:
            raise ConfigError("kernel method needs a positive bandwidth")
        n = len(v) - 1
        out = np.empty_like(xq)
        chunk = max(1, int(2e7 // n))
        for s in range(0, len(xq), chunk):
            q = xq[s:s + chunk, None]
            u = (v[None, :-1] - q) / bandwidth
            out[s:s + chunk] = np.exp(-0.5 * u * u).sum(axis=1) / (
                n * bandwidth * np.sqrt(2 * np.pi))
    else:
        raise ConfigError(f"unknown method {method!r}")
    return out if np.ndim(x) else float(out[0])


def path_to_csv(path: Path, fname) -> None:
    """Write `t,x` rows plus a JSON sidecar with grid and seed metadata."""
    fname = FsPath(fname)
    data = np.column_stack([path.times(), path.values])
    np.savetxt(fname, data, fmt="%.17g", delimiter=",", header="t,x",
               comments="")
    meta = {
        "format_version": _FORMAT_VERSION,
        "dt": path.dt,
        "t0": path.t0,
        "n_steps": path.n_steps,
        "model": path.model,
        "seed": list(path.seed) if path.seed is not None else None,
    }
    fname.with_suffix(fname.suffix + ".json").write_text(
        json.dumps(meta, indent=2))


def path_from_csv(fname) -> Path:
    """Read a path written by path_to_csv; the sidecar must be present."""
    fname = FsPath(fname)
    side = fname.with_suffix(fname.suffix + ".json")
    if not side.exists():
        raise ConfigError(f"missing sidecar {side}")
    meta = json.loads(side.read_text())
    if meta.get("format_version") != _FORMAT_VERSION:
        raise ConfigError(f"unsupported path format {meta.get('format_version')}")
    data = np.loadtxt(fname, delimiter=",", skiprows=1)
    vals = data[:, 1]
    if len(vals) != meta["n_steps"] + 1:
        raise ConfigError("sidecar step count does not match the CSV")
    seed = tuple(meta["seed"]) if meta.get("seed") else None
    return Path(vals, meta["dt"], meta["t0"], meta.get("model", ""), seed)
