"""Monte Carlo limit laws: threshold error functionals and Brownian tables.

The threshold estimators have rate-T limits driven by the two-sided field
Z0(u) = exp(W(u) - |u|/2) with W a two-sided standard Brownian motion: the
likelihood maximizer converges to argmax Z0 scaled by 1/gamma^2 and the
posterior mean to int u Z0 / int Z0 on the same scale.  The second moments
of the unscaled functionals are 26 and 16 zeta(3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy.special import zeta

from . import models
from .errors import BoundaryHit, ConfigError

__all__ = [
    "UHAT_SECOND_MOMENT",
    "UTILDE_SECOND_MOMENT",
    "LimitLawSamples",
    "sample_uhat_utilde",
    "sample_brownian_functional",
    "QuantileTable",
    "quantile_table",
    "write_table",
    "read_table",
    "predicted_error_scale",
]

UHAT_SECOND_MOMENT = 26.0
UTILDE_SECOND_MOMENT = 16.0 * float(zeta(3))

FUNCTIONAL_TAGS = ("ArgmaxU", "BayesU", "IntW2_01", "SupAbsW_01", "IntW2Exp")

# exponential-window horizon: beyond it the weight e^{-s} carries < 1e-8 mass
_EXP_HORIZON = math.log(1e8)


@dataclass(frozen=True)
class LimitLawSamples:
    tag: str
    grid_step: float
    horizon: float
    samples: np.ndarray
    seed: tuple[int, int] | None
    discarded: int


def _seed_of(rng):
    from .simulate import RngStream

    if isinstance(rng, RngStream):
        return rng.generator(), (rng.master, rng.stream)
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), (int(rng), 0)
    if isinstance(rng, np.random.Generator):
        return rng, None
    raise ConfigError(f"rng must be RngStream, int or Generator, got {rng!r}")


def sample_uhat_utilde(rng, size: int, U: float = 60.0, h: float = 0.01,
                       max_discard_frac: float = 0.01):
    """Joint draws of (argmax, mean) of the tilted field on [-U, U].

    Each draw builds two independent Brownian halves on a step-h grid.
    Draws whose argmax lands on the boundary are discarded and resampled;
    if more than max_discard_frac of the attempts hit the boundary the
    horizon is too short and BoundaryHit is raised.  Returns a pair of
    LimitLawSamples (tags ArgmaxU, BayesU) sharing the discard count.
    """
    if U <= 0 or h <= 0 or U <= 2 * h:
        raise ConfigError("need U > 0 and a step h much smaller than U")
    gen, seed = _seed_of(rng)
    m = int(round(U / h))
    u_half = np.arange(1, m + 1) * h
    grid = np.concatenate([-u_half[::-1], [0.0], u_half])
    w = np.full(2 * m + 1, h)
    w[0] = w[-1] = 0.5 * h
    wu = w * grid

    uhat = np.empty(size)
    utilde = np.empty(size)
    discarded = 0
    done = 0
    chunk = max(16, int(3.2e7 // (2 * m + 1)))
    sq = math.sqrt(h)
    while done < size:
        c = min(chunk, size - done)
        half_p = np.cumsum(gen.standard_normal((c, m)) * sq, axis=1)
        half_m = np.cumsum(gen.standard_normal((c, m)) * sq, axis=1)
        drift = 0.5 * u_half
        logz = np.concatenate(
            [(half_m - drift)[:, ::-1], np.zeros((c, 1)), half_p - drift],
            axis=1,
        )
        idx = np.argmax(logz, axis=1)
        good = (idx != 0) & (idx != 2 * m)
        discarded += int(c - good.sum())
        if discarded > max_discard_frac * (size + discarded):
            raise BoundaryHit(
                f"{discarded} boundary hits; increase the horizon U")
        logz = logz[good]
        k = logz.shape[0]
        mx = logz.max(axis=1, keepdims=True)
        z = np.exp(logz - mx)
        uhat[done:done + k] = grid[idx[good]]
        utilde[done:done + k] = (z @ wu) / (z @ w)
        done += k
    return (
        LimitLawSamples("ArgmaxU", h, U, uhat, seed, discarded),
        LimitLawSamples("BayesU", h, U, utilde, seed, discarded),
    )


def sample_brownian_functional(tag: str, rng, size: int,
                               grid_step: float = 1e-3) -> LimitLawSamples:
    """Draws of a Brownian goodness-of-fit functional on a step grid.

    IntW2_01:   int_0^1 W(s)^2 ds          (trapezoid on the grid)
    SupAbsW_01: sup_{[0,1]} |W(s)|         (max over the grid)
    IntW2Exp:   int_0^inf W(s)^2 e^{-s} ds (horizon log(1e8))
    """
    gen, seed = _seed_of(rng)
    if tag in ("IntW2_01", "SupAbsW_01"):
        horizon = 1.0
    elif tag == "IntW2Exp":
        horizon = _EXP_HORIZON
    else:
        raise ConfigError(f"unknown functional tag {tag!r}")
    m = int(round(horizon / grid_step))
    h = horizon / m
    if tag == "IntW2Exp":
        wts = np.exp(-np.arange(1, m + 1) * h) * h
        wts[-1] *= 0.5
    else:
        wts = np.full(m, h)
        wts[-1] = 0.5 * h

    out = np.empty(size)
    done = 0
    chunk = max(16, int(3.2e7 // m))
    sq = math.sqrt(h)
    while done < size:
        c = min(chunk, size - done)
        wpath = np.cumsum(gen.standard_normal((c, m)) * sq, axis=1)
        if tag == "SupAbsW_01":
            out[done:done + c] = np.abs(wpath).max(axis=1)
        else:
            out[done:done + c] = (wpath * wpath) @ wts
        done += c
    return LimitLawSamples(tag, h, horizon, out, seed, 0)


@dataclass(frozen=True)
class QuantileTable:
    """Upper-tail thresholds c_alpha with P(X > c_alpha) = alpha."""

    tag: str
    alphas: np.ndarray
    thresholds: np.ndarray
    ses: np.ndarray
    replicates: int
    grid: str

    def threshold(self, alpha: float) -> float:
        i = np.nonzero(np.isclose(self.alphas, alpha, atol=1e-12))[0]
        if i.size:
            return float(self.thresholds[i[0]])
        if not (self.alphas.min() <= alpha <= self.alphas.max()):
            raise ConfigError(f"alpha={alpha} outside the tabulated range")
        return float(np.interp(alpha, self.alphas, self.thresholds))


def quantile_table(tag: str, alphas, replicates: int, rng,
                   grid_step: float = 1e-3, U: float = 60.0, h: float = 0.01,
                   n_boot: int = 200) -> QuantileTable:
    """Monte Carlo quantile table of a functional with bootstrap SEs."""
    alphas = np.sort(np.unique(np.asarray(alphas, dtype=float)))
    if np.any((alphas <= 0) | (alphas >= 1)):
        raise ConfigError("tail levels must lie strictly inside (0, 1)")
    gen, _ = _seed_of(rng)
    if tag in ("ArgmaxU", "BayesU"):
        pair = sample_uhat_utilde(gen, replicates, U=U, h=h)
        samples = pair[0 if tag == "ArgmaxU" else 1].samples
        grid = f"h={h:g};U={U:g}"
    else:
        ls = sample_brownian_functional(tag, gen, replicates, grid_step)
        samples = ls.samples
        grid = f"h={ls.grid_step:g};U={ls.horizon:g}"
    q = 1.0 - alphas
    thresholds = np.quantile(samples, q)
    boots = np.empty((n_boot, len(alphas)))
    n = len(samples)
    for b in range(n_boot):
        res = samples[gen.integers(0, n, n)]
        boots[b] = np.quantile(res, q)
    ses = boots.std(axis=0, ddof=1)
    return QuantileTable(tag, alphas, thresholds, ses, replicates, grid)


def write_table(table: QuantileTable, fname) -> None:
    """CSV rows alpha,threshold,se,replicates,grid."""
    fname = FsPath(fname)
    with open(fname, "w") as fh:
        fh.write("alpha,threshold,se,replicates,grid\n")
        for a, t, s in zip(table.alphas, table.thresholds, table.ses):
            fh.write(f"{a:.10g},{t:.17g},{s:.6g},{table.replicates},"
                     f"{table.grid}\n")


def read_table(fname) -> QuantileTable:
    fname = FsPath(fname)
    tag = fname.stem
    alphas, thresholds, ses = [], [], []
    replicates, grid = 0, ""
    with open(fname) as fh:
        header = fh.readline().strip()
        if header != "alpha,threshold,se,replicates,grid":
            raise ConfigError(f"unexpected table header in {fname}: {header}")
        for line in fh:
            a, t, s, r, g = line.strip().split(",")
            alphas.append(float(a))
            thresholds.append(float(t))
            ses.append(float(s))
            replicates, grid = int(r), g
    return QuantileTable(tag, np.asarray(alphas), np.asarray(thresholds),
                         np.asarray(ses), replicates, grid)


def predicted_error_scale(model, j: int = 0,
                          variant: str = "general") -> tuple[float, float]:
    """Limit variances of T(theta_hat - theta) for the MLE and the
    posterior mean: (26 / gamma^4, 16 zeta(3) / gamma^4)."""
    g2 = models.gamma_sq(model, j, variant=variant)
    return UHAT_SECOND_MOMENT / g2 ** 2, UTILDE_SECOND_MOMENT / g2 ** 2
