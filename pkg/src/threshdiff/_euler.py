"""Euler scheme kernels.  Kept separate so the numba import cost is explicit."""
import numba
import numpy as np


@numba.njit(cache=True)
def euler_piecewise_linear(x0, dt, sigma, z, bps, slopes, icepts, upper, guard):
    """Euler scheme for trend a_j x + b_j between breakpoints, constant sigma.

    upper=True puts x == bps[j] into the upper band (two-regime convention),
    upper=False keeps it in the lower band (multi-threshold convention).
    Returns (values, blow_index); blow_index is -1 when the guard held.
    """
    n = z.shape[0]
    k = bps.shape[0]
    out = np.empty(n + 1)
    out[0] = x0
    x = x0
    step = sigma * np.sqrt(dt)
    for i in range(n):
        j = 0
        if upper:
            while j < k and x >= bps[j]:
                j += 1
        else:
            while j < k and x > bps[j]:
                j += 1
        x = x + (slopes[j] * x + icepts[j]) * dt + step * z[i]
        out[i + 1] = x
        if not (-guard < x < guard):
            return out, i + 1
    return out, -1
