"""Threshold estimation at rate T: the sweep curve, MLE, and Bayes.

The log likelihood is piecewise constant in the threshold with jumps at
the observed states, so the maximizer is found exactly by a sweep over
the distinct values inside the search box.  The Bayes estimator is the
posterior mean under a flat prior, computed by exact interval
quadrature over the same sweep curve.  Errors shrink like 1/T, not
1/sqrt(T): doubling the horizon roughly halves the spread.

Writes out/sweep_curve.csv (the likelihood profile of one path) and
out/error_scaling.csv (scaled errors across horizons).
"""
import pathlib

import numpy as np

from threshdiff import (
    RngStream, Stationary, TOU, bayes_threshold, curve_to_csv, gamma_sq,
    loglik_curve, mle_threshold, predicted_error_scale, simulate_path,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

model = TOU(rho1=1.0, rho2=4.0, sigma=1.0, theta=1.0)
box = (0.6, 1.4)

# one path, its profile, and both point estimates
path = simulate_path(model, 500.0, 1e-3, RngStream(20, 0),
                     init=Stationary())
curve = loglik_curve(path, model, 0, box)
curve_to_csv(curve, OUT / "sweep_curve.csv")
mle = mle_threshold(path, model, box, truth=(model.theta,))
bayes = bayes_threshold(path, model, box, truth=(model.theta,))
print(f"T=500 path: {curve.values.size} candidate intervals in the box")
print(f"  MLE   {mle.thresholds[0]:.6f}  "
      f"(T x error = {mle.scaled_errors[0]:+.3f})")
print(f"  Bayes {bayes.thresholds[0]:.6f}  "
      f"(T x error = {bayes.scaled_errors[0]:+.3f})")
print(f"  profile -> {OUT / 'sweep_curve.csv'}")

# error scaling: the raw error halves when the horizon doubles, so
# T x |error| stays flat.  Medians keep the small-sample table readable;
# the scaled-variance match against predicted_error_scale needs a few
# thousand replicates and lives in the test suite.
scale_mle, scale_bayes = predicted_error_scale(model, 0)
print(f"\npredicted Var[T x error]: MLE {scale_mle:.3f}, "
      f"Bayes {scale_bayes:.3f} (gamma^2 = {gamma_sq(model, 0):.4f})")

horizons = (100.0, 400.0)
reps = 60
rows = []
print(f"{'T':>6s} {'median |err|':>13s} {'T x median':>11s}")
for ti, T in enumerate(horizons):
    errs = np.empty(reps)
    for r in range(reps):
        p = simulate_path(model, T, 1e-3, RngStream(21, ti * reps + r),
                          init=Stationary())
        est = mle_threshold(p, model, box, truth=(model.theta,))
        errs[r] = abs(est.thresholds[0] - model.theta)
    med = float(np.median(errs))
    rows.append((T, med, T * med))
    print(f"{T:6.0f} {med:13.3g} {T * med:11.3f}")
print("(4x the horizon, about a quarter of the error; a sqrt(T) "
      "estimator would only halve it)")

np.savetxt(OUT / "error_scaling.csv", np.array(rows), delimiter=",",
           header="T,median_abs_error,scaled_median", comments="",
           fmt="%.8g")
print(f"table -> {OUT / 'error_scaling.csv'}")
