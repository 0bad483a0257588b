"""What happens to the threshold estimator when the trend is wrong.

The data follow a TOU trend plus a bounded contamination h, but the
estimator assumes the clean model.  A simple sufficient condition,
|h(y)| < (y/2)(rho2 - rho1) near the threshold, guarantees the
estimator stays consistent.  When h violates it strongly, the estimate
converges instead to the minimizer of the trend-mismatch profile K,
which can sit far from the true threshold.

Writes out/kl_profiles.csv with K(theta) for both contaminations.
"""
import pathlib

import numpy as np

from threshdiff import (
    Contamination, RngStream, TOU, condition7_check, kl_profile,
    misspec_experiment,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

base = TOU(rho1=1.0, rho2=3.0, sigma=1.0, theta=1.0)
box = (0.6, 1.4)
weak = Contamination.linear(0.4)            # h(y) = 0.4 y, inside the bound
strong = Contamination.banded_linear(1.6, 0.2, 1.2)   # 1.6 y on (0.2, 1.2]

grid = np.linspace(box[0], box[1], 161)
profiles = [grid]
for name, h in (("weak", weak), ("strong", strong)):
    cond = condition7_check(h, base.rho1, base.rho2, box)
    prof = kl_profile(base, h, grid)
    profiles.append(prof.values)
    print(f"{name}: condition {'holds' if cond.ok else 'fails'} "
          f"(margin {cond.margin:+.3f} at y = {cond.worst_y:.3f}); "
          f"K minimized at {prof.argmin:.4f} "
          f"(true threshold {base.theta:.1f})")

np.savetxt(OUT / "kl_profiles.csv", np.column_stack(profiles),
           delimiter=",", header="theta,K_weak,K_strong", comments="",
           fmt="%.8g")
print(f"profiles -> {OUT / 'kl_profiles.csv'}")

print("\nmedian threshold estimate across 40 contaminated replicates:")
print(f"{'':8s} {'T=300':>8s} {'T=600':>8s} {'target':>8s}")
for name, h in (("weak", weak), ("strong", strong)):
    rep = misspec_experiment(base, h, box, (300.0, 600.0), 40,
                             RngStream(50, 0), dt=2e-3, kl_grid=161)
    meds = [float(np.median(rep.estimates[T])) for T in (300.0, 600.0)]
    print(f"{name:8s} {meds[0]:8.4f} {meds[1]:8.4f} {rep.kl.argmin:8.4f}")
print("(the weak case drifts back to 1.0; the strong case locks onto "
      "the mismatch minimizer)")
