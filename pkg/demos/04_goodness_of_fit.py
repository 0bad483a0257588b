"""Goodness-of-fit tests built on the occupation measure.

The statistics compare the empirical occupation CDF of a path against
the stationary CDF of the hypothesized model: w2 is a Cramer-von Mises
type integral, d a sup distance, both asymptotically distribution-free
after the model-specific time change.  Thresholds come from Monte Carlo
quantile tables of the corresponding Brownian functionals.  The
composite version first fits the threshold; because that estimator
converges at rate T, plugging it in does not disturb the null law.

Writes the mini quantile tables it uses into out/gof_tables/.
"""
import pathlib

from threshdiff import (
    PiecewiseLinearDrift, RngStream, Stationary, TOU, composite_test,
    gof_test, quantile_table, read_table, simulate_path, write_table,
)

OUT = pathlib.Path(__file__).parent / "out" / "gof_tables"
OUT.mkdir(parents=True, exist_ok=True)

alphas = tuple(i / 100 for i in range(1, 100))
for tag in ("IntW2_01", "SupAbsW_01"):
    fname = OUT / f"{tag}.csv"
    if not fname.exists():
        table = quantile_table(tag, alphas, 20000,
                               RngStream(40, 0).generator(), grid_step=1e-3)
        write_table(table, fname)
tables = {"w2": read_table(OUT / "IntW2_01.csv"),
          "d": read_table(OUT / "SupAbsW_01.csv")}
print(f"quantile tables (20000 draws each) -> {OUT}")

null_model = TOU(rho1=1.0, rho2=2.0, sigma=1.0, theta=0.5)
# same sigma, but a middle band whose pull matches no TOU member
alt_model = PiecewiseLinearDrift((0.5, 1.0), (-1.0, -3.0, -2.0),
                                 (0.0, 0.0, 0.0), 1.0)

null_path = simulate_path(null_model, 1000.0, 1e-3, RngStream(41, 0),
                          init=Stationary())
alt_path = simulate_path(alt_model, 1000.0, 1e-3, RngStream(42, 0),
                         init=Stationary())

print("\nsimple null hypothesis, alpha = 0.05:")
for label, path in (("path from the null", null_path),
                    ("path from the alternative", alt_path)):
    for stat in ("w2", "d"):
        rep = gof_test(path, null_model, 0.05, tables[stat], statistic=stat)
        print(f"  {label:26s} {stat:2s} = {rep.value:8.4f}  "
              f"threshold {rep.threshold:7.4f}  "
              f"-> {'reject' if rep.reject else 'accept'}")

print("\ncomposite null (threshold unknown, fitted by MLE), alpha = 0.05:")
for label, path in (("path from the null", null_path),
                    ("path from the alternative", alt_path)):
    rep = composite_test(path, null_model, (0.2, 0.8), 0.05, tables["w2"],
                         statistic="w2", estimator="mle")
    print(f"  {label:26s} w2 = {rep.value:8.4f}  "
          f"fitted theta {rep.estimate[0]:.4f}  "
          f"-> {'reject' if rep.reject else 'accept'}")
