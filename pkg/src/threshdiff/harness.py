"""Config-driven experiment runner.

One config file describes one experiment: the data-generating model, the
horizons, the replicate count and the master seed.  Replicate i always
draws from stream i of the master seed, so results are identical for any
worker count; the reduction step sorts records canonically before writing.

Experiment kinds
    threshold-error   simulate, estimate thresholds by MLE and Bayes,
                      compare normalized error variances with the
                      predicted limit scales
    joint-tou3        three-parameter fit (two rates and one threshold)
    gof-size          batch goodness-of-fit statistics under the null or
                      a contaminated alternative
    misspec-sweep     contaminated-trend consistency study
    limit-moments     direct draws of the limit variables (uhat, utilde)

Per-replicate failures (blowup, starved regime, boundary hit) are recorded
and discarded; a rate above 10% aborts with FailureRateExceeded.
"""
from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from . import gof, limitlaws, misspec, models
from .errors import (BoundaryHit, ConfigError, EmptyBox, FailureRateExceeded,
                     NumericalBlowup, QuadratureFailure, RegimeStarved)
from .estimators import (bayes_threshold, joint_estimate_tou3, mle_threshold)
from .simulate import RngStream, Stationary, simulate_path

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "build_tables",
    "config_from_json",
    "DEFAULT_ALPHAS",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
KINDS = ("threshold-error", "joint-tou3", "gof-size", "misspec-sweep",
         "limit-moments", "tables")
FAILURE_LIMIT = 0.10
_DISCARDABLE = (NumericalBlowup, RegimeStarved, BoundaryHit, EmptyBox,
                QuadratureFailure)

# dense enough for table lookups at the usual test levels
DEFAULT_ALPHAS = tuple(
    sorted(set(np.round(np.arange(0.005, 0.9951, 0.005), 4)) | {0.025}))


def _package_version() -> str:
    try:
        from importlib.metadata import version
        return version("threshdiff")
    except Exception:
        return "unknown"


def _norm_box_list(value, name):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2 or np.any(arr[:, 0] >= arr[:, 1]):
        raise ConfigError(f"{name}: expected [lo, hi] pairs with lo < hi")
    return tuple((float(a), float(b)) for a, b in arr)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: dict | None = None
    box: tuple | None = None
    rate_boxes: tuple | None = None
    threshold_box: tuple | None = None
    T_list: tuple = ()
    dt: float = 1e-3
    replicates: int = 1
    seed: int = 0
    workers: int = 1
    out: str | None = None
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: unknown experiment {self.kind!r}; "
                              f"expected one of {KINDS}")
        if self.replicates < 1:
            raise ConfigError("replicates: must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt: must be > 0")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        object.__setattr__(self, "T_list",
                           tuple(float(t) for t in self.T_list))
        if any(t <= 0 for t in self.T_list):
            raise ConfigError("T: horizons must be > 0")
        object.__setattr__(self, "box", _norm_box_list(self.box, "box"))
        object.__setattr__(self, "rate_boxes",
                           _norm_box_list(self.rate_boxes, "rate_boxes"))
        tb = _norm_box_list(self.threshold_box, "threshold_box")
        object.__setattr__(self, "threshold_box", tb[0] if tb else None)
        needs_model = self.kind in ("threshold-error", "joint-tou3",
                                    "gof-size", "misspec-sweep")
        if needs_model:
            if self.model is None:
                raise ConfigError(f"model: required for kind {self.kind!r}")
            self.model_spec()  # validate eagerly
            if not self.T_list:
                raise ConfigError("T: at least one horizon required")
        if self.kind == "threshold-error" and self.box is None:
            raise ConfigError("box: required for threshold-error")
        if self.kind == "joint-tou3" and (self.rate_boxes is None
                                          or self.threshold_box is None):
            raise ConfigError("joint-tou3 needs rate_boxes and threshold_box")
        if self.kind == "gof-size" and self.flags.get("composite") \
                and self.box is None:
            raise ConfigError("box: required for composite gof-size")
        if self.kind == "misspec-sweep":
            if self.box is None:
                raise ConfigError("box: required for misspec-sweep")
            if "contamination" not in self.flags:
                raise ConfigError("flags.contamination: required for "
                                  "misspec-sweep")

    def model_spec(self):
        try:
            return models.model_from_dict(self.model)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"model: {exc}") from exc

    def semantic_dict(self) -> dict:
        # everything that affects the numbers; out and workers do not
        return {
            "kind": self.kind, "model": self.model, "box": self.box,
            "rate_boxes": self.rate_boxes,
            "threshold_box": self.threshold_box, "T": self.T_list,
            "dt": self.dt, "replicates": self.replicates, "seed": self.seed,
            "flags": self.flags,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True,
                          default=_json_default)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def to_json(self) -> str:
        d = dict(self.semantic_dict())
        d["workers"] = self.workers
        if self.out is not None:
            d["out"] = self.out
        return json.dumps(d, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")


def config_from_json(source) -> ExperimentConfig:
    """Build a config from a JSON string, dict, or file path."""
    if isinstance(source, dict):
        d = dict(source)
    else:
        if isinstance(source, FsPath):
            text = source.read_text()
        elif source.lstrip().startswith("{"):
            text = source
        else:
            p = FsPath(source)
            if not p.exists():
                raise ConfigError(f"config file not found: {source}")
            text = p.read_text()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    known = {"kind", "model", "box", "rate_boxes", "threshold_box", "T",
             "dt", "replicates", "seed", "workers", "out", "flags"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")
    if "kind" not in d:
        raise ConfigError("kind: required")
    return ExperimentConfig(
        kind=d["kind"], model=d.get("model"), box=d.get("box"),
        rate_boxes=d.get("rate_boxes"), threshold_box=d.get("threshold_box"),
        T_list=tuple(d.get("T", ())), dt=float(d.get("dt", 1e-3)),
        replicates=int(d.get("replicates", 1)), seed=int(d.get("seed", 0)),
        workers=int(d.get("workers", 1)), out=d.get("out"),
        flags=dict(d.get("flags", {})),
    )


def contamination_from_flags(flags: dict) -> misspec.Contamination:
    spec = flags.get("contamination")
    if not isinstance(spec, dict):
        raise ConfigError("flags.contamination: expected an object")
    if "table" in spec:
        return misspec.contamination_from_csv(spec["table"])
    family = spec.get("family")
    args = spec.get("args", [])
    makers = {
        "linear": misspec.Contamination.linear,
        "banded_linear": misspec.Contamination.banded_linear,
        "two_regime_linear": misspec.Contamination.two_regime_linear,
    }
    if family not in makers:
        raise ConfigError(
            f"flags.contamination.family: unknown {family!r}; "
            f"expected one of {sorted(makers)} or a table path")
    try:
        return makers[family](*[float(a) for a in args])
    except TypeError as exc:
        raise ConfigError(f"flags.contamination.args: {exc}") from exc


# ---------------------------------------------------------------------------
# replicate workers.  Each runs independently from RngStream(seed, stream).

_WORKER_CFG: ExperimentConfig | None = None


def _init_worker(config_json: str) -> None:
    global _WORKER_CFG
    _WORKER_CFG = config_from_json(config_json)


def _run_task(task):
    ti, T, r, stream = task
    cfg = _WORKER_CFG
    rng = RngStream(cfg.seed, stream)
    base = {"T": T, "replicate": r, "status": "ok"}
    try:
        if cfg.kind == "threshold-error":
            base.update(_threshold_error_record(cfg, T, rng))
        elif cfg.kind == "joint-tou3":
            base.update(_joint_tou3_record(cfg, T, rng))
        elif cfg.kind == "gof-size":
            base.update(_gof_record(cfg, T, rng))
    except _DISCARDABLE as exc:
        base["status"] = f"fail:{type(exc).__name__}"
    return base


def _sim(cfg: ExperimentConfig, model, T, rng):
    return simulate_path(model, T, cfg.dt, rng, init=Stationary(),
                         guard=float(cfg.flags.get("guard", 1e6)))


def _threshold_error_record(cfg: ExperimentConfig, T, rng) -> dict:
    model = cfg.model_spec()
    truth = model.thresholds
    path = _sim(cfg, model, T, rng)
    which = cfg.flags.get("estimators", ["mle", "bayes"])
    rec = {}
    if "mle" in which:
        est = mle_threshold(path, model, cfg.box, truth=truth)
        for j, (v, e) in enumerate(zip(est.thresholds, est.scaled_errors)):
            rec[f"mle_{j}"] = v
            rec[f"terr_mle_{j}"] = e
    if "bayes" in which:
        est = bayes_threshold(path, model, cfg.box, truth=truth)
        for j, (v, e) in enumerate(zip(est.thresholds, est.scaled_errors)):
            rec[f"bayes_{j}"] = v
            rec[f"terr_bayes_{j}"] = e
    return rec


def _joint_tou3_record(cfg: ExperimentConfig, T, rng) -> dict:
    model = cfg.model_spec()
    if not isinstance(model, models.TOU):
        raise ConfigError("joint-tou3 requires a TOU model")
    truth = (model.rho1, model.rho2, model.theta)
    path = _sim(cfg, model, T, rng)
    est = joint_estimate_tou3(path, model.sigma, cfg.rate_boxes,
                              cfg.threshold_box, truth=truth)
    r1, r2 = est.rates
    return {
        "rho1": r1, "rho2": r2, "theta": est.thresholds[0],
        "serr_rho1": est.scaled_errors[0], "serr_rho2": est.scaled_errors[1],
        "terr_theta": est.scaled_errors[2],
    }


def _gof_record(cfg: ExperimentConfig, T, rng) -> dict:
    model = cfg.model_spec()
    if "contamination" in cfg.flags:
        h = contamination_from_flags(cfg.flags)
        sim_model = misspec.contaminated_model(model, h)
    else:
        sim_model = model
    path = _sim(cfg, sim_model, T, rng)
    stats = cfg.flags.get("stats", ["w2", "d", "v2"])
    rec = {}
    for s in stats:
        rec[s] = gof._stat_value(path, model, s)
    if cfg.flags.get("composite"):
        plug = cfg.flags.get("plugin", "mle")
        fit = {"mle": mle_threshold, "bayes": bayes_threshold}[plug](
            path, model, cfg.box)
        fitted = models.with_thresholds(model, fit.thresholds)
        for j, v in enumerate(fit.thresholds):
            rec[f"plug_theta_{j}"] = v
        for s in stats:
            rec[f"{s}_plug"] = gof._stat_value(path, fitted, s)
    return rec


# ---------------------------------------------------------------------------
# reduction

@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    config_hash: str
    seed: int
    records: list = field(repr=False)
    columns: tuple = ()
    aggregates: dict = field(default_factory=dict)
    discards: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def failures(self) -> int:
        return len(self.discards)

    def to_json(self) -> str:
        d = {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "n_records": len(self.records),
            "failures": self.failures,
            "discards": self.discards,
            "aggregates": self.aggregates,
            "environment": self.environment,
            "elapsed_seconds": round(self.elapsed, 3),
        }
        return json.dumps(d, indent=2, default=_json_default)


def _record_columns(records) -> tuple:
    cols = ["T", "replicate", "status"]
    seen = dict.fromkeys(cols)
    for rec in records:
        for k in rec:
            if k not in seen:
                seen[k] = None
    return tuple(seen)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_records_csv(report: ExperimentReport, fname) -> None:
    with open(fname, "w", newline="") as fh:
        fh.write(f"# threshdiff v{FORMAT_VERSION} "
                 f"config={report.config_hash} seed={report.seed}\n")
        w = csv.writer(fh)
        w.writerow(report.columns)
        for rec in report.records:
            w.writerow([_fmt(rec.get(c)) for c in report.columns])


def _environment() -> dict:
    return {
        "package": _package_version(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
    }


def _var(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.var(a, ddof=1)) if a.size > 1 else float("nan")


def _aggregate_threshold_error(cfg, records) -> dict:
    model = cfg.model_spec()
    k = len(model.thresholds)
    flags_variant = cfg.flags.get("gamma_variant", "general")
    pred = {}
    for j in range(k):
        scale_hat, scale_til = limitlaws.predicted_error_scale(
            model, j, variant=flags_variant)
        pred[f"component_{j}"] = {"mle": scale_hat, "bayes": scale_til,
                                  "gamma_sq": models.gamma_sq(
                                      model, j, variant=flags_variant)}
    out = {"predicted_scaled_variance": pred, "variant": flags_variant}
    if isinstance(model, models.TOU):
        alt = "damped" if flags_variant == "general" else "general"
        a_hat, a_til = limitlaws.predicted_error_scale(model, 0, variant=alt)
        out["alternate_variant"] = {
            "variant": alt, "mle": a_hat, "bayes": a_til,
            "gamma_sq": models.gamma_sq(model, 0, variant=alt)}
    per_T = {}
    for T in cfg.T_list:
        ok = [r for r in records if r["T"] == T and r["status"] == "ok"]
        entry = {"n_ok": len(ok)}
        for est in ("mle", "bayes"):
            if ok and f"terr_{est}_0" in ok[0]:
                errs = np.array([[r[f"terr_{est}_{j}"] for j in range(k)]
                                 for r in ok])
                entry[est] = {
                    f"component_{j}": {
                        "mean": float(np.mean(errs[:, j])),
                        "variance": _var(errs[:, j]),
                    } for j in range(k)}
                if k > 1:
                    c = np.corrcoef(errs, rowvar=False)
                    entry[est]["max_abs_cross_corr"] = float(
                        np.max(np.abs(c[~np.eye(k, dtype=bool)])))
        per_T[f"T={T:g}"] = entry
    out["per_horizon"] = per_T
    return out


def _aggregate_joint_tou3(cfg, records) -> dict:
    model = cfg.model_spec()
    pred = {
        "rho1": models.rate_error_variance(model, 0),
        "rho2": models.rate_error_variance(model, 1),
        "theta_mle": limitlaws.predicted_error_scale(model, 0)[0],
    }
    per_T = {}
    for T in cfg.T_list:
        ok = [r for r in records if r["T"] == T and r["status"] == "ok"]
        entry = {"n_ok": len(ok)}
        if ok:
            s1 = np.array([r["serr_rho1"] for r in ok])
            s2 = np.array([r["serr_rho2"] for r in ok])
            st = np.array([r["terr_theta"] for r in ok])
            entry.update({
                "var_serr_rho1": _var(s1),
                "var_serr_rho2": _var(s2),
                "var_terr_theta": _var(st),
                "corr_rho1_rho2": float(np.corrcoef(s1, s2)[0, 1]),
            })
        per_T[f"T={T:g}"] = entry
    return {"predicted": pred, "per_horizon": per_T}


def _aggregate_gof(cfg, records) -> dict:
    stats = cfg.flags.get("stats", ["w2", "d", "v2"])
    alphas = cfg.flags.get("alphas", [0.01, 0.05, 0.10])
    tables_dir = cfg.flags.get("tables")
    tables = {}
    if tables_dir:
        for s in stats:
            fname = FsPath(tables_dir) / f"{gof._STAT_TABLE[s]}.csv"
            if fname.exists():
                tables[s] = limitlaws.read_table(fname)
    out = {"n_ok": 0, "rejection_rates": {}, "ks_distance": {}}
    ok = [r for r in records if r["status"] == "ok"]
    out["n_ok"] = len(ok)
    if not ok:
        return out
    for s in stats:
        cols = [s] + ([f"{s}_plug"] if cfg.flags.get("composite") else [])
        for col in cols:
            if col not in ok[0]:
                continue
            vals = np.array([r[col] for r in ok])
            out.setdefault("medians", {})[col] = float(np.median(vals))
            if s in tables:
                rates = {
                    f"alpha={a:g}": float(np.mean(
                        vals > tables[s].threshold(a))) for a in alphas}
                out["rejection_rates"][col] = rates
                out["ks_distance"][col] = gof.ks_distance_to_table(
                    vals, tables[s])
    return out


def _aggregate_misspec(cfg, records, extra) -> dict:
    out = dict(extra)
    per_T = {}
    for T in cfg.T_list:
        ok = [r for r in records if r["T"] == T and r["status"] == "ok"]
        vals = np.array([r["theta_hat"] for r in ok])
        per_T[f"T={T:g}"] = {
            "n_ok": len(ok),
            "median_theta_hat": float(np.median(vals)) if len(ok) else None,
        }
    out["per_horizon"] = per_T
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run all replicates, reduce, optionally write report + records CSV.

    Deterministic for fixed (config, seed): replicate r at horizon index
    ti uses stream ti * replicates + r regardless of the worker count.
    """
    t_start = time.perf_counter()
    if config.kind == "tables":
        written = build_tables(config)
        return ExperimentReport(
            kind=config.kind, config_hash=config.config_hash(),
            seed=config.seed, records=[], aggregates={"tables": written},
            environment=_environment(),
            elapsed=time.perf_counter() - t_start)
    if config.kind == "limit-moments":
        report = _run_limit_moments(config, t_start)
    elif config.kind == "misspec-sweep":
        report = _run_misspec(config, t_start)
    else:
        tasks = [(ti, T, r, ti * config.replicates + r)
                 for ti, T in enumerate(config.T_list)
                 for r in range(config.replicates)]
        if config.workers == 1:
            _init_worker(config.to_json())
            results = [_run_task(t) for t in tasks]
        else:
            with ProcessPoolExecutor(
                    max_workers=config.workers,
                    initializer=_init_worker,
                    initargs=(config.to_json(),)) as pool:
                results = list(pool.map(_run_task, tasks, chunksize=16))
        results.sort(key=lambda r: (r["T"], r["replicate"]))
        discards = [{"T": r["T"], "replicate": r["replicate"],
                     "reason": r["status"]}
                    for r in results if r["status"] != "ok"]
        if len(discards) > FAILURE_LIMIT * len(results):
            raise FailureRateExceeded(len(discards), len(results),
                                      FAILURE_LIMIT)
        agg = {
            "threshold-error": _aggregate_threshold_error,
            "joint-tou3": _aggregate_joint_tou3,
            "gof-size": _aggregate_gof,
        }[config.kind](config, results)
        report = ExperimentReport(
            kind=config.kind, config_hash=config.config_hash(),
            seed=config.seed, records=results,
            columns=_record_columns(results), aggregates=agg,
            discards=discards, environment=_environment(),
            elapsed=time.perf_counter() - t_start)
    if config.out:
        write_report(report, config.out)
    return report


def _run_limit_moments(config: ExperimentConfig, t_start) -> ExperimentReport:
    flags = config.flags
    size = int(flags.get("size", config.replicates))
    pair = limitlaws.sample_uhat_utilde(
        RngStream(config.seed, 0).generator(), size,
        U=float(flags.get("U", 60.0)), h=float(flags.get("h", 0.01)))
    uhat, util = pair[0].samples, pair[1].samples
    records = [{"T": 0.0, "replicate": i, "status": "ok",
                "uhat": float(a), "utilde": float(b)}
               for i, (a, b) in enumerate(zip(uhat, util))]
    m2_hat, m2_til = float(np.mean(uhat ** 2)), float(np.mean(util ** 2))
    agg = {
        "n_draws": size,
        "uhat_sq_mean": m2_hat,
        "uhat_sq_se": float(np.std(uhat ** 2, ddof=1) / np.sqrt(size)),
        "utilde_sq_mean": m2_til,
        "utilde_sq_se": float(np.std(util ** 2, ddof=1) / np.sqrt(size)),
        "targets": {"uhat_sq": limitlaws.UHAT_SECOND_MOMENT,
                    "utilde_sq": limitlaws.UTILDE_SECOND_MOMENT},
        "boundary_discards": pair[0].discarded,
    }
    return ExperimentReport(
        kind=config.kind, config_hash=config.config_hash(),
        seed=config.seed, records=records,
        columns=("T", "replicate", "status", "uhat", "utilde"),
        aggregates=agg, environment=_environment(),
        elapsed=time.perf_counter() - t_start)


def _run_misspec(config: ExperimentConfig, t_start) -> ExperimentReport:
    model = config.model_spec()
    if not isinstance(model, models.TOU):
        raise ConfigError("misspec-sweep requires a TOU model")
    h = contamination_from_flags(config.flags)
    rep = misspec.misspec_experiment(
        model, h, config.box[0], config.T_list, config.replicates,
        RngStream(config.seed, 0), dt=config.dt,
        kl_grid=int(config.flags.get("kl_grid", 241)))
    records = []
    discards = []
    for T in config.T_list:
        vals = rep.estimates[float(T)]
        for r, v in enumerate(vals):
            ok = np.isfinite(v)
            records.append({"T": T, "replicate": r,
                            "status": "ok" if ok else "fail:discarded",
                            "theta_hat": float(v) if ok else None})
            if not ok:
                discards.append({"T": T, "replicate": r,
                                 "reason": "fail:discarded"})
    if len(discards) > FAILURE_LIMIT * len(records):
        raise FailureRateExceeded(len(discards), len(records), FAILURE_LIMIT)
    agg = _aggregate_misspec(config, records, {
        "contamination": h.tag,
        "kl_argmin": rep.kl.argmin,
        "theta0": model.theta,
        "condition7": {"ok": rep.condition7.ok,
                       "margin": rep.condition7.margin,
                       "worst_y": rep.condition7.worst_y},
    })
    return ExperimentReport(
        kind=config.kind, config_hash=config.config_hash(),
        seed=config.seed, records=records,
        columns=("T", "replicate", "status", "theta_hat"),
        aggregates=agg, discards=discards, environment=_environment(),
        elapsed=time.perf_counter() - t_start)


def write_report(report: ExperimentReport, out_dir) -> None:
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    write_records_csv(report, out / "replicates.csv")


# ---------------------------------------------------------------------------
# quantile tables

def _file_sha256(fname) -> str:
    return hashlib.sha256(FsPath(fname).read_bytes()).hexdigest()


def build_tables(config: ExperimentConfig) -> dict:
    """Monte Carlo quantile tables for the limit statistics.

    Writes one CSV per tag plus a JSON sidecar with the seed, the draw
    counts and a checksum; rebuilding with the same config is identical.
    Returns {tag: csv path}.
    """
    if config.out is None:
        raise ConfigError("out: required for table building")
    flags = config.flags
    tags = flags.get("tags", list(limitlaws.FUNCTIONAL_TAGS))
    unknown = set(tags) - set(limitlaws.FUNCTIONAL_TAGS)
    if unknown:
        raise ConfigError(f"flags.tags: unknown tags {sorted(unknown)}")
    alphas = flags.get("alphas", DEFAULT_ALPHAS)
    replicates = int(flags.get("size", config.replicates))
    out = FsPath(config.out)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for idx, tag in enumerate(limitlaws.FUNCTIONAL_TAGS):
        if tag not in tags:
            continue
        rng = RngStream(config.seed, 1000 + idx).generator()
        kw = {}
        if tag in ("ArgmaxU", "BayesU"):
            kw = {"U": float(flags.get("U", 60.0)),
                  "h": float(flags.get("h", 0.01))}
        else:
            kw = {"grid_step": float(flags.get("grid_step", 1e-3))}
        table = limitlaws.quantile_table(tag, alphas, replicates, rng, **kw)
        fname = out / f"{tag}.csv"
        limitlaws.write_table(table, fname)
        sidecar = {
            "format_version": FORMAT_VERSION,
            "tag": tag,
            "replicates": replicates,
            "n_alphas": len(table.alphas),
            "grid": table.grid,
            "seed": config.seed,
            "config_hash": config.config_hash(),
            "sha256": _file_sha256(fname),
            "environment": _environment(),
        }
        (out / f"{tag}.json").write_text(
            json.dumps(sidecar, indent=2, default=_json_default) + "\n")
        written[tag] = str(fname)
    return written
