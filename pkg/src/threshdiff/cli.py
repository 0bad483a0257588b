"""Command line front end.

Every subcommand reads a JSON config (--config) and writes its outputs
under --out (or the config's own "out" entry).  --seed and --workers
override the config.  Exit codes: 0 success, 2 config error, 3 replicate
failure rate above the cap.

Subcommands
    simulate    one path -> CSV + sidecar
    estimate    fit thresholds/rates on a stored path -> JSON
    gof         goodness-of-fit report for a stored path -> JSON
    limit-law   draws of a limit functional -> CSV + summary JSON
    tables      Monte Carlo quantile tables -> CSV + checksum sidecars
    misspec     contaminated-trend sweep (harness kind misspec-sweep)
    experiment  any harness experiment kind
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import gof as gofmod
from . import harness, limitlaws, models
from .errors import ConfigError, FailureRateExceeded, ThreshDiffError
from .estimators import (bayes_threshold, estimate_to_json,
                         joint_estimate_tou3, mle_threshold, mom_switching,
                         two_stage_estimate, windowed_mle_switching)
from .simulate import (Burnin, Fixed, RngStream, Stationary, path_from_csv,
                       path_to_csv, simulate_path)

__all__ = ["main"]


def _load_config(args) -> dict:
    if not args.config:
        raise ConfigError("--config PATH is required")
    p = FsPath(args.config)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.out is not None:
        cfg["out"] = args.out
    return cfg


def _out_dir(cfg: dict) -> FsPath:
    out = cfg.get("out")
    if not out:
        raise ConfigError("out: an output directory is required "
                          "(config \"out\" or --out)")
    p = FsPath(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _model_of(cfg: dict):
    if "model" not in cfg:
        raise ConfigError("model: required")
    try:
        return models.model_from_dict(cfg["model"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _init_of(cfg: dict):
    spec = cfg.get("init", {"kind": "stationary"})
    kind = spec.get("kind")
    if kind == "stationary":
        return Stationary()
    if kind == "fixed":
        return Fixed(float(spec.get("x0", 0.0)))
    if kind == "burnin":
        return Burnin(float(spec["duration"]), float(spec.get("x0", 0.0)))
    raise ConfigError(f"init.kind: unknown {kind!r}")


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    model = _model_of(cfg)
    for key in ("T", "dt"):
        if key not in cfg:
            raise ConfigError(f"{key}: required")
    out = _out_dir(cfg)
    rng = RngStream(int(cfg.get("seed", 0)), int(cfg.get("stream", 0)))
    path = simulate_path(model, float(cfg["T"]), float(cfg["dt"]), rng,
                         init=_init_of(cfg))
    fname = out / cfg.get("name", "path.csv")
    path_to_csv(path, fname)
    print(f"wrote {fname} ({path.n_steps} steps)")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _load_config(args)
    model = _model_of(cfg)
    if "path" not in cfg:
        raise ConfigError("path: a stored path CSV is required")
    path = path_from_csv(cfg["path"])
    method = cfg.get("method", "mle")
    truth = cfg.get("truth")
    if method == "mle":
        est = mle_threshold(path, model, cfg["box"], truth=truth)
    elif method == "bayes":
        est = bayes_threshold(path, model, cfg["box"], truth=truth)
    elif method == "joint3":
        est = joint_estimate_tou3(path, model.sigma, cfg["rate_boxes"],
                                  cfg["threshold_box"], truth=truth)
    elif method == "two_stage":
        est = two_stage_estimate(path, model.sigma, cfg["rate_boxes"],
                                 cfg["threshold_box"], truth=truth)
    elif method == "mom":
        est = mom_switching(path, truth=truth)
    elif method == "windowed":
        est = windowed_mle_switching(path, model.rho, model.sigma,
                                     cfg["box"],
                                     window=cfg.get("window", "auto"),
                                     truth=truth)
    else:
        raise ConfigError(f"method: unknown {method!r}")
    out = _out_dir(cfg)
    fname = out / cfg.get("name", "estimate.json")
    estimate_to_json(est, fname)
    vals = ", ".join(f"{v:.6g}" for v in est.thresholds)
    print(f"{method} thresholds: {vals} -> {fname}")
    return 0


def _cmd_gof(args) -> int:
    cfg = _load_config(args)
    model = _model_of(cfg)
    if "path" not in cfg:
        raise ConfigError("path: a stored path CSV is required")
    path = path_from_csv(cfg["path"])
    stat = cfg.get("statistic", "w2")
    alpha = float(cfg.get("alpha", 0.05))
    tables_dir = FsPath(args.tables or cfg.get("tables", "tables"))
    tag = gofmod.table_tag(stat)
    tab_file = tables_dir / f"{tag}.csv"
    if not tab_file.exists():
        raise ConfigError(
            f"quantile table {tab_file} not found; build it with "
            f"`threshdiff tables` or pass --tables DIR")
    table = limitlaws.read_table(tab_file)
    if cfg.get("composite"):
        report = gofmod.composite_test(path, model, cfg["box"], alpha,
                                       table, statistic=stat,
                                       estimator=cfg.get("plugin", "mle"))
    else:
        report = gofmod.gof_test(path, model, alpha, table, statistic=stat)
    out = _out_dir(cfg)
    fname = out / cfg.get("name", "gof.json")
    FsPath(fname).write_text(report.to_json() + "\n")
    print(f"{stat}={report.value:.6g} threshold={report.threshold:.6g} "
          f"-> {'reject' if report.reject else 'accept'} ({fname})")
    return 0


def _cmd_limit_law(args) -> int:
    cfg = _load_config(args)
    tag = cfg.get("tag", "ArgmaxU")
    size = int(cfg.get("size", 10000))
    rng = RngStream(int(cfg.get("seed", 0)), 0).generator()
    if tag in ("ArgmaxU", "BayesU"):
        pair = limitlaws.sample_uhat_utilde(
            rng, size, U=float(cfg.get("U", 60.0)),
            h=float(cfg.get("h", 0.01)))
        ls = pair[0 if tag == "ArgmaxU" else 1]
    elif tag in limitlaws.FUNCTIONAL_TAGS:
        ls = limitlaws.sample_brownian_functional(
            tag, rng, size, grid_step=float(cfg.get("grid_step", 1e-3)))
    else:
        raise ConfigError(f"tag: unknown {tag!r}; expected one of "
                          f"{limitlaws.FUNCTIONAL_TAGS}")
    out = _out_dir(cfg)
    fname = out / f"{tag}_samples.csv"
    with open(fname, "w") as fh:
        fh.write("draw,value\n")
        for i, v in enumerate(ls.samples):
            fh.write(f"{i},{v:.17g}\n")
    summary = {
        "tag": tag, "size": size, "mean": float(np.mean(ls.samples)),
        "second_moment": float(np.mean(ls.samples ** 2)),
        "variance": float(np.var(ls.samples, ddof=1)),
        "discarded": ls.discarded,
    }
    (out / f"{tag}_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n")
    print(f"{tag}: {size} draws, second moment "
          f"{summary['second_moment']:.4f} -> {fname}")
    return 0


def _cmd_tables(args) -> int:
    cfg = _load_config(args)
    cfg.setdefault("kind", "tables")
    written = harness.build_tables(harness.config_from_json(cfg))
    for tag, fname in written.items():
        print(f"{tag} -> {fname}")
    return 0


def _cmd_experiment(args, forced_kind=None) -> int:
    cfg = _load_config(args)
    if forced_kind is not None:
        cfg.setdefault("kind", forced_kind)
        if cfg["kind"] != forced_kind:
            raise ConfigError(f"kind: this subcommand runs "
                              f"{forced_kind!r}, got {cfg['kind']!r}")
    config = harness.config_from_json(cfg)
    if config.kind == "tables":
        written = harness.build_tables(config)
        for tag, fname in written.items():
            print(f"{tag} -> {fname}")
        return 0
    report = harness.run_experiment(config)
    n = len(report.records)
    print(f"{config.kind}: {n} records, {report.failures} discarded, "
          f"{report.elapsed:.1f}s"
          + (f" -> {config.out}" if config.out else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="threshdiff",
        description="Simulation and inference for threshold diffusions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, tables_flag=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=False,
                       help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--workers", type=int, default=None,
                       help="override the worker count")
        p.add_argument("--out", default=None,
                       help="override the output directory")
        if tables_flag:
            p.add_argument("--tables", default=None,
                           help="quantile table directory")
        p.set_defaults(fn=fn)
        return p

    add("simulate", _cmd_simulate, "simulate one path to CSV")
    add("estimate", _cmd_estimate, "estimate parameters from a path CSV")
    add("gof", _cmd_gof, "goodness-of-fit test for a path CSV",
        tables_flag=True)
    add("limit-law", _cmd_limit_law, "draw limit-law samples")
    add("tables", _cmd_tables, "build Monte Carlo quantile tables")
    add("misspec", lambda a: _cmd_experiment(a, "misspec-sweep"),
        "contaminated-trend consistency sweep")
    add("experiment", _cmd_experiment, "run a config-driven experiment")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = 2
    except FailureRateExceeded as exc:
        print(f"failure rate exceeded: {exc}", file=sys.stderr)
        code = 3
    except ThreshDiffError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = 1
    if argv is None:
        sys.exit(code)
    return code
