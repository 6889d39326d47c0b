"""Command-line front end: single runs, fault/bias sweeps, offline metrics.

Exit codes: 0 success, 2 invalid input (config, arguments, records file),
3 filter failure during a run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import csvio
from .config import dump_config, load_config
from .errors import ConfigError, ScenarioError
from .metrics import DEFAULT_RISK_THRESHOLD, compute_metrics
from .pipeline import run_scenario
from .scenario import ScenarioConfig

log = logging.getLogger("pfintegrity")

WORKERS_ENV = "PFINTEGRITY_WORKERS"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, cfg: ScenarioConfig, seeds, files, extra=None):
    manifest = {
        "config": cfg.as_dict(),
        "seeds": list(seeds),
        "out_dir": str(out_dir),
        "files": {str(Path(f).relative_to(out_dir)): sha256(f) for f in files},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def verify_manifest(out_dir) -> bool:
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    return all(sha256(out_dir / name) == digest for name, digest in manifest["files"].items())


def run_to_dir(cfg: ScenarioConfig, out_dir: Path) -> list[list[str]]:
    """Run one scenario, write its epochs.csv and metrics.csv, return the metrics rows.

    Metrics are computed from the emitted CSV so offline recomputation matches exactly.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_scenario(cfg)
    epochs_path = out_dir / "epochs.csv"
    csvio.write_epochs(epochs_path, records, cfg.alert_limits)
    report = compute_metrics(csvio.read_epochs(epochs_path), cfg.risk_threshold, cfg.alert_limits)
    rows = csvio.metrics_rows(report, cfg.mode, cfg.gnss_bias, cfg.num_gnss_faults, cfg.seed)
    csvio.write_metrics(out_dir / "metrics.csv", rows)
    return rows


def cmd_run(config_path, out_dir, seed_override=None) -> int:
    try:
        cfg = load_config(config_path)
        if seed_override is not None:
            cfg = replace(cfg, seed=seed_override).validate()
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_INVALID
    out_dir = Path(out_dir)
    try:
        run_to_dir(cfg, out_dir)
    except ScenarioError as exc:
        log.error("run failed at epoch %d: %s", exc.epoch, exc)
        return EXIT_RUNTIME
    write_manifest(out_dir, cfg, [cfg.seed], [out_dir / "epochs.csv", out_dir / "metrics.csv"])
    return EXIT_OK


def parse_seeds(text: str) -> list[int]:
    """``"0..19"`` (inclusive), ``"1,3,5"`` or a mix; duplicates dropped with a warning."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    unique = list(dict.fromkeys(seeds))
    if len(unique) != len(seeds):
        log.warning("duplicate seeds dropped: %d given, %d unique", len(seeds), len(unique))
    return unique


def parse_list(text: str, kind=float) -> list:
    return [kind(v) for v in text.split(",") if v.strip()]


def _cell_name(cfg: ScenarioConfig) -> str:
    return f"{cfg.mode}_b{cfg.gnss_bias:g}_f{cfg.num_gnss_faults}_s{cfg.seed}"


def _sweep_job(args):
    cfg, cells_dir = args
    return run_to_dir(cfg, Path(cells_dir) / _cell_name(cfg))


def sweep_configs(base: ScenarioConfig, biases, faults, seeds) -> list[ScenarioConfig]:
    return [
        replace(base, gnss_bias=b, num_gnss_faults=f, seed=s, fusion=fusion).validate()
        for b in biases
        for f in faults
        for s in seeds
        for fusion in (True, False)
    ]


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def aggregate_rows(rows) -> list[list[str]]:
    """Per (mode, bias, faults, alert_limit) means over seeds; absent values skipped."""
    cols = csvio.METRICS_COLUMNS
    groups: dict[tuple, list] = {}
    for row in rows:
        rec = dict(zip(cols, row))
        key = (rec["mode"], rec["bias"], rec["faults"], rec["alert_limit"])
        groups.setdefault(key, []).append(rec)
    out = []
    for key, recs in groups.items():
        line = list(key) + [str(len(recs))]
        for name in ["rmse"] + csvio.LIMIT_FIELDS:
            vals = [float(r[name]) for r in recs if r[name] != ""]
            line.append(csvio.fmt(np.mean(vals)) if vals else "")
        out.append(line)
    return out


AGGREGATE_COLUMNS = ["mode", "bias", "faults", "alert_limit", "n_seeds", "rmse"] + csvio.LIMIT_FIELDS


def cmd_sweep(config_path, bias_list, fault_list, seeds, out_dir, workers=None) -> int:
    if not bias_list or not fault_list or not seeds:
        log.error("bias, fault and seed lists must be nonempty")
        return EXIT_INVALID
    try:
        base = load_config(config_path)
        configs = sweep_configs(base, bias_list, fault_list, seeds)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_INVALID
    out_dir = Path(out_dir)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, str(cells_dir)) for cfg in configs]
    workers = workers or worker_count()
    try:
        if workers == 1:
            results = [_sweep_job(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_job, jobs))
    except ScenarioError as exc:
        log.error("sweep cell failed at epoch %d: %s", exc.epoch, exc)
        return EXIT_RUNTIME
    rows = [row for cell in results for row in cell]
    csvio.write_metrics(out_dir / "metrics.csv", rows)
    agg_path = out_dir / "aggregate.csv"
    csvio.write_csv(agg_path, AGGREGATE_COLUMNS, aggregate_rows(rows))
    files = [out_dir / "metrics.csv", agg_path]
    for cfg in configs:
        files += [cells_dir / _cell_name(cfg) / n for n in ("epochs.csv", "metrics.csv")]
    write_manifest(out_dir, base, seeds, files,
                   {"bias": list(bias_list), "faults": list(fault_list)})
    return EXIT_OK


def cmd_metrics(records_path, alert_limit, threshold=DEFAULT_RISK_THRESHOLD, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        records = csvio.read_epochs(records_path)
    except (OSError, ValueError) as exc:
        log.error("cannot read records: %s", exc)
        return EXIT_INVALID
    if alert_limit not in records[0].bounds:
        log.error("alert limit %g not in records (have %s)", alert_limit,
                  ", ".join(f"{r:g}" for r in records[0].bounds))
        return EXIT_INVALID
    report = compute_metrics(records, threshold, [alert_limit])
    lm = report.per_limit[alert_limit]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["alert_limit", "rmse"] + csvio.LIMIT_FIELDS)
    writer.writerow([csvio.fmt(alert_limit), csvio.fmt(report.rmse)]
                    + [csvio.fmt(getattr(lm, f)) for f in csvio.LIMIT_FIELDS])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfintegrity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sweep", help="run a bias x fault-count grid in both modes")
    p.add_argument("config")
    p.add_argument("--bias", default="100,200")
    p.add_argument("--faults", default="2,4,6,9")
    p.add_argument("--seeds", default="0..19")
    p.add_argument("--out", required=True)

    p = sub.add_parser("metrics", help="recompute metrics from an epochs.csv")
    p.add_argument("records")
    p.add_argument("--alert-limit", type=float, required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_RISK_THRESHOLD)

    sub.add_parser("default-config", help="print the default scenario config")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "sweep":
        try:
            biases = parse_list(args.bias)
            faults = parse_list(args.faults, int)
            seeds = parse_seeds(args.seeds)
        except ValueError as exc:
            log.error("bad list argument: %s", exc)
            return EXIT_INVALID
        return cmd_sweep(args.config, biases, faults, seeds, args.out)
    if args.command == "metrics":
        return cmd_metrics(args.records, args.alert_limit, args.threshold)
    print(dump_config(ScenarioConfig()), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
