"""Command-line front end: calibrate boundaries, run replicated trials, or
run the asymptotic verification suite.

Exit codes: 0 success, 1 numerical or calibration failure (including failed
verification checks), 2 configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import format_report, verification_report
from .config import ConfigError, RunConfig, load_config
from .engine import TrialConfig, run_replicates, summarize
from .stopping import (
    CalibrationError,
    calibrate_boundaries,
    read_boundary_file,
    write_boundary_file,
)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def _schedule_table(schedule) -> str:
    lines = [f"{'j':>3s} {'t':>6s} {'alpha(t)':>12s} {'d_alpha':>12s} {'c_j':>12s}"]
    for j in range(schedule.num_interims):
        lines.append(f"{j + 1:3d} {schedule.t[j]:6.3f} {schedule.alpha_cum[j]:12.4e} "
                     f"{schedule.delta_alpha[j]:12.4e} {schedule.c[j]:12.6g}")
    return "\n".join(lines)


def cmd_calibrate(cfg: RunConfig, workers: int) -> int:
    if cfg.spending.calibration is None:
        raise ConfigError("calibrate needs a spending.calibrate block")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "boundaries.csv"
    if target.exists() and not cfg.force:
        print(f"error: {target} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_NUMERICAL
    schedule = calibrate_boundaries(cfg.spending.calibration, cfg.mcmc,
                                    cfg.seed, workers)
    write_boundary_file(schedule, target, meta={
        "version": __version__,
        "spending": cfg.spending.name,
        "alpha": cfg.spending.calibration.alpha,
        "delta": cfg.spending.calibration.delta,
        "n_rep": cfg.spending.calibration.n_rep,
        "seed": cfg.seed,
    })
    print(_schedule_table(schedule))
    print(f"wrote {target}")
    return EXIT_OK


def _results_rows(results, k: int) -> str:
    head = ["replicate", "stopped_early", "stop_stage", "rejected"]
    head += [f"n{i}" for i in range(k + 1)]
    head += ["best_arm_prop", "pps_ha1", "pps_ha2", "pps_ha3"]
    head += [f"theta{i}" for i in range(k + 1)]
    head += [f"xi{i}" for i in range(1, k + 1)]
    lines = [",".join(head)]
    for i, res in enumerate(results):
        row = [str(i), str(int(res.stopped_early)),
               "" if res.stop_stage is None else str(res.stop_stage),
               str(int(res.rejected))]
        row += [str(int(n)) for n in res.per_arm_n]
        row += [repr(float(res.best_arm_proportion)), repr(float(res.pps_ha1)),
                repr(float(res.pps_ha2)), repr(float(res.pps_ha3))]
        row += [repr(float(t)) for t in res.theta_hats]
        row += [repr(float(x)) for x in res.xi_hats]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_replicate(cfg: RunConfig, workers: int) -> int:
    if cfg.spending.boundary_file is None:
        print("error: replicate needs spending.boundary_file", file=sys.stderr)
        return EXIT_CONFIG
    boundary_path = Path(cfg.spending.boundary_file)
    if not boundary_path.exists():
        print(f"error: boundary file {boundary_path} not found", file=sys.stderr)
        return EXIT_NUMERICAL
    schedule = read_boundary_file(boundary_path)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    summary_path = out_dir / "summary.json"
    if (results_path.exists() or summary_path.exists()) and not cfg.force:
        print(f"error: outputs exist in {out_dir}; pass --force to overwrite",
              file=sys.stderr)
        return EXIT_NUMERICAL

    trial = TrialConfig(
        scenario=cfg.scenario,
        rule=cfg.rule,
        total_n=cfg.total_n,
        num_stages=cfg.num_stages,
        delta=cfg.delta,
        hypothesis_r=cfg.hypothesis_r,
        mcmc=cfg.mcmc,
        comparator=cfg.comparator,
        seed=cfg.seed,
        stage1_exact_split=cfg.stage1_exact_split,
    )
    results = run_replicates(trial, schedule, cfg.r_total, cfg.seed, workers)
    summary = summarize(results)

    with open(results_path, "w", newline="\n") as fh:
        fh.write(f"# rartrial results v1 version={__version__} seed={cfg.seed}\n")
        fh.write(_results_rows(results, cfg.scenario.n_treatments))
    payload = {
        "version": __version__,
        "seed": cfg.seed,
        "r_total": summary.r_total,
        "rejection_rate": summary.rejection_rate,
        "means": summary.means,
        "sds": summary.sds,
        "scenario": cfg.scenario.name,
        "rule": cfg.rule,
        "spending": cfg.spending.name,
    }
    with open(summary_path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {results_path} and {summary_path}")
    print(f"rejection rate: {summary.rejection_rate:.4f}  "
          f"mean PPS(Ha1): {summary.means['pps_ha1']:.4f}  "
          f"best-arm proportion: {summary.means['best_arm_proportion']:.4f}")
    return EXIT_OK


def cmd_asymptotics(cfg: RunConfig) -> int:
    arm = cfg.scenario.arms[0]
    if arm.lambda_ in (0.0, 1.0) or arm.omega in (0.0, 1.0):
        print("error: degenerate arm parameters (lambda or omega at 0 or 1)",
              file=sys.stderr)
        return EXIT_CONFIG
    checks = verification_report(arm, seed=cfg.seed)
    report = format_report(checks)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "asymptotics.txt"
    with open(report_path, "w", newline="\n") as fh:
        fh.write(f"# rartrial asymptotics report v1 version={__version__} "
                 f"seed={cfg.seed}\n")
        fh.write(report)
    print(report, end="")
    print(f"wrote {report_path}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rartrial",
        description="Response-adaptive trial engine for the composite "
                    "mortality/morbidity endpoint")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("calibrate", "calibrate early-stopping boundaries by simulation"),
        ("replicate", "run replicated trials against a boundary file"),
        ("asymptotics", "run the asymptotic verification suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override replication.seed")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker count (default 1)")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = RunConfig(**{**cfg.__dict__, "seed": args.seed})
    if args.force:
        cfg = RunConfig(**{**cfg.__dict__, "force": True})
    try:
        if args.command == "calibrate":
            return cmd_calibrate(cfg, args.workers)
        if args.command == "replicate":
            return cmd_replicate(cfg, args.workers)
        return cmd_asymptotics(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
