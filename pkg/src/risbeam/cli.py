"""Command-line driver: sweeps, single-point optimization, self-checks.

One binary with three subcommands.  ``sweep`` writes the coverage CSV,
summary CSVs and a JSON manifest into the output directory; ``optimize``
writes a per-iteration trace CSV and the final scattering matrix;
``validate`` runs the oracle suite and reports one line per check.

Exit status: 0 all work completed; 1 configuration or runtime error;
2 usage error (from argparse); 3 sweep completed but some grid points
were masked or failed (their values are nan in the CSV).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace
from typing import List, Optional

import numpy as np

from .channel import build_channels
from .config import (
    ConfigError,
    OptimizerConfig,
    RunConfig,
    ScenarioConfig,
    SweepCase,
    SweepConfig,
    load_config,
    manifest_scenario_entry,
)
from .optimizer import optimize, staged_optimize
from .sweep import (
    FLOAT_FMT,
    CoverageMap,
    behind_obstacle_mask,
    masked_point,
    run_config_hash,
    run_sweep,
    summarize,
    write_summary_csv,
)
from .validate import run_checks
from .version import VERSION

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MASKED = 3

OUT_DIR_ENV = "RISBEAM_OUT"


def _default_out() -> str:
    return os.environ.get(OUT_DIR_ENV, "out")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="INI run configuration")
    p.add_argument("--out", metavar="DIR", default=None,
                   help="output directory (default $%s or ./out)" % OUT_DIR_ENV)
    p.add_argument("--nr", type=int, metavar="N", help="override panel element count")
    p.add_argument("--regime", choices=("none", "diag", "bd-proj", "bd-exp"))
    p.add_argument("--objective", choices=("txbf", "capacity"))
    p.add_argument("--seed", type=int, metavar="N", help="override the sweep seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risbeam",
        description="RIS-assisted MIMO downlink coverage simulator",
    )
    parser.add_argument("--version", action="version", version="risbeam " + VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="evaluate spectral efficiency over the UE grid")
    _add_common(sp)
    sp.add_argument("--grid-res", type=float, metavar="METERS", help="override grid resolution")
    sp.add_argument("--workers", type=int, metavar="N",
                    help="worker processes (default: config value)")

    op = sub.add_parser("optimize", help="optimize the panel for one UE position")
    _add_common(op)
    op.add_argument("--x", type=float, required=True, help="UE x coordinate, meters")
    op.add_argument("--y", type=float, required=True, help="UE y coordinate, meters")

    va = sub.add_parser("validate", help="run the oracle self-check suite")
    va.add_argument("--config", metavar="PATH", help=argparse.SUPPRESS)
    return parser


def _load_run(args):
    """Config file plus flag overrides; returns (RunConfig, overrides dict)."""
    run = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    scenario, optimizer, sweep = run.scenario, run.optimizer, run.sweep
    if getattr(args, "grid_res", None) is not None:
        sweep = replace(sweep, grid_resolution=args.grid_res)
        overrides["grid_res"] = args.grid_res
    if args.seed is not None:
        sweep = replace(sweep, seed=args.seed)
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        sweep = replace(sweep, workers=args.workers)
        overrides["workers"] = args.workers
    if args.nr is not None or args.regime is not None or args.objective is not None:
        # Narrow the sweep to one case built from the flags; unspecified
        # parts default to capacity over the configured panel.
        regime = args.regime or "diag"
        objective = args.objective or "capacity"
        n_r = args.nr if regime != "none" else None
        sweep = replace(sweep, cases=(SweepCase(objective=objective, regime=regime, n_r=n_r),))
        overrides.update({k: v for k, v in
                          (("nr", args.nr), ("regime", args.regime), ("objective", args.objective))
                          if v is not None})
    return RunConfig(scenario=scenario, optimizer=optimizer, sweep=sweep), overrides


def _manifest(run: RunConfig, overrides: dict, outputs: List[str], runtime_s: float,
              extra: Optional[dict] = None) -> dict:
    man = {
        "version": VERSION,
        "config_hash": run_config_hash(run),
        "scenario": manifest_scenario_entry(run.scenario),
        "optimizer": asdict(run.optimizer),
        "sweep": {
            "grid_resolution": run.sweep.grid_resolution,
            "cases": [c.case_id for c in run.sweep.cases],
            "seed": run.sweep.seed,
            "workers": run.sweep.workers,
            "mask_radius": run.sweep.mask_radius,
        },
        "overrides": overrides,
        "outputs": outputs,
        "runtime_seconds": runtime_s,
    }
    if extra:
        man.update(extra)
    return man


def _write_manifest(path: str, man: dict) -> None:
    with open(path, "w") as f:
        json.dump(man, f, indent=2, sort_keys=True)
        f.write("\n")


def _ensure_reference_cases(sweep: SweepConfig) -> SweepConfig:
    """Prepend a no-RIS baseline for every objective so gains are defined."""
    have = {c.case_id for c in sweep.cases}
    extra = []
    for objective in dict.fromkeys(c.objective for c in sweep.cases):
        ref = SweepCase(objective=objective, regime="none")
        if ref.case_id not in have:
            extra.append(ref)
    if not extra:
        return sweep
    return replace(sweep, cases=tuple(extra) + sweep.cases)


def cmd_sweep(args) -> int:
    run, overrides = _load_run(args)
    run = RunConfig(scenario=run.scenario, optimizer=run.optimizer,
                    sweep=_ensure_reference_cases(run.sweep))
    out_dir = args.out or _default_out()
    os.makedirs(out_dir, exist_ok=True)

    t0 = time.time()
    cmap = run_sweep(run)
    coverage_path = os.path.join(out_dir, "coverage.csv")
    cmap.to_csv(coverage_path)
    outputs = [coverage_path]

    # One summary per objective, no-RIS peak as the reference.
    summary_meta = dict(cmap.metadata)
    for objective in dict.fromkeys(c.objective for c in run.sweep.cases):
        ids = [c.case_id for c in run.sweep.cases if c.objective == objective]
        sub = CoverageMap(
            xs=cmap.xs, ys=cmap.ys, case_ids=tuple(ids),
            values=np.stack([cmap.case_values(i) for i in ids]),
            metadata=cmap.metadata, notes=cmap.notes,
        )
        reference = "%s-none" % objective
        rows = summarize(sub, reference)
        path = os.path.join(out_dir, "summary-%s.csv" % objective)
        write_summary_csv(path, rows, summary_meta, reference)
        outputs.append(path)
        if run.scenario.obstacle is not None:
            region = behind_obstacle_mask(run.scenario, cmap.xs, cmap.ys)
            rows = summarize(sub, reference, region=region)
            path = os.path.join(out_dir, "summary-%s-behind-obstacle.csv" % objective)
            write_summary_csv(path, rows, summary_meta, reference)
            outputs.append(path)

    n_invalid = cmap.n_invalid
    notes = {"%s@%d,%d" % key: note for key, note in sorted(cmap.notes.items())}
    manifest_path = os.path.join(out_dir, "manifest.json")
    _write_manifest(manifest_path, _manifest(
        run, overrides, outputs + [manifest_path], time.time() - t0,
        extra={"invalid_points": n_invalid, "point_notes": notes},
    ))

    for case_id in cmap.case_ids:
        peak, xy = cmap.peak(case_id)
        print("%s: peak %s bit/s/Hz at (%s, %s)" % (
            case_id, FLOAT_FMT % peak, FLOAT_FMT % xy[0], FLOAT_FMT % xy[1]))
    if n_invalid:
        print("%d grid evaluations masked or failed (nan in CSV)" % n_invalid)
        return EXIT_MASKED
    return EXIT_OK


def cmd_optimize(args) -> int:
    run, overrides = _load_run(args)
    cfg = run.scenario
    xmin, xmax, ymin, ymax = cfg.area
    xy = (args.x, args.y)
    if not (xmin <= args.x <= xmax and ymin <= args.y <= ymax):
        raise ConfigError("UE position (%g, %g) is outside the area %s" % (args.x, args.y, cfg.area))
    if masked_point(cfg, xy, run.sweep.mask_radius):
        raise ConfigError("UE position (%g, %g) is within %g m of the BS or RIS"
                          % (args.x, args.y, run.sweep.mask_radius))

    case = run.sweep.cases[0]
    if case.n_r is not None:
        cfg = cfg.with_ris_elements(case.n_r)
    out_dir = args.out or _default_out()
    os.makedirs(out_dir, exist_ok=True)

    t0 = time.time()
    rng = np.random.default_rng(run.sweep.seed)
    if case.regime == "none":
        raise ConfigError("nothing to optimize for regime 'none'; use the sweep command")
    ch = build_channels(cfg, xy)
    if case.regime == "diag":
        outcome = optimize(cfg, ch, case.objective, case.regime, opt=run.optimizer, rng=rng)
    else:
        outcome = staged_optimize(cfg, ch, case.objective, case.regime,
                                  opt=run.optimizer, rng=rng)

    trace_path = os.path.join(out_dir, "trace.csv")
    outcome.trace.to_csv(trace_path)
    theta_path = os.path.join(out_dir, "theta.txt")
    outcome.scatter.save(theta_path)
    manifest_path = os.path.join(out_dir, "manifest.json")
    _write_manifest(manifest_path, _manifest(
        run, overrides, [trace_path, theta_path, manifest_path], time.time() - t0,
        extra={
            "ue_xy": [args.x, args.y],
            "case": case.case_id,
            "value": outcome.value,
            "stop_reason": outcome.stop_reason,
            "outer_rounds": outcome.outer_rounds,
            "inner_iterations": outcome.inner_iterations,
        },
    ))
    print("%s at (%s, %s): %s bit/s/Hz [%s]" % (
        case.case_id, FLOAT_FMT % args.x, FLOAT_FMT % args.y,
        FLOAT_FMT % outcome.value, outcome.stop_reason))
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_checks()
    for r in results:
        print("%s %s: %s" % ("PASS" if r.passed else "FAIL", r.name, r.detail))
    failed = [r for r in results if not r.passed]
    print("%d/%d checks passed" % (len(results) - len(failed), len(results)))
    return EXIT_OK if not failed else EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"sweep": cmd_sweep, "optimize": cmd_optimize, "validate": cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
