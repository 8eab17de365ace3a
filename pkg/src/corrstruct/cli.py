"""Command line entry point: ``corrstruct {run,presets,detect,simulate}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .harness import PRESETS, PlanError, load_plan, preset_plan, run
from .io import (
    read_dataset,
    write_dataset,
    write_detection,
    write_matrix,
    write_model,
    write_null_stats,
    write_spectrum,
)
from .pipeline import lfdr_mult_cost, two_step
from .simgen import SCENARIOS, generate


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corrstruct",
                                description="Correlation structure detection across data sets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment plan file or a named preset")
    r.add_argument("plan", help="YAML/JSON plan file, or preset:<name>")
    r.add_argument("--seed", type=int, help="master seed (overrides the plan)")
    r.add_argument("--workers", type=int, help="worker processes (default: $CORRSTRUCT_WORKERS or 1)")
    r.add_argument("--out", help="output directory (overrides the plan)")
    r.add_argument("--reps", type=int, help="repetitions per grid point")
    r.add_argument("--alpha", type=float, help="atom level of every lfdr detector")
    r.add_argument("--alpha-cmp", type=float, help="component level of every lfdr detector")
    r.add_argument("-B", type=int, help="bootstrap resamples")

    sub.add_parser("presets", help="list the built-in experiment presets")

    d = sub.add_parser("detect", help="run the detectors on set_<k>.csv files")
    d.add_argument("data_dir")
    d.add_argument("--out", default="detection", help="output directory")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--alpha", type=float, default=0.1)
    d.add_argument("--alpha-cmp", type=float, default=0.1)
    d.add_argument("--alpha-fa-i", type=float, default=0.1)
    d.add_argument("--alpha-fa-ii", type=float, default=0.1)
    d.add_argument("-J", type=int, help="components to examine (default: smallest set dimension)")
    d.add_argument("-B", type=int, default=300)

    s = sub.add_parser("simulate", help="write one simulated data set for a preset scenario")
    s.add_argument("scenario", choices=sorted(SCENARIOS))
    s.add_argument("--out", required=True, help="output data directory")
    s.add_argument("--seed", type=int, default=0)
    return p


def _cmd_run(args) -> int:
    if args.plan.startswith("preset:"):
        plan = preset_plan(args.plan.split(":", 1)[1])
    else:
        plan = load_plan(args.plan)
    over = {k: v for k, v in (("seed", args.seed), ("out", args.out), ("reps", args.reps),
                              ("B", args.B)) if v is not None}
    if args.alpha is not None or args.alpha_cmp is not None:
        over["detectors"] = tuple(
            replace(det,
                    level=det.level if args.alpha is None else args.alpha,
                    level_cmp=det.level_cmp if args.alpha_cmp is None else args.alpha_cmp)
            if det.kind == "lfdr-mult-cost" else det
            for det in plan.detectors)
    if over:
        plan = replace(plan, **over)
    path = run(plan, workers=args.workers)
    print(f"wrote {path}")
    return 0


def _cmd_presets(_args) -> int:
    for name, info in PRESETS.items():
        sc = SCENARIOS[info.scenario]
        grid = ", ".join(f"{v:g}" for v in info.grid)
        print(f"{name:<3} {info.description}; {info.sweep} in [{grid}]; K={sc.K} J={sc.J} N={sc.N}")
    return 0


def _cmd_detect(args) -> int:
    sample = read_dataset(args.data_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result, analysis = lfdr_mult_cost(sample, args.alpha, args.alpha_cmp, J=args.J, B=args.B,
                                      seed=args.seed)
    M_ts, D_hat, _ = two_step(sample, args.alpha_fa_i, args.alpha_fa_ii, J=args.J, B=args.B,
                              seed=args.seed, analysis=analysis)
    write_detection(result, out / "lfdr_mult_cost.csv")
    write_matrix(M_ts, out / "two_step.csv")
    write_matrix(analysis.pvalues, out / "pvalues.csv", fmt="%.6g")
    write_matrix(analysis.lfdrs.lfdr, out / "lfdr.csv", fmt="%.6g")
    write_spectrum(analysis.spectrum, out)
    write_null_stats(analysis.null, out / "null_stats.csv")
    write_model(analysis.model, out / "lfdr_model.csv")
    m = analysis.model
    (out / "summary.yaml").write_text(yaml.safe_dump({
        "K": sample.K, "N": sample.N, "dims": list(sample.dims), "J": analysis.spectrum.J,
        "eigenvalues": [float(v) for v in analysis.spectrum.eigenvalues[:analysis.spectrum.J]],
        "lfdr_model": {"pi0": float(m.pi0), "weights": [float(v) for v in m.weights],
                       "shapes": [float(v) for v in m.shapes], "converged": bool(m.converged)},
        "lfdr_mult_cost": {"rejections": int(result.m_final), "fdr_hat": float(result.fdr_hat),
                           "fdr_cmp_hat": float(result.fdr_cmp_hat),
                           "removed_components": [int(j) for j in result.removed_components]},
        "two_step": {"D_hat": int(D_hat), "rejections": int(M_ts.entries.sum())},
    }, sort_keys=False))
    print(f"lfdr-mult-cost: {result.m_final} rejections; two-step: D_hat={D_hat}, "
          f"{int(M_ts.entries.sum())} rejections; results in {out}")
    return 0


def _cmd_simulate(args) -> int:
    X, M = generate(SCENARIOS[args.scenario], rng=np.random.default_rng(args.seed))
    write_dataset(X, args.out)
    write_matrix(M, Path(args.out) / "truth.csv")
    print(f"wrote {X.K} sets of shape {X.sets[0].shape} to {args.out}")
    return 0


_COMMANDS = {"run": _cmd_run, "presets": _cmd_presets, "detect": _cmd_detect,
             "simulate": _cmd_simulate}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, PlanError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"corrstruct: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
