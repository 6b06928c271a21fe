"""Command-line entry point.

Subcommands: `train --config <path>` runs one training job, `evaluate
--checkpoint <path> --grid <n>` scores a saved generator, `analyze-
conditioning` prints the normal-equations versus saddle-block comparison,
and `reference --problem <id>` materializes a problem's reference grid as
CSV.  Exit codes: 0 on success, 2 for configuration or input errors, 3 for
numeric failures (rejected optimizer steps, non-finite values, oracle
gates).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .conditioning import conditioning_table, write_conditioning_csv
from .config import load_config
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    NumericFailure,
    OracleFailure,
    StepRejected,
)
from .problems import cached_reference, get_problem, problem_ids, save_reference_grid
from .training import evaluate_checkpoint, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    result = train(cfg)
    print(f"status: {result.status}")
    if result.reason:
        print(f"reason: {result.reason}")
    print(f"iterations: {result.iterations}")
    print(f"forward_passes: {result.forward_passes}")
    print(f"rel_l2_error: {result.rel_l2_error:.6e}")
    print(f"artifacts: {result.output_dir}")
    return EXIT_OK if result.status == "completed" else EXIT_NUMERIC


def _cmd_evaluate(args) -> int:
    report = evaluate_checkpoint(args.checkpoint, grid_resolution=args.grid)
    print(f"problem: {report.problem}")
    print(f"rel_l2_error: {report.rel_l2_error:.6e}")
    print(f"error_field: {report.csv_path} ({report.rows} rows)")
    return EXIT_OK


def _cmd_analyze_conditioning(args) -> int:
    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--sizes must be comma-separated integers: {exc}") from exc
    if not sizes:
        raise ConfigError("--sizes must name at least one matrix size")
    reports = conditioning_table(sizes)
    print(
        f"{'n':>5} {'kappa(A)':>12} {'kappa(A^T A)':>14} {'kappa(block)':>14} "
        f"{'cg_normal':>10} {'gmres_block':>12} {'identities':>10}"
    )
    for r in reports:
        print(
            f"{r.n:>5} {r.kappa:>12.4e} {r.kappa_normal:>14.4e} {r.kappa_block:>14.4e} "
            f"{r.cg_iters_normal:>10} {r.gmres_iters_block:>12} "
            f"{'ok' if r.identities_hold else 'FAIL':>10}"
        )
    if args.out:
        write_conditioning_csv(args.out, reports)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_reference(args) -> int:
    problem = get_problem(args.problem)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{problem.problem_id}_reference.csv"
    grid = cached_reference(problem.problem_id, cache_dir=out_dir)
    if not path.exists():
        save_reference_grid(path, grid)
    print(f"reference grid: {path} ({grid.values.shape[0]}x{grid.values.shape[1]})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpinn",
        description="Train and evaluate competitive physics-informed networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training job from a config file")
    p_train.add_argument("--config", required=True, help="path to a key = value config file")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a saved generator checkpoint")
    p_eval.add_argument("--checkpoint", required=True, help="path to generator.ckpt")
    p_eval.add_argument("--grid", type=int, default=100, help="evaluation grid resolution")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_cond = sub.add_parser(
        "analyze-conditioning",
        help="compare CG on the normal equations with GMRES on the saddle block",
    )
    p_cond.add_argument("--sizes", default="3,8,32,64", help="comma-separated matrix sizes")
    p_cond.add_argument("--out", default="", help="optional CSV output path")
    p_cond.set_defaults(func=_cmd_analyze_conditioning)

    p_ref = sub.add_parser("reference", help="write a problem's reference grid as CSV")
    p_ref.add_argument("--problem", required=True, choices=problem_ids())
    p_ref.add_argument("--out-dir", default=".", help="directory for the CSV")
    p_ref.set_defaults(func=_cmd_reference)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, StepRejected, OracleFailure) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
