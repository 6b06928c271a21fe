"""A small head-to-head run on the Poisson problem.

Trains the adversarial formulation with ACGD for a few hundred iterations,
reads off how many forward passes it spent, and gives a conventional
single-network run with Adam exactly the same budget.  Expect the Adam
baseline to win at this scale: each competitive iteration buys a whole
batch of cheap gradient steps, and the game's better-conditioned updates
only pay that premium back over thousands of iterations.  The desk-scale
runs under acceptance_runs/ (rebuilt by tests/build_acceptance_runs.py)
carry the same comparison far enough to see the ordering flip.

What this demo is for: watching both training pipelines end to end in a
few minutes, with every artifact left on disk to poke at.

Run from the repository root:

    python demos/train_poisson_small.py [--iterations N] [--out DIR]

Each run leaves behind metrics.csv, timings.csv, checkpoints, the resolved
config, and a report.txt under DIR/<method>.
"""

import argparse
import csv
from pathlib import Path

from cpinn.config import parse_config_text
from cpinn.problems import cached_reference
from cpinn.training import train

CPINN_TEMPLATE = """
problem = poisson
method = cpinn
optimizer = acgd
seed = 3
generator_layers = 3
generator_width = 30
discriminator_layers = 3
discriminator_width = 30
points_interior = 1000
points_boundary = 80
budget_iterations = {iterations}
eval_every = {eval_every}
warm_start = on
output_dir = {out}
"""

PINN_TEMPLATE = """
problem = poisson
method = pinn
optimizer = adam
seed = 3
generator_layers = 3
generator_width = 30
points_interior = 1000
points_boundary = 80
budget_forward_passes = {budget}
eval_every = {eval_every}
output_dir = {out}
"""


def error_trace(run, keep=6):
    with open(Path(run.output_dir) / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    stride = max(1, (len(rows) - 1) // (keep - 1)) if len(rows) > 1 else 1
    picked = rows[::stride]
    if rows[-1] is not picked[-1]:
        picked.append(rows[-1])
    return [(int(r["cumulative_forward_passes"]), float(r["rel_l2_error"])) for r in picked]


def show_trace(label, trace):
    cells = "  ".join(f"{fp:>6}:{rel:.2e}" for fp, rel in trace)
    print(f"  {label:<13} {cells}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, default=300, help="acgd iterations")
    ap.add_argument("--out", type=Path, default=Path("demo_runs"), help="output root")
    args = ap.parse_args()

    reference = cached_reference("poisson")

    print(f"[1/2] cpinn + acgd, {args.iterations} iterations")
    cpinn_cfg = parse_config_text(
        CPINN_TEMPLATE.format(
            iterations=args.iterations,
            eval_every=max(1, args.iterations // 10),
            out=args.out / "cpinn_acgd",
        )
    )
    cpinn_run = train(cpinn_cfg, reference=reference)
    print(
        f"      rel L2 {cpinn_run.rel_l2_error:.3e} after "
        f"{cpinn_run.forward_passes} forward passes"
    )

    print(f"[2/2] pinn + adam, same budget of {cpinn_run.forward_passes} forward passes")
    pinn_cfg = parse_config_text(
        PINN_TEMPLATE.format(
            budget=cpinn_run.forward_passes,
            eval_every=max(1, cpinn_run.forward_passes // 10),
            out=args.out / "pinn_adam",
        )
    )
    pinn_run = train(pinn_cfg, reference=reference)
    print(
        f"      rel L2 {pinn_run.rel_l2_error:.3e} after "
        f"{pinn_run.forward_passes} forward passes ({pinn_run.iterations} steps)"
    )

    print()
    print("rel L2 error by cumulative forward passes:")
    show_trace("cpinn + acgd", error_trace(cpinn_run))
    show_trace("pinn + adam", error_trace(pinn_run))
    print()
    if pinn_run.rel_l2_error < cpinn_run.rel_l2_error:
        print(
            "Adam is ahead at this budget, as expected at demo scale.  The game\n"
            "spends most of its forward passes inside the per-step implicit\n"
            "solves; its advantage emerges once the baseline's error stalls while\n"
            "the adversarial run keeps grinding down (see the desk-scale runs)."
        )
    else:
        print("The adversarial run is already ahead at this budget.")
    print()
    print(f"artifacts under {args.out}/")
    print("inspect either run with, for example:")
    print(f"    cpinn evaluate --checkpoint {cpinn_run.output_dir}/generator.ckpt")


if __name__ == "__main__":
    main()
