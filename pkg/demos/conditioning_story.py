"""Why training on the squared residual is harder than playing the game.

Minimizing a sum of squared residuals r(theta)^2 implicitly works with the
normal-equations matrix A^T A, whose condition number is the square of
kappa(A).  The two-player formulation instead leads to the saddle block
[[0, A^T], [A, 0]], which keeps kappa(A) unchanged.  This script builds
second-difference matrices of a few sizes, verifies both identities
numerically, and then lets iterative solvers feel the difference: conjugate
gradients on A^T A versus GMRES on the block, both run matrix-free to a
relative residual of 1e-8.

Run from the repository root:

    python demos/conditioning_story.py
"""

from cpinn.conditioning import conditioning_table


def main() -> None:
    reports = conditioning_table([3, 8, 16, 32, 50, 64])

    print("second-difference matrix, Dirichlet ends, h = 1/(n+1)")
    print()
    header = f"{'n':>4} {'kappa(A)':>12} {'kappa(A^T A)':>14} {'kappa(block)':>13} {'cg on A^T A':>12} {'gmres block':>12}"
    print(header)
    print("-" * len(header))
    for r in reports:
        print(
            f"{r.n:>4} {r.kappa:>12.4e} {r.kappa_normal:>14.4e} "
            f"{r.kappa_block:>13.4e} {r.cg_iters_normal:>12} {r.gmres_iters_block:>12}"
        )

    print()
    worst_normal = max(r.normal_identity_err for r in reports)
    worst_block = max(r.block_identity_err for r in reports)
    print(f"worst relative error in kappa(A^T A) = kappa(A)^2 : {worst_normal:.2e}")
    print(f"worst relative error in kappa(block) = kappa(A)   : {worst_block:.2e}")
    print()
    print(
        "The squared system's condition number explodes quadratically while the\n"
        "block system's grows only linearly with kappa(A).  In iteration counts\n"
        "the gap opens more slowly (GMRES pays for the block's indefiniteness,\n"
        "and CG quietly benefits from the squared system's clustered extremes),\n"
        "so CG only starts losing outright around n = 50 here.  Conditioning is\n"
        "the asymptotic story; at small sizes the constants still argue back."
    )


if __name__ == "__main__":
    main()
