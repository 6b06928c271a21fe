"""Training objectives: adversarial payoff and least-squares loss.

The generator network P proposes a solution field.  The discriminator D has
one output column (a "head") for every residual channel of every constraint
group; the group order of the problem fixes the head layout.  The zero-sum
payoff pairs each channel r_c with its head d_c and averages over the
group's collocation points:

    payoff(P, D) = sum over groups of mean_n( sum_c d_c(z_n) * r_c(P)(z_n) )

P minimizes and D maximizes.  When P solves the problem every residual
vanishes, the payoff is zero no matter what D does, and the pair (P, 0) is
a stationary point of the game.  The single-network baselines instead
minimize the least-squares loss sum over groups of sum_c mean(r_c^2).

All objectives are written against the leaf-list calling convention of the
differentiation entry points: a factory closes over the problem, the
architectures, and a fixed collocation set, and the returned function
rebuilds its fields from whatever weight handles it is passed, so the same
code path serves raw evaluation, gradients, and mixed second derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ParamVector
from .autodiff import tape as tp
from .errors import ContractError
from .nn import MlpArchitecture, MlpField
from .problems.base import PdeProblem, ReferenceGrid
from .sampling import CollocationSet


@dataclass(frozen=True)
class LossBreakdown:
    """Least-squares loss split by constraint group, in group order."""

    total: float
    per_group: dict[str, float]


def check_collocation(problem: PdeProblem, cset: CollocationSet) -> None:
    if len(cset.interior) < 1:
        raise ContractError(f"{problem.problem_id}: interior point group is empty")
    for g in problem.groups[1:]:
        pts = cset.groups.get(g.name)
        if pts is None or len(pts) < 1:
            raise ContractError(
                f"{problem.problem_id}: point group {g.name!r} is missing or empty"
            )


def check_generator_arch(problem: PdeProblem, arch: MlpArchitecture) -> None:
    if arch.input_dim != 2:
        raise ContractError(f"generator must take 2 coordinates, got {arch.input_dim}")
    if arch.output_dim != problem.solution_dim:
        raise ContractError(
            f"{problem.problem_id}: generator needs {problem.solution_dim} "
            f"output(s), architecture has {arch.output_dim}"
        )


def check_discriminator_arch(problem: PdeProblem, arch: MlpArchitecture) -> None:
    if arch.input_dim != 2:
        raise ContractError(f"discriminator must take 2 coordinates, got {arch.input_dim}")
    if arch.output_dim != problem.head_count:
        raise ContractError(
            f"{problem.problem_id}: discriminator needs {problem.head_count} "
            f"heads, architecture has {arch.output_dim}"
        )


def group_square_losses(problem: PdeProblem, field: MlpField, cset: CollocationSet) -> dict:
    """Per group, sum_c mean(r_c^2) as a scalar handle (float or tape node)."""
    chans = problem.residual_channels(field, cset)
    out = {}
    for g in problem.groups:
        term = None
        for r in chans[g.name]:
            m = tp.mean(r * r)
            term = m if term is None else term + m
        out[g.name] = term
    return out


def pinn_loss(problem: PdeProblem, field: MlpField, cset: CollocationSet) -> LossBreakdown:
    """Least-squares loss of a raw field, split by group."""
    check_collocation(problem, cset)
    per = {
        name: float(tp.value_of(v))
        for name, v in group_square_losses(problem, field, cset).items()
    }
    total = 0.0
    for name in problem.group_names():
        total += per[name]
    return LossBreakdown(total=total, per_group=per)


def cpinn_payoff(problem: PdeProblem, p_field: MlpField, d_field: MlpField, cset: CollocationSet):
    """Scalar payoff handle; raw floats in, float out; tape tensors in, node out."""
    chans = problem.residual_channels(p_field, cset)
    inputs = problem.disc_inputs(cset)
    slices = problem.head_slices()
    total = None
    for g in problem.groups:
        heads = d_field.values(inputs[g.name])
        start = slices[g.name].start
        acc = None
        for c, r in enumerate(chans[g.name]):
            prod = tp.col_slice(heads, start + c, start + c + 1) * r
            acc = prod if acc is None else acc + prod
        term = tp.mean(acc)
        total = term if total is None else total + term
    return total


def make_pinn_objective(problem: PdeProblem, arch: MlpArchitecture, cset: CollocationSet):
    """Leaf-list objective for the least-squares baselines: scalar loss of
    the field built from the given weight handles."""
    check_generator_arch(problem, arch)
    check_collocation(problem, cset)

    def objective(leaves):
        losses = group_square_losses(problem, MlpField(arch, leaves), cset)
        total = None
        for name in problem.group_names():
            total = losses[name] if total is None else total + losses[name]
        return total

    return objective


def make_cpinn_payoff(
    problem: PdeProblem,
    p_arch: MlpArchitecture,
    d_arch: MlpArchitecture,
    cset: CollocationSet,
):
    """Leaf-list payoff for the two-player optimizers; x plays the
    generator's weights, y the discriminator's."""
    check_generator_arch(problem, p_arch)
    check_discriminator_arch(problem, d_arch)
    check_collocation(problem, cset)

    def payoff(x_leaves, y_leaves):
        return cpinn_payoff(
            problem, MlpField(p_arch, x_leaves), MlpField(d_arch, y_leaves), cset
        )

    return payoff


def relative_l2_error(
    arch: MlpArchitecture,
    params: ParamVector,
    grid: ReferenceGrid,
    chunk_size: int = 8192,
) -> float:
    """Relative L2 distance between the network field and the reference grid.

    Two-component fields compare by modulus, so the metric matches the
    physically reported quantity |u| for complex-valued problems.
    """
    if grid.components != arch.output_dim:
        raise ContractError(
            f"reference has {grid.components} component(s), "
            f"network has {arch.output_dim}"
        )
    field = MlpField.from_params(arch, params)
    pts = grid.points()
    preds = np.vstack(
        [field.values(pts[i : i + chunk_size]) for i in range(0, len(pts), chunk_size)]
    )
    ref = grid.flat_values()
    if grid.components == 2:
        preds = np.sqrt((preds**2).sum(axis=1))
        ref = np.sqrt((ref**2).sum(axis=1))
    return float(np.linalg.norm(preds - ref) / np.linalg.norm(ref))


def vector_params(values, name: str = "p") -> ParamVector:
    """Flat vector wrapped as a single-segment parameter block."""
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    return ParamVector(values, ((name, (values.size,)),))


def bilinear_payoff(A: np.ndarray, f: np.ndarray):
    """payoff(pi, delta) = delta^T (A pi - f).

    The canonical bilinear saddle: for invertible A the unique stationary
    pair is (A^{-1} f, 0).  Simultaneous gradient play only rotates around
    it, which is what makes this the standard separation test between
    one-sided and game-aware optimizers.
    """
    A = np.asarray(A, dtype=np.float64)
    n, m = A.shape
    f_col = np.asarray(f, dtype=np.float64).reshape(n, 1)

    def payoff(x_leaves, y_leaves):
        r = A @ x_leaves[0].reshape((m, 1)) - f_col
        return (y_leaves[0].reshape((1, n)) @ r).reshape(())

    return payoff


def linear_basis_instance(n: int, seed: int = 0):
    """A solvable game built from a sine basis collocation matrix.

    A[i, j] = sin((j+1) pi z_i) at n random points z_i, target coefficients
    pi* drawn once, and the data vector set to exactly A @ pi*, so the
    generator residual at pi* is zero in floating point (not merely small).
    Returns (payoff, pi_star, delta_star) with delta_star = 0.
    """
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, size=(n, 1))
    A = np.sin(np.pi * z * np.arange(1, n + 1))
    pi_star = rng.standard_normal(n)
    f = A @ pi_star
    return (
        bilinear_payoff(A, f),
        vector_params(pi_star, "pi"),
        vector_params(np.zeros(n), "delta"),
    )
