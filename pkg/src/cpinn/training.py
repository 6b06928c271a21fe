"""Training runs: budget loop, metrics emission, curriculum, evaluation.

A run is one process invocation driven by a resolved RunConfig.  The loop
steps the selected optimizer until the iteration or forward-pass budget is
exhausted, logging a metrics row at a fixed cadence.  Everything written to
metrics.csv is a pure function of the config and seed, so reruns are
byte-identical; wall-clock times go to a separate timings.csv instead of
polluting that guarantee.  Evaluation (relative L2 error against the
reference grid, per-group losses) happens out of band and is never charged
to the forward-pass budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff.api import grad
from .config import RunConfig, config_text, load_config
from .errors import CheckpointError, ContractError, NumericFailure, StepRejected
from .game import make_cpinn_payoff, make_pinn_objective, pinn_loss, relative_l2_error
from .nn import MlpArchitecture, MlpField, init_params, load_checkpoint, save_checkpoint
from .optim import (
    AcgdState,
    AdamState,
    CgdState,
    ExtragradientState,
    SgdState,
    acgd_step,
    adam_step,
    cgd_step,
    extragradient_step,
    forward_pass_cost,
    sgd_step,
)
from .problems import ReferenceGrid, cached_reference, get_problem
from .sampling import CollocationSet


class CurriculumSchedule:
    """Active-set controller that grows the interior set along the time axis.

    The points are split into `n_subsets` equal blocks by ascending first
    coordinate; block k covers the k-th time quantile.  Training starts on
    the earliest block, and each `check` call may advance by at most one
    block, doing so exactly when the reported mean squared interior residual
    over the active set is below the threshold.  A threshold of +inf
    therefore admits one new block per check, and a threshold of 0 never
    advances (squared residuals are nonnegative).
    """

    def __init__(self, points, n_subsets: int = 10, threshold: float = 1e-7):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ContractError("curriculum points must form a nonempty (n, d) array")
        n = points.shape[0]
        if n_subsets < 1 or n % n_subsets != 0:
            raise ContractError(
                f"n_subsets must evenly divide the point count ({n_subsets} vs {n})"
            )
        if math.isnan(threshold) or threshold < 0.0:
            raise ContractError("curriculum threshold must be >= 0 (inf allowed)")
        order = np.argsort(points[:, 0], kind="stable")
        self._sorted = points[order]
        self.block_size = n // n_subsets
        self.n_subsets = n_subsets
        self.threshold = threshold
        self.active_subsets = 1

    def subset(self, k: int) -> np.ndarray:
        """Block k (0-based) in time order."""
        if not 0 <= k < self.n_subsets:
            raise ContractError(f"subset index {k} out of range")
        return self._sorted[k * self.block_size : (k + 1) * self.block_size]

    def active_points(self) -> np.ndarray:
        return self._sorted[: self.active_subsets * self.block_size]

    @property
    def complete(self) -> bool:
        return self.active_subsets == self.n_subsets

    def check(self, mean_sq_residual: float) -> bool:
        """Advance by one subset if the criterion holds; returns whether it did."""
        if self.complete:
            return False
        if mean_sq_residual < self.threshold:
            self.active_subsets += 1
            return True
        return False


@dataclass
class TrainResult:
    status: str
    reason: str
    iterations: int
    forward_passes: int
    rel_l2_error: float
    output_dir: Path
    metrics_path: Path
    checkpoints: dict[str, Path]


def _architectures(cfg: RunConfig, problem):
    p_arch = MlpArchitecture(
        input_dim=2,
        hidden_layers=cfg.generator_layers,
        hidden_width=cfg.generator_width,
        output_dim=problem.solution_dim,
        activation=cfg.generator_activation,
    )
    d_arch = None
    if cfg.method == "cpinn":
        d_arch = MlpArchitecture(
            input_dim=2,
            hidden_layers=cfg.discriminator_layers,
            hidden_width=cfg.discriminator_width,
            output_dim=problem.head_count,
            activation=cfg.discriminator_activation,
        )
    return p_arch, d_arch


def _make_optimizer(cfg: RunConfig):
    max_inner = cfg.inner_max_iterations or None
    if cfg.optimizer == "sgd":
        return SgdState(lr=cfg.lr)
    if cfg.optimizer == "adam":
        return AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    if cfg.optimizer == "extrasgd":
        return ExtragradientState(SgdState(lr=cfg.lr), SgdState(lr=cfg.lr))
    if cfg.optimizer == "extraadam":
        return ExtragradientState(
            AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps),
            AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps),
        )
    if cfg.optimizer == "cgd":
        return CgdState(
            lr_x=cfg.lr,
            lr_y=cfg.lr,
            rtol=cfg.inner_rtol,
            atol=cfg.inner_atol,
            max_inner=max_inner,
            warm_start=cfg.warm_start,
        )
    if cfg.optimizer == "acgd":
        return AcgdState(
            lr_x=cfg.lr,
            lr_y=cfg.lr,
            beta2=cfg.beta2,
            eps=cfg.eps,
            rtol=cfg.inner_rtol,
            atol=cfg.inner_atol,
            max_inner=max_inner,
            warm_start=cfg.warm_start,
        )
    raise ContractError(f"unknown optimizer {cfg.optimizer!r}")


def _apply_base(opt, params: np.ndarray, g: np.ndarray) -> np.ndarray:
    if isinstance(opt, AdamState):
        return adam_step(opt, params, g)
    return sgd_step(opt, params, g)


def train(cfg: RunConfig, reference: ReferenceGrid | None = None) -> TrainResult:
    """Run one training job and write its artifacts to cfg.output_dir.

    Artifacts: config_resolved.txt, metrics.csv, timings.csv, report.txt,
    generator.ckpt (and discriminator.ckpt for cpinn).  Returns a summary;
    status is "aborted" when an inner solve was rejected or a value went
    non-finite, in which case everything written so far remains on disk.
    """
    problem = get_problem(cfg.problem)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_resolved.txt").write_text(config_text(cfg), encoding="utf-8")

    cset_full = problem.sample_points(cfg.points, seed=cfg.seed)
    p_arch, d_arch = _architectures(cfg, problem)
    x = init_params(p_arch, seed=cfg.seed + 1)
    y = init_params(d_arch, seed=cfg.seed + 2) if d_arch is not None else None

    curriculum = None
    if cfg.curriculum:
        curriculum = CurriculumSchedule(
            cset_full.interior, cfg.curriculum_subsets, cfg.curriculum_threshold
        )

    if reference is None:
        reference = cached_reference(cfg.problem)

    def active_cset() -> CollocationSet:
        if curriculum is None:
            return cset_full
        return CollocationSet(curriculum.active_points(), cset_full.groups)

    cset = active_cset()
    if cfg.method == "pinn":
        objective = make_pinn_objective(problem, p_arch, cset)
    else:
        payoff = make_cpinn_payoff(problem, p_arch, d_arch, cset)

    def rebuild():
        nonlocal objective, payoff
        if cfg.method == "pinn":
            objective = make_pinn_objective(problem, p_arch, cset)
        else:
            payoff = make_cpinn_payoff(problem, p_arch, d_arch, cset)

    opt = _make_optimizer(cfg)
    group_names = problem.group_names()

    metrics_path = out_dir / "metrics.csv"
    timings_path = out_dir / "timings.csv"
    iteration = 0
    forward_passes = 0
    inner_last = 0
    last_rel = math.nan
    status, reason = "completed", ""
    t_start = time.monotonic()

    with open(metrics_path, "w", encoding="utf-8", newline="") as mf, open(
        timings_path, "w", encoding="utf-8", newline=""
    ) as tf:
        header = (
            "iteration,cumulative_forward_passes,rel_l2_error,loss_total,"
            + ",".join(f"loss_{g}" for g in group_names)
            + ",inner_iterations\n"
        )
        mf.write(header)
        mf.flush()
        tf.write("iteration,wall_time_seconds\n")
        tf.flush()

        def write_row():
            nonlocal last_rel
            field = MlpField.from_params(p_arch, x)
            breakdown = pinn_loss(problem, field, cset)
            last_rel = relative_l2_error(p_arch, x, reference)
            cells = [
                str(iteration),
                str(forward_passes),
                repr(float(last_rel)),
                repr(float(breakdown.total)),
            ]
            cells += [repr(float(breakdown.per_group[g])) for g in group_names]
            cells.append(str(inner_last))
            mf.write(",".join(cells) + "\n")
            mf.flush()
            tf.write(f"{iteration},{time.monotonic() - t_start!r}\n")
            tf.flush()
            return breakdown

        def after_eval(breakdown):
            nonlocal cset
            if not math.isfinite(breakdown.total):
                raise NumericFailure(
                    f"loss became non-finite ({breakdown.total!r})", op="loss"
                )
            if curriculum is not None and curriculum.check(breakdown.per_group["interior"]):
                cset = active_cset()
                rebuild()

        def do_step():
            nonlocal x, y
            if cfg.method == "pinn":
                g = grad(objective, x)
                x = x.with_values(_apply_base(opt, x.values, g.values))
                return forward_pass_cost(cfg.optimizer), 0
            if cfg.optimizer == "cgd":
                rep = cgd_step(opt, payoff, x, y)
            elif cfg.optimizer == "acgd":
                rep = acgd_step(opt, payoff, x, y)
            else:
                rep = extragradient_step(opt, payoff, x, y)
            x, y = rep.x, rep.y
            return rep.forward_passes, rep.inner_iterations

        last_row_iteration = iteration
        try:
            after_eval(write_row())
            while True:
                if cfg.budget_iterations is not None and iteration >= cfg.budget_iterations:
                    break
                if (
                    cfg.budget_forward_passes is not None
                    and forward_passes >= cfg.budget_forward_passes
                ):
                    break
                cost, inner_last = do_step()
                iteration += 1
                forward_passes += cost
                if iteration % cfg.eval_every == 0:
                    breakdown = write_row()
                    last_row_iteration = iteration
                    after_eval(breakdown)
            if last_row_iteration != iteration:
                write_row()
        except StepRejected as exc:
            status = "aborted"
            reason = f"optimizer step rejected at iteration {iteration + 1}: {exc}"
        except NumericFailure as exc:
            status = "aborted"
            reason = f"non-finite value at iteration {iteration}: {exc}"

    checkpoints = {"generator": out_dir / "generator.ckpt"}
    save_checkpoint(checkpoints["generator"], p_arch, x)
    if y is not None:
        checkpoints["discriminator"] = out_dir / "discriminator.ckpt"
        save_checkpoint(checkpoints["discriminator"], d_arch, y)

    report_lines = [
        f"status = {status}",
        f"reason = {reason}",
        f"problem = {cfg.problem}",
        f"method = {cfg.method}",
        f"optimizer = {cfg.optimizer}",
        f"iterations = {iteration}",
        f"forward_passes = {forward_passes}",
        f"rel_l2_error = {float(last_rel)!r}",
    ]
    (out_dir / "report.txt").write_text("\n".join(report_lines) + "\n", encoding="utf-8")

    return TrainResult(
        status=status,
        reason=reason,
        iterations=iteration,
        forward_passes=forward_passes,
        rel_l2_error=float(last_rel),
        output_dir=out_dir,
        metrics_path=metrics_path,
        checkpoints=checkpoints,
    )


def evaluation_grid(problem, resolution: int) -> ReferenceGrid:
    """Reference grid for out-of-band evaluation.

    Problems with a reference evaluable at arbitrary points (poisson's
    closed form, burgers' quadrature) honor the requested resolution;
    the integrator-backed references (schrodinger, allen_cahn) always use
    their calibrated oracle grid, because that is where their accuracy
    gates were established.
    """
    if resolution < 2:
        raise ContractError("evaluation grid resolution must be >= 2")
    pid = problem.problem_id
    if pid == "poisson":
        return problem.reference(resolution=resolution)
    if pid == "burgers":
        return problem.reference(n_t=resolution, n_x=resolution)
    return cached_reference(pid)


def error_field(p_arch, p_params, grid: ReferenceGrid, d_arch=None, d_params=None):
    """Pointwise absolute error over the grid, as (header, rows).

    Rows iterate the first grid axis outermost.  One abs_error column per
    solution component; discriminator head columns d_0..d_{H-1} are appended
    when a discriminator is supplied.
    """
    a0, a1 = grid.axes
    mesh0, mesh1 = np.meshgrid(a0, a1, indexing="ij")
    pts = np.column_stack([mesh0.ravel(), mesh1.ravel()])
    pred = MlpField.from_params(p_arch, p_params).values(pts)
    ref = grid.values.reshape(-1, grid.values.shape[2])
    if pred.shape != ref.shape:
        raise ContractError(
            f"network output shape {pred.shape} does not match reference {ref.shape}"
        )
    err = np.abs(pred - ref)
    names = list(grid.axis_names)
    columns = [pts[:, 0], pts[:, 1]]
    if err.shape[1] == 1:
        names.append("abs_error")
        columns.append(err[:, 0])
    else:
        for k in range(err.shape[1]):
            names.append(f"abs_error_{k}")
            columns.append(err[:, k])
    if d_arch is not None:
        heads = MlpField.from_params(d_arch, d_params).values(pts)
        for k in range(heads.shape[1]):
            names.append(f"d_{k}")
            columns.append(heads[:, k])
    return ",".join(names), np.column_stack(columns)


def write_error_field(path, header: str, rows: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class EvalReport:
    problem: str
    rel_l2_error: float
    rows: int
    csv_path: Path


def evaluate_checkpoint(checkpoint_path, grid_resolution: int = 100, out_path=None) -> EvalReport:
    """Evaluate a trained generator checkpoint against its problem's reference.

    The problem id and method are recovered from the config_resolved.txt
    that train() wrote next to the checkpoint.  Emits the error-field CSV
    (plus discriminator heads for cpinn runs) and returns the headline
    relative L2 error.
    """
    ckpt = Path(checkpoint_path)
    run_dir = ckpt.parent
    cfg_file = run_dir / "config_resolved.txt"
    if not cfg_file.exists():
        raise CheckpointError(
            f"no config_resolved.txt next to {ckpt}; cannot recover the problem id"
        )
    cfg = load_config(cfg_file)
    problem = get_problem(cfg.problem)
    arch, params = load_checkpoint(ckpt)
    if arch.output_dim != problem.solution_dim:
        raise CheckpointError(
            f"checkpoint outputs {arch.output_dim} components but problem "
            f"{cfg.problem!r} has {problem.solution_dim}; expected a generator checkpoint"
        )
    d_arch = d_params = None
    d_file = run_dir / "discriminator.ckpt"
    if cfg.method == "cpinn" and d_file.exists():
        d_arch, d_params = load_checkpoint(d_file)
    grid = evaluation_grid(problem, grid_resolution)
    rel = relative_l2_error(arch, params, grid)
    header, rows = error_field(arch, params, grid, d_arch, d_params)
    csv_path = Path(out_path) if out_path is not None else run_dir / "error_field.csv"
    write_error_field(csv_path, header, rows)
    return EvalReport(
        problem=cfg.problem,
        rel_l2_error=float(rel),
        rows=int(rows.shape[0]),
        csv_path=csv_path,
    )
