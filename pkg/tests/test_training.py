"""Training loop, curriculum controller, and checkpoint evaluation."""

import math

import numpy as np
import pytest

from cpinn import training
from cpinn.config import parse_config_text
from cpinn.errors import CheckpointError, ContractError
from cpinn.game import relative_l2_error
from cpinn.nn import MlpArchitecture, init_params, save_checkpoint
from cpinn.problems import ReferenceGrid, cached_reference, get_problem
from cpinn.training import (
    CurriculumSchedule,
    error_field,
    evaluate_checkpoint,
    evaluation_grid,
    train,
)


def shuffled_time_points(n=40, seed=0):
    pts = np.column_stack([np.linspace(0.0, 1.0, n), np.linspace(-1.0, 1.0, n)])
    return pts[np.random.default_rng(seed).permutation(n)]


def poisson_config(tmp_path, name="run", **overrides):
    base = {
        "problem": "poisson",
        "method": "cpinn",
        "optimizer": "acgd",
        "generator_layers": 2,
        "generator_width": 12,
        "discriminator_layers": 2,
        "discriminator_width": 12,
        "points_interior": 48,
        "points_boundary": 12,
        "budget_iterations": 3,
        "eval_every": 1,
        "seed": 3,
        "output_dir": str(tmp_path / name),
    }
    base.update(overrides)
    if base["method"] == "pinn":
        for key in list(base):
            if key.startswith("discriminator"):
                del base[key]
    text = "".join(f"{k} = {v}\n" for k, v in base.items() if v is not None)
    return parse_config_text(text)


def read_metrics(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


class TestCurriculumSchedule:
    def test_subsets_span_time_quantiles_in_order(self):
        pts = shuffled_time_points(40)
        sched = CurriculumSchedule(pts, n_subsets=4, threshold=1e-7)
        sorted_times = np.sort(pts[:, 0])
        for k in range(4):
            block = sched.subset(k)
            assert block.shape == (10, 2)
            assert np.array_equal(np.sort(block[:, 0]), sorted_times[10 * k : 10 * (k + 1)])
        assert np.array_equal(sched.active_points(), sched.subset(0))

    def test_advances_one_subset_only_when_below_threshold(self):
        sched = CurriculumSchedule(shuffled_time_points(40), 4, threshold=1e-3)
        assert not sched.check(1e-3)
        assert sched.active_subsets == 1
        assert sched.check(0.5e-3)
        assert sched.active_subsets == 2
        assert len(sched.active_points()) == 20

    def test_infinite_threshold_activates_one_block_per_check(self):
        sched = CurriculumSchedule(shuffled_time_points(40), 4, threshold=math.inf)
        outcomes = [sched.check(1e300) for _ in range(6)]
        assert outcomes == [True, True, True, False, False, False]
        assert sched.complete
        assert len(sched.active_points()) == 40

    def test_zero_threshold_never_advances(self):
        sched = CurriculumSchedule(shuffled_time_points(40), 4, threshold=0.0)
        assert not any(sched.check(0.0) for _ in range(5))
        assert sched.active_subsets == 1

    def test_rejects_uneven_split_and_bad_threshold(self):
        pts = shuffled_time_points(40)
        with pytest.raises(ContractError, match="evenly divide"):
            CurriculumSchedule(pts, n_subsets=7)
        with pytest.raises(ContractError, match="threshold"):
            CurriculumSchedule(pts, 4, threshold=-1.0)
        with pytest.raises(ContractError, match="threshold"):
            CurriculumSchedule(pts, 4, threshold=math.nan)

    def test_subset_index_bounds(self):
        sched = CurriculumSchedule(shuffled_time_points(40), 4)
        with pytest.raises(ContractError, match="out of range"):
            sched.subset(4)


class TestTrainLoop:
    def test_budget_zero_writes_only_the_initial_row(self, tmp_path):
        cfg = poisson_config(tmp_path, budget_iterations=0)
        result = train(cfg)
        assert result.status == "completed"
        assert result.iterations == 0 and result.forward_passes == 0
        _, rows = read_metrics(result.metrics_path)
        assert len(rows) == 1
        assert rows[0]["iteration"] == "0"
        assert rows[0]["cumulative_forward_passes"] == "0"
        assert result.checkpoints["generator"].exists()

    def test_rerun_with_same_config_is_byte_identical(self, tmp_path):
        first = train(poisson_config(tmp_path, "a", budget_iterations=4))
        second = train(poisson_config(tmp_path, "b", budget_iterations=4))
        assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()

    def test_forward_pass_accounting_is_exact_per_step(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=4))
        _, rows = read_metrics(result.metrics_path)
        for prev, cur in zip(rows, rows[1:]):
            delta = int(cur["cumulative_forward_passes"]) - int(
                prev["cumulative_forward_passes"]
            )
            assert delta == 2 + 2 * int(cur["inner_iterations"])

    def test_adam_costs_one_forward_pass_per_iteration(self, tmp_path):
        cfg = poisson_config(tmp_path, method="pinn", optimizer="adam", budget_iterations=5)
        result = train(cfg)
        _, rows = read_metrics(result.metrics_path)
        fps = [int(r["cumulative_forward_passes"]) for r in rows]
        assert fps == [int(r["iteration"]) for r in rows]

    def test_loss_total_is_the_exact_rowwise_component_sum(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=4))
        header, rows = read_metrics(result.metrics_path)
        group_cols = [c for c in header if c.startswith("loss_") and c != "loss_total"]
        assert group_cols == ["loss_interior", "loss_boundary"]
        for row in rows:
            acc = 0.0
            for col in group_cols:
                acc += float(row[col])
            assert float(row["loss_total"]) == acc

    def test_iterations_increase_and_forward_passes_never_decrease(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=6, eval_every=2))
        _, rows = read_metrics(result.metrics_path)
        its = [int(r["iteration"]) for r in rows]
        fps = [int(r["cumulative_forward_passes"]) for r in rows]
        assert its == sorted(set(its))
        assert fps == sorted(fps)

    def test_off_cadence_budget_still_logs_the_final_iteration(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=5, eval_every=2))
        _, rows = read_metrics(result.metrics_path)
        assert [int(r["iteration"]) for r in rows] == [0, 2, 4, 5]

    def test_forward_pass_budget_stops_the_run(self, tmp_path):
        cfg = poisson_config(
            tmp_path,
            method="pinn",
            optimizer="adam",
            budget_iterations=10_000,
            budget_forward_passes=7,
        )
        result = train(cfg)
        assert result.status == "completed"
        assert result.iterations == 7 and result.forward_passes == 7

    def test_rejected_inner_solve_aborts_with_partial_artifacts(self, tmp_path):
        cfg = poisson_config(
            tmp_path,
            optimizer="cgd",
            inner_max_iterations=1,
            inner_rtol="1e-14",
            budget_iterations=5,
        )
        result = train(cfg)
        assert result.status == "aborted"
        assert "rejected" in result.reason
        _, rows = read_metrics(result.metrics_path)
        assert len(rows) >= 1
        assert result.checkpoints["generator"].exists()
        report = (result.output_dir / "report.txt").read_text()
        assert "status = aborted" in report

    def test_non_finite_loss_aborts_with_diagnostic(self, tmp_path):
        cfg = poisson_config(
            tmp_path,
            method="pinn",
            optimizer="sgd",
            lr="1e18",
            generator_activation="relu",
            budget_iterations=10,
        )
        with np.errstate(all="ignore"):
            result = train(cfg)
        assert result.status == "aborted"
        assert "non-finite" in result.reason

    def test_pinn_run_never_touches_the_two_player_machinery(self, tmp_path, monkeypatch):
        def forbidden(*args, **kwargs):
            raise AssertionError("pinn run constructed a discriminator payoff")

        monkeypatch.setattr(training, "make_cpinn_payoff", forbidden)
        cfg = poisson_config(tmp_path, method="pinn", optimizer="adam", budget_iterations=2)
        result = train(cfg)
        assert result.status == "completed"
        assert "discriminator" not in result.checkpoints
        assert not (result.output_dir / "discriminator.ckpt").exists()

    def test_final_checkpoint_reproduces_the_logged_error(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=3))
        _, rows = read_metrics(result.metrics_path)
        from cpinn.nn import load_checkpoint

        arch, params = load_checkpoint(result.checkpoints["generator"])
        rel = relative_l2_error(arch, params, cached_reference("poisson"))
        assert rel == float(rows[-1]["rel_l2_error"])

    def test_resolved_config_reparses_to_the_same_run(self, tmp_path):
        cfg = poisson_config(tmp_path, budget_iterations=2)
        result = train(cfg)
        text = (result.output_dir / "config_resolved.txt").read_text()
        assert parse_config_text(text) == cfg

    def test_wall_times_live_outside_the_metrics_file(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=2))
        header, _ = read_metrics(result.metrics_path)
        assert "wall_time_seconds" not in header
        timing_header = (result.output_dir / "timings.csv").read_text().splitlines()[0]
        assert timing_header == "iteration,wall_time_seconds"

    def test_curriculum_run_completes_on_a_time_dependent_problem(
        self, tmp_path, allen_cahn_grid
    ):
        cfg = poisson_config(
            tmp_path,
            problem="allen_cahn",
            method="pinn",
            optimizer="adam",
            points_interior=40,
            points_boundary=None,
            points_initial=8,
            points_periodic_value=8,
            points_periodic_derivative=8,
            budget_iterations=3,
            curriculum="on",
            curriculum_subsets=4,
            curriculum_threshold="inf",
        )
        result = train(cfg, reference=allen_cahn_grid)
        assert result.status == "completed"
        header, rows = read_metrics(result.metrics_path)
        assert "loss_periodic_derivative" in header
        assert len(rows) == 4


def make_run_dir(tmp_path, cfg, params=None):
    """Materialize a fake completed run: resolved config + generator checkpoint."""
    from cpinn.config import config_text

    out = tmp_path / "fake_run"
    out.mkdir()
    (out / "config_resolved.txt").write_text(config_text(cfg))
    problem = get_problem(cfg.problem)
    arch = MlpArchitecture(2, cfg.generator_layers, cfg.generator_width,
                           problem.solution_dim, cfg.generator_activation)
    if params is None:
        params = init_params(arch, seed=0)
    save_checkpoint(out / "generator.ckpt", arch, params)
    return out / "generator.ckpt", arch, params


class TestEvaluation:
    def test_zero_network_scores_relative_error_exactly_one(self, tmp_path):
        cfg = poisson_config(tmp_path, method="pinn", optimizer="adam")
        ckpt, arch, params = make_run_dir(tmp_path, cfg)
        zero = params.with_values(np.zeros_like(params.values))
        save_checkpoint(ckpt, arch, zero)
        report = evaluate_checkpoint(ckpt, grid_resolution=10)
        assert report.rel_l2_error == 1.0
        assert report.rows == 100

    def test_grid_resolution_sets_the_row_count(self, tmp_path):
        cfg = poisson_config(tmp_path, method="pinn", optimizer="adam")
        ckpt, _, _ = make_run_dir(tmp_path, cfg)
        report = evaluate_checkpoint(ckpt, grid_resolution=100)
        assert report.rows == 100 * 100
        body = report.csv_path.read_text().splitlines()
        assert body[0] == "x,y,abs_error"
        assert len(body) == 1 + 10_000

    def test_error_field_vanishes_when_the_reference_is_the_network_itself(self):
        arch = MlpArchitecture(2, 2, 8, 1, "tanh")
        params = init_params(arch, seed=5)
        xs = np.linspace(-2.0, 2.0, 12)
        mesh = np.meshgrid(xs, xs, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        from cpinn.nn import MlpField

        values = MlpField.from_params(arch, params).values(pts).reshape(12, 12, 1)
        grid = ReferenceGrid((xs, xs), ("x", "y"), values, source="analytic")
        _, rows = error_field(arch, params, grid)
        assert rows.shape == (144, 3)
        assert np.all(rows[:, 2] <= 1e-12)

    def test_cpinn_checkpoints_carry_discriminator_columns(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=1))
        report = evaluate_checkpoint(result.checkpoints["generator"], grid_resolution=9)
        header = report.csv_path.read_text().splitlines()[0]
        assert header == "x,y,abs_error,d_0,d_1"
        assert report.rows == 81

    def test_checkpoint_without_sibling_config_is_refused(self, tmp_path):
        cfg = poisson_config(tmp_path, method="pinn", optimizer="adam")
        ckpt, _, _ = make_run_dir(tmp_path, cfg)
        orphan = tmp_path / "orphan.ckpt"
        orphan.write_bytes(ckpt.read_bytes())
        with pytest.raises(CheckpointError, match="config_resolved"):
            evaluate_checkpoint(orphan)

    def test_discriminator_checkpoint_is_rejected_as_generator(self, tmp_path):
        result = train(poisson_config(tmp_path, budget_iterations=1))
        with pytest.raises(CheckpointError, match="generator"):
            evaluate_checkpoint(result.checkpoints["discriminator"])

    def test_evaluation_grid_respects_resolution_where_meaningful(self, schrodinger_grid):
        poisson = evaluation_grid(get_problem("poisson"), 17)
        assert poisson.values.shape == (17, 17, 1)
        burgers = evaluation_grid(get_problem("burgers"), 9)
        assert burgers.values.shape == (9, 9, 1)
        pinned = evaluation_grid(get_problem("schrodinger"), 33)
        assert pinned.values.shape == schrodinger_grid.values.shape
        with pytest.raises(ContractError, match="resolution"):
            evaluation_grid(get_problem("poisson"), 1)
