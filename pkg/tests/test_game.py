"""Payoff and loss construction.

The aggregation rule (per group: mean over points of the head-weighted
channel sum; groups added in declared order) is pinned bitwise on a stub
problem with hand-computable channels.  Structural game facts are checked
on real problems: a zeroed discriminator makes the payoff vanish and kills
the generator gradient, the payoff is exactly linear in the discriminator's
output layer, and the taped evaluation reproduces the raw one bit for bit.
"""

import numpy as np
import pytest

from cpinn.autodiff import CrossHessian, grad, payoff_grads
from cpinn.autodiff import tape as tp
from cpinn.errors import ContractError
from cpinn.game import (
    LossBreakdown,
    bilinear_payoff,
    cpinn_payoff,
    linear_basis_instance,
    make_cpinn_payoff,
    make_pinn_objective,
    pinn_loss,
    relative_l2_error,
    vector_params,
)
from cpinn.nn import MlpArchitecture, MlpField, init_params
from cpinn.problems import ReferenceGrid, get_problem
from cpinn.problems.base import GroupSpec, PdeProblem
from cpinn.sampling import CollocationSet


class StubProblem(PdeProblem):
    """Channels that are simple linear functions of the field outputs, so a
    test can recompute the payoff with plain numpy."""

    problem_id = "stub"
    solution_dim = 2
    domain = ((0.0, 1.0), (0.0, 1.0))
    groups = (GroupSpec("interior", 1), GroupSpec("extra", 2))

    def residual_channels(self, field, cset):
        vi = field.values(cset.interior)
        ve = field.values(cset.groups["extra"])
        return {
            "interior": [tp.col_slice(vi, 0, 1) + tp.col_slice(vi, 1, 2)],
            "extra": [tp.col_slice(ve, 0, 1), 2.0 * tp.col_slice(ve, 1, 2)],
        }


def stub_setup(seed=0):
    rng = np.random.default_rng(seed)
    cset = CollocationSet(
        interior=rng.uniform(size=(7, 2)), groups={"extra": rng.uniform(size=(4, 2))}
    )
    p_arch = MlpArchitecture(2, 1, 5, 2)
    d_arch = MlpArchitecture(2, 1, 6, 3)
    return StubProblem(), cset, p_arch, d_arch


def test_payoff_matches_hand_aggregation():
    problem, cset, p_arch, d_arch = stub_setup()
    p = MlpField.from_params(p_arch, init_params(p_arch, seed=1))
    d = MlpField.from_params(d_arch, init_params(d_arch, seed=2))

    vi = p.values(cset.interior)
    ve = p.values(cset.groups["extra"])
    hi = d.values(cset.interior)
    he = d.values(cset.groups["extra"])
    expected = np.mean(hi[:, 0:1] * (vi[:, 0:1] + vi[:, 1:2])) + np.mean(
        he[:, 1:2] * ve[:, 0:1] + he[:, 2:3] * (2.0 * ve[:, 1:2])
    )
    assert cpinn_payoff(problem, p, d, cset) == expected


def test_payoff_zero_for_zero_discriminator():
    problem, cset, p_arch, d_arch = stub_setup()
    p = MlpField.from_params(p_arch, init_params(p_arch, seed=3))
    d_params = init_params(d_arch, seed=4).with_values(np.zeros(d_arch.param_count()))
    d = MlpField.from_params(d_arch, d_params)
    assert cpinn_payoff(problem, p, d, cset) == 0.0


def test_payoff_linear_in_discriminator_output_layer():
    problem, cset, p_arch, d_arch = stub_setup(seed=5)
    p = MlpField.from_params(p_arch, init_params(p_arch, seed=6))
    d_params = init_params(d_arch, seed=7)
    base = cpinn_payoff(problem, p, MlpField.from_params(d_arch, d_params), cset)

    segs = d_params.segments()
    segs[-1] = segs[-1] * 2.0
    segs[-2] = segs[-2] * 2.0
    doubled = cpinn_payoff(problem, p, MlpField(d_arch, segs), cset)
    assert doubled == 2.0 * base


def test_generator_gradient_vanishes_against_zero_discriminator():
    problem, cset, p_arch, d_arch = stub_setup(seed=8)
    payoff_fn = make_cpinn_payoff(problem, p_arch, d_arch, cset)
    x = init_params(p_arch, seed=9)
    y = init_params(d_arch, seed=10).with_values(np.zeros(d_arch.param_count()))
    value, gx, gy = payoff_grads(payoff_fn, x, y)
    assert value == 0.0
    assert np.abs(gx.values).max() == 0.0

    # the only live discriminator direction at zero weights is the output
    # bias: its gradient is each head's mean channel value
    p = MlpField.from_params(p_arch, x)
    r_int = p.values(cset.interior)
    r_ext = p.values(cset.groups["extra"])
    expect_bias = np.array(
        [
            np.mean(r_int[:, 0] + r_int[:, 1]),
            np.mean(r_ext[:, 0]),
            np.mean(2.0 * r_ext[:, 1]),
        ]
    )
    gy_segs = gy.segments()
    assert np.allclose(gy_segs[-1].ravel(), expect_bias, atol=1e-15)
    for seg in gy_segs[:-1]:
        assert np.abs(seg).max() == 0.0


def test_taped_payoff_matches_raw():
    problem, cset, p_arch, d_arch = stub_setup(seed=11)
    payoff_fn = make_cpinn_payoff(problem, p_arch, d_arch, cset)
    x = init_params(p_arch, seed=12)
    y = init_params(d_arch, seed=13)
    raw = payoff_fn(x.segments(), y.segments())
    assert CrossHessian(payoff_fn, x, y).value == raw


def test_taped_payoff_matches_raw_on_poisson():
    problem = get_problem("poisson")
    cset = problem.sample_points({"interior": 20, "boundary": 8}, seed=0)
    p_arch = MlpArchitecture(2, 2, 8, 1)
    d_arch = MlpArchitecture(2, 2, 8, 2, activation="relu")
    payoff_fn = make_cpinn_payoff(problem, p_arch, d_arch, cset)
    x = init_params(p_arch, seed=1)
    y = init_params(d_arch, seed=2)
    raw = payoff_fn(x.segments(), y.segments())
    assert np.isfinite(raw)
    assert CrossHessian(payoff_fn, x, y).value == raw


def test_pinn_loss_breakdown():
    problem, cset, p_arch, _ = stub_setup(seed=14)
    p = MlpField.from_params(p_arch, init_params(p_arch, seed=15))
    breakdown = pinn_loss(problem, p, cset)
    assert isinstance(breakdown, LossBreakdown)
    assert list(breakdown.per_group) == ["interior", "extra"]

    vi = p.values(cset.interior)
    ve = p.values(cset.groups["extra"])
    li = np.mean((vi[:, 0:1] + vi[:, 1:2]) ** 2)
    le = np.mean(ve[:, 0:1] ** 2) + np.mean((2.0 * ve[:, 1:2]) ** 2)
    assert abs(breakdown.per_group["interior"] - li) < 1e-15
    assert abs(breakdown.per_group["extra"] - le) < 1e-15
    assert breakdown.total == breakdown.per_group["interior"] + breakdown.per_group["extra"]
    assert breakdown.total > 0.0


def test_pinn_objective_gradient_against_finite_differences():
    problem = get_problem("poisson")
    cset = problem.sample_points({"interior": 12, "boundary": 8}, seed=3)
    arch = MlpArchitecture(2, 2, 6, 1)
    objective = make_pinn_objective(problem, arch, cset)
    params = init_params(arch, seed=4)
    g = grad(objective, params).values

    def loss_at(vals):
        return float(tp.value_of(objective(params.with_values(vals).segments())))

    rng = np.random.default_rng(5)
    h = 1e-6
    for idx in rng.choice(len(params), size=12, replace=False):
        bump = np.zeros(len(params))
        bump[idx] = h
        fd = (loss_at(params.values + bump) - loss_at(params.values - bump)) / (2 * h)
        assert abs(fd - g[idx]) < 1e-6 * (1.0 + abs(g[idx]))


def test_architecture_validation():
    problem, cset, p_arch, d_arch = stub_setup()
    with pytest.raises(ContractError, match="output"):
        make_pinn_objective(problem, MlpArchitecture(2, 1, 5, 1), cset)
    with pytest.raises(ContractError, match="heads"):
        make_cpinn_payoff(problem, p_arch, MlpArchitecture(2, 1, 5, 2), cset)
    with pytest.raises(ContractError, match="coordinates"):
        make_cpinn_payoff(problem, MlpArchitecture(3, 1, 5, 2), d_arch, cset)
    with pytest.raises(ContractError, match="missing or empty"):
        make_cpinn_payoff(
            problem, p_arch, d_arch, CollocationSet(interior=cset.interior, groups={})
        )
    with pytest.raises(ContractError, match="interior"):
        make_cpinn_payoff(
            problem,
            p_arch,
            d_arch,
            CollocationSet(interior=np.empty((0, 2)), groups=cset.groups),
        )


def test_relative_l2_error_of_zero_field_is_one():
    grid = ReferenceGrid(
        axes=(np.linspace(0, 1, 9), np.linspace(-1, 1, 7)),
        axis_names=("t", "x"),
        values=np.random.default_rng(6).uniform(0.5, 1.5, size=(9, 7, 2)),
        source="oracle",
    )
    arch = MlpArchitecture(2, 1, 4, 2)
    params = init_params(arch, seed=7).with_values(np.zeros(arch.param_count()))
    assert relative_l2_error(arch, params, grid) == 1.0

    mono = MlpArchitecture(2, 1, 4, 1)
    with pytest.raises(ContractError, match="component"):
        relative_l2_error(mono, init_params(mono, seed=8), grid)


def test_relative_l2_error_chunking_is_invisible():
    grid = get_problem("poisson").reference(resolution=40)
    arch = MlpArchitecture(2, 2, 8, 1)
    params = init_params(arch, seed=9)
    small = relative_l2_error(arch, params, grid, chunk_size=100)
    big = relative_l2_error(arch, params, grid, chunk_size=10**6)
    assert small == big


def test_bilinear_payoff_value_and_stationarity():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((5, 5))
    f = rng.standard_normal(5)
    payoff_fn = bilinear_payoff(A, f)
    x = vector_params(rng.standard_normal(5), "pi")
    y = vector_params(rng.standard_normal(5), "delta")
    value = payoff_fn(x.segments(), y.segments())
    assert abs(float(value) - float(y.values @ (A @ x.values - f))) < 1e-14

    payoff_fn, x_star, y_star = linear_basis_instance(12, seed=0)
    _, gx, gy = payoff_grads(payoff_fn, x_star, y_star)
    assert np.abs(gx.values).max() == 0.0
    assert np.abs(gy.values).max() == 0.0
