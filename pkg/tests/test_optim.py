"""Optimizer oracles: hand-computed traces, closed-form steps, game behavior."""

import numpy as np
import pytest

from cpinn.autodiff import CrossHessian, ParamVector, payoff_grads
from cpinn.errors import StepRejected
from cpinn.optim import (
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

VEC = lambda n, name: ((name, (n,)),)


def scalar_game():
    """f(x, y) = x*y with 1-vector players."""

    def payoff(xl, yl):
        return (xl[0] * yl[0]).sum()

    return payoff


def bilinear_game(A, f):
    """f(pi, delta) = delta^T (A pi - f)."""
    n = A.shape[0]
    fcol = f.reshape(n, 1)

    def payoff(xl, yl):
        r = A @ xl[0].reshape((n, 1)) - fcol
        return (yl[0].reshape((1, n)) @ r).reshape(())

    return payoff


def pv(values, name="p"):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    return ParamVector(values, VEC(values.size, name))


# -- sgd / adam ---------------------------------------------------------------


def test_sgd_step_formula():
    s = SgdState(lr=0.1)
    assert sgd_step(s, np.array([1.0]), np.array([2.0]))[0] == pytest.approx(0.8, abs=0)
    p = np.random.default_rng(0).standard_normal(5)
    assert np.array_equal(sgd_step(s, p, np.zeros(5)), p)


def test_adam_zero_gradient_no_movement():
    s = AdamState(lr=1e-3)
    p = np.array([1.0, -2.0])
    assert np.array_equal(adam_step(s, p, np.zeros(2)), p)


def test_adam_first_step_bias_corrected_value():
    s = AdamState(lr=1e-3, beta1=0.99, beta2=0.99, eps=1e-8)
    p = adam_step(s, np.array([0.0]), np.array([1.0]))
    # bias correction makes the first step lr * 1/(1 + eps)
    assert p[0] == pytest.approx(-1e-3 / (1.0 + 1e-8), rel=1e-15)


def test_adam_two_steps_match_scalar_reference():
    lr, b1, b2, eps = 1e-3, 0.99, 0.99, 1e-8
    g1, g2 = 0.7, -1.3
    # independent scalar implementation of bias-corrected Adam
    m = b1 * 0.0 + (1 - b1) * g1
    v = b2 * 0.0 + (1 - b2) * g1 * g1
    theta = 0.5 - lr * (m / (1 - b1)) / (np.sqrt(v / (1 - b2)) + eps)
    m = b1 * m + (1 - b1) * g2
    v = b2 * v + (1 - b2) * g2 * g2
    theta = theta - lr * (m / (1 - b1**2)) / (np.sqrt(v / (1 - b2**2)) + eps)

    s = AdamState(lr=lr, beta1=b1, beta2=b2, eps=eps)
    p = adam_step(s, np.array([0.5]), np.array([g1]))
    p = adam_step(s, p, np.array([g2]))
    assert p[0] == pytest.approx(theta, abs=1e-15)
    assert s.t == 2
    assert np.all(s.v >= 0)


# -- extragradient ------------------------------------------------------------


def test_extragradient_sgd_hand_trace_on_xy():
    eta = 0.1
    st = ExtragradientState(SgdState(eta), SgdState(eta))
    rep = extragradient_step(st, scalar_game(), pv(1.0, "x"), pv(1.0, "y"))
    assert rep.x.values[0] == pytest.approx(1 - eta * (1 + eta), rel=1e-15)
    assert rep.y.values[0] == pytest.approx(1 + eta * (1 - eta), rel=1e-15)
    assert rep.forward_passes == 2


def test_extragradient_zero_gradient_fixed_point():
    st = ExtragradientState(SgdState(0.1), SgdState(0.1))
    rep = extragradient_step(st, scalar_game(), pv(0.0, "x"), pv(5.0, "y"))
    # at x=0 the y-gradient vanishes; at y=5 x moves, so use the true rest point
    rep0 = extragradient_step(st, scalar_game(), pv(0.0, "x"), pv(0.0, "y"))
    assert rep0.x.values[0] == 0.0
    assert rep0.y.values[0] == 0.0
    assert rep.y.values[0] == pytest.approx(5.0 - 0.1 * (0.1 * 5.0), rel=1e-12)


def test_extragradient_contracts_where_gda_spirals():
    eta = 0.1
    x, y = pv(1.0, "x"), pv(1.0, "y")
    st = ExtragradientState(SgdState(eta), SgdState(eta))
    norms = [np.hypot(x.values[0], y.values[0])]
    for _ in range(30):
        rep = extragradient_step(st, scalar_game(), x, y)
        x, y = rep.x, rep.y
        norms.append(np.hypot(x.values[0], y.values[0]))
    assert all(b < a for a, b in zip(norms, norms[1:]))

    gx_, gy_ = pv(1.0, "x"), pv(1.0, "y")
    gda = [np.hypot(1.0, 1.0)]
    for _ in range(30):
        _, gx, gy = payoff_grads(scalar_game(), gx_, gy_)
        gx_ = gx_.with_values(gx_.values - eta * gx.values)
        gy_ = gy_.with_values(gy_.values + eta * gy.values)
        gda.append(np.hypot(gx_.values[0], gy_.values[0]))
    assert all(b > a for a, b in zip(gda, gda[1:]))


def test_extraadam_shares_moment_buffers():
    st = ExtragradientState(AdamState(lr=1e-2), AdamState(lr=1e-2))
    extragradient_step(st, scalar_game(), pv(1.0, "x"), pv(1.0, "y"))
    assert st.x_opt.t == 2  # both half-steps advanced the shared state
    assert st.y_opt.t == 2


# -- cgd ----------------------------------------------------------------------


def test_cgd_scalar_example_exact():
    st = CgdState(lr_x=1.0, lr_y=1.0)
    rep = cgd_step(st, scalar_game(), pv(1.0, "x"), pv(1.0, "y"))
    assert rep.x.values[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.y.values[0] == pytest.approx(1.0, abs=1e-12)
    assert rep.inner_iterations >= 1
    assert rep.forward_passes == 2 + 2 * rep.inner_iterations


def test_cgd_zero_gradients_zero_step():
    st = CgdState(lr_x=0.5, lr_y=0.5)
    rep = cgd_step(st, scalar_game(), pv(0.0, "x"), pv(0.0, "y"))
    assert rep.x.values[0] == 0.0
    assert rep.y.values[0] == 0.0


def test_cgd_bilinear_fixed_points():
    rng = np.random.default_rng(0)
    n = 10
    A = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
    f = rng.standard_normal(n)
    pi_star = np.linalg.solve(A, f)
    payoff = bilinear_game(A, f)
    st = CgdState(lr_x=0.1, lr_y=0.1)
    rep = cgd_step(st, payoff, pv(pi_star, "pi"), pv(np.zeros(n), "delta"))
    assert np.allclose(rep.x.values, pi_star, atol=1e-12)
    assert np.allclose(rep.y.values, 0.0, atol=1e-12)
    # a non-equilibrium point moves
    rep2 = cgd_step(st, payoff, pv(np.zeros(n), "pi"), pv(np.zeros(n), "delta"))
    assert np.linalg.norm(rep2.x.values) > 0 or np.linalg.norm(rep2.y.values) > 0


def test_cgd_converges_on_bilinear_game():
    rng = np.random.default_rng(1)
    n = 8
    A = rng.standard_normal((n, n)) + 4.0 * np.eye(n)
    f = rng.standard_normal(n)
    payoff = bilinear_game(A, f)
    x, y = pv(np.zeros(n), "pi"), pv(np.zeros(n), "delta")
    st = CgdState(lr_x=0.5, lr_y=0.5)
    for _ in range(200):
        rep = cgd_step(st, payoff, x, y)
        x, y = rep.x, rep.y
    assert np.linalg.norm(A @ x.values - f) / np.linalg.norm(f) < 1e-6


def test_cgd_step_rejected_when_inner_budget_too_small():
    rng = np.random.default_rng(2)
    n = 12
    A = rng.standard_normal((n, n)) * 5.0
    payoff = bilinear_game(A, rng.standard_normal(n))
    st = CgdState(lr_x=1.0, lr_y=1.0, rtol=1e-14, max_inner=1)
    with pytest.raises(StepRejected) as err:
        cgd_step(st, payoff, pv(rng.standard_normal(n), "pi"), pv(rng.standard_normal(n), "delta"))
    assert err.value.residual_norm > 0
    assert err.value.iterations == 1


# -- acgd ---------------------------------------------------------------------


def test_acgd_frozen_scales_reproduce_cgd():
    rng = np.random.default_rng(3)
    n = 6
    A = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
    payoff = bilinear_game(A, rng.standard_normal(n))
    x0, y0 = rng.standard_normal(n), rng.standard_normal(n)
    cg_rep = cgd_step(CgdState(lr_x=0.02, lr_y=0.02), payoff, pv(x0, "pi"), pv(y0, "delta"))
    ac_rep = acgd_step(
        AcgdState(lr_x=0.02, lr_y=0.02, freeze_scales=True, rtol=1e-12),
        payoff,
        pv(x0, "pi"),
        pv(y0, "delta"),
    )
    assert np.allclose(ac_rep.x.values, cg_rep.x.values, atol=1e-10)
    assert np.allclose(ac_rep.y.values, cg_rep.y.values, atol=1e-10)


def test_acgd_zero_gradients_zero_step_moments_update():
    st = AcgdState(lr_x=1e-3, lr_y=1e-3)
    rep = acgd_step(st, scalar_game(), pv(0.0, "x"), pv(0.0, "y"))
    assert rep.x.values[0] == 0.0
    assert rep.y.values[0] == 0.0
    assert st.t == 1
    assert np.array_equal(st.vx, np.zeros(1))


def test_acgd_scales_strictly_positive():
    st = AcgdState(lr_x=1e-3, lr_y=1e-3)
    ax, ay = st.scales(np.array([0.0, 5.0]), np.array([1e-8]))
    assert np.all(ax > 0) and np.all(ay > 0)


def test_acgd_converges_on_scalar_bilinear_game():
    x, y = pv(1.0, "x"), pv(1.0, "y")
    st = AcgdState(lr_x=1.0, lr_y=1.0)
    payoff = scalar_game()
    for _ in range(200):
        rep = acgd_step(st, payoff, x, y)
        x, y = rep.x, rep.y
    assert np.hypot(x.values[0], y.values[0]) < 1e-6

    # GDA oracle at the same rate spirals outward on this game
    gx_, gy_ = pv(1.0, "x"), pv(1.0, "y")
    for _ in range(20):
        _, gx, gy = payoff_grads(payoff, gx_, gy_)
        gx_ = gx_.with_values(gx_.values - 1.0 * gx.values)
        gy_ = gy_.with_values(gy_.values + 1.0 * gy.values)
    assert np.hypot(gx_.values[0], gy_.values[0]) > 1.5


def test_acgd_inner_operator_adjoint_consistency():
    rng = np.random.default_rng(4)
    n = 7
    A = rng.standard_normal((n, n))
    payoff = bilinear_game(A, rng.standard_normal(n))
    ch = CrossHessian(payoff, pv(rng.standard_normal(n), "pi"), pv(rng.standard_normal(n), "delta"))
    for _ in range(5):
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        lhs = float(u @ ch.apply_xy(v))
        rhs = float(ch.apply_yx(u) @ v)
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


# -- cost model ---------------------------------------------------------------


def test_forward_pass_cost_model():
    assert forward_pass_cost("adam") == 1
    assert forward_pass_cost("sgd") == 1
    assert forward_pass_cost("extraadam") == 2
    assert forward_pass_cost("extrasgd") == 2
    assert forward_pass_cost("acgd", inner_iterations=10) == 22
    assert forward_pass_cost("cgd", inner_iterations=3) == 8
