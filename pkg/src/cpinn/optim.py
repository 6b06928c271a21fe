"""Optimizers for the least-squares and game formulations.

Single-objective: SGD and bias-corrected Adam.  Game optimizers treat x as
the minimizing player and y as the maximizing player of one scalar payoff:

* extragradient wraps a base step (SGD or Adam): take a provisional step,
  re-evaluate gradients there, re-step from the original point;
* cgd solves the local bilinear game each step,

      dx = -lr_x (I + lr_x lr_y Dxy Dyx)^-1 (gx + lr_y Dxy gy)
      dy = +lr_y (gy + Dyx dx)

  with conjugate gradients on the SPD system (the dy line is the push-through
  identity applied to the symmetric form, so one solve serves both players);
* acgd replaces the scalar rates by per-coordinate scale vectors from
  bias-corrected second-moment EMAs, solved in the symmetrized form
  sqrt(Ax) (I + sqrt(Ax) Dxy Ay Dyx sqrt(Ax))^-1 sqrt(Ax) via GMRES.

forward_pass_cost pins the budget currency: a gradient evaluation is one
forward pass, an extragradient step two, and a cgd/acgd step two plus two
per inner Krylov iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import CrossHessian, ParamVector, payoff_grads
from .errors import ContractError, StepRejected
from .krylov import LinearOperator, cg, gmres


@dataclass
class SgdState:
    lr: float


def sgd_step(state: SgdState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    return params - state.lr * np.asarray(grad)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.99
    beta2: float = 0.99
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    g = np.asarray(grad, dtype=np.float64)
    if state.m is None:
        state.m = np.zeros_like(g)
        state.v = np.zeros_like(g)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def _base_step(opt, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if isinstance(opt, AdamState):
        return adam_step(opt, params, grad)
    if isinstance(opt, SgdState):
        return sgd_step(opt, params, grad)
    raise ContractError(f"unsupported base optimizer {type(opt).__name__}")


@dataclass
class StepReport:
    x: ParamVector
    y: ParamVector
    forward_passes: int
    inner_iterations: int = 0
    payoff: float = 0.0


@dataclass
class ExtragradientState:
    """Base-optimizer states for both players.  For the Adam base the moment
    buffers are shared between the extrapolation and the update half-steps
    (both mutate the same state, so t advances twice per outer step)."""

    x_opt: SgdState | AdamState
    y_opt: SgdState | AdamState


def extragradient_step(
    state: ExtragradientState, payoff_fn, x: ParamVector, y: ParamVector
) -> StepReport:
    value, gx, gy = payoff_grads(payoff_fn, x, y)
    # provisional step: x descends, y ascends (ascent = descent on -gy)
    x_half = _base_step(state.x_opt, x.values, gx.values)
    y_half = _base_step(state.y_opt, y.values, -gy.values)
    _, gx2, gy2 = payoff_grads(payoff_fn, x.with_values(x_half), y.with_values(y_half))
    x_new = _base_step(state.x_opt, x.values, gx2.values)
    y_new = _base_step(state.y_opt, y.values, -gy2.values)
    return StepReport(
        x.with_values(x_new), y.with_values(y_new), forward_passes=2, payoff=value
    )


@dataclass
class CgdState:
    lr_x: float = 1e-2
    lr_y: float = 1e-2
    rtol: float = 1e-12
    atol: float = 1e-20
    max_inner: int | None = None
    warm_start: bool = False
    last_inner_iterations: int = 0
    _warm: np.ndarray | None = field(default=None, repr=False)


def cgd_step(state: CgdState, payoff_fn, x: ParamVector, y: ParamVector) -> StepReport:
    ch = CrossHessian(payoff_fn, x, y)
    ex, ey = state.lr_x, state.lr_y
    rhs = -ex * (ch.grad_x + ey * ch.apply_xy(ch.grad_y))
    op = LinearOperator(len(x), lambda v: v + ex * ey * ch.apply_xy(ch.apply_yx(v)))
    x0 = state._warm if state.warm_start else None
    rep = cg(op, rhs, rtol=state.rtol, atol=state.atol, max_iter=state.max_inner, x0=x0)
    if not rep.converged:
        raise StepRejected(
            f"cgd inner solve stalled at residual {rep.residual_norm:.3e} "
            f"after {rep.iterations} iterations",
            rep.residual_norm,
            rep.iterations,
        )
    dx = rep.solution
    dy = ey * (ch.grad_y + ch.apply_yx(dx))
    state.last_inner_iterations = rep.iterations
    if state.warm_start:
        state._warm = dx.copy()
    return StepReport(
        x.with_values(x.values + dx),
        y.with_values(y.values + dy),
        forward_passes=forward_pass_cost("cgd", rep.iterations),
        inner_iterations=rep.iterations,
        payoff=ch.value,
    )


@dataclass
class AcgdState:
    lr_x: float = 1e-3
    lr_y: float = 1e-3
    beta2: float = 0.99
    eps: float = 1e-6
    rtol: float = 1e-7
    atol: float = 1e-20
    max_inner: int | None = None
    freeze_scales: bool = False
    warm_start: bool = False
    vx: np.ndarray | None = None
    vy: np.ndarray | None = None
    t: int = 0
    last_inner_iterations: int = 0
    _warm: np.ndarray | None = field(default=None, repr=False)

    def scales(self, gx: np.ndarray, gy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance the second-moment EMAs and return both players' strictly
        positive per-coordinate scale vectors."""
        if self.vx is None:
            self.vx = np.zeros_like(gx)
            self.vy = np.zeros_like(gy)
        self.t += 1
        self.vx = self.beta2 * self.vx + (1.0 - self.beta2) * (gx * gx)
        self.vy = self.beta2 * self.vy + (1.0 - self.beta2) * (gy * gy)
        if self.freeze_scales:
            return np.full_like(gx, self.lr_x), np.full_like(gy, self.lr_y)
        corr = 1.0 - self.beta2**self.t
        ax = self.lr_x / np.sqrt(self.vx / corr + self.eps)
        ay = self.lr_y / np.sqrt(self.vy / corr + self.eps)
        return ax, ay


def acgd_step(state: AcgdState, payoff_fn, x: ParamVector, y: ParamVector) -> StepReport:
    ch = CrossHessian(payoff_fn, x, y)
    ax, ay = state.scales(ch.grad_x, ch.grad_y)
    sx = np.sqrt(ax)
    rhs = -sx * (ch.grad_x + ch.apply_xy(ay * ch.grad_y))
    op = LinearOperator(
        len(x), lambda v: v + sx * ch.apply_xy(ay * ch.apply_yx(sx * v))
    )
    x0 = state._warm if state.warm_start else None
    rep = gmres(op, rhs, rtol=state.rtol, atol=state.atol, max_iter=state.max_inner, x0=x0)
    if not rep.converged:
        raise StepRejected(
            f"acgd inner solve stalled at residual {rep.residual_norm:.3e} "
            f"after {rep.iterations} iterations",
            rep.residual_norm,
            rep.iterations,
        )
    dx = sx * rep.solution
    dy = ay * (ch.grad_y + ch.apply_yx(dx))
    state.last_inner_iterations = rep.iterations
    if state.warm_start:
        state._warm = rep.solution.copy()
    return StepReport(
        x.with_values(x.values + dx),
        y.with_values(y.values + dy),
        forward_passes=forward_pass_cost("acgd", rep.iterations),
        inner_iterations=rep.iterations,
        payoff=ch.value,
    )


_COSTS = {"sgd": 1, "adam": 1, "extrasgd": 2, "extraadam": 2}


def forward_pass_cost(optimizer_kind: str, inner_iterations: int = 0) -> int:
    """Budget currency: gradient evaluation = 1, extragradient = 2, and a
    competitive step = 2 plus 2 per inner Krylov iteration."""
    kind = optimizer_kind.lower()
    if kind in _COSTS:
        return _COSTS[kind]
    if kind in ("cgd", "acgd"):
        return 2 + 2 * inner_iterations
    raise ContractError(f"unknown optimizer kind {optimizer_kind!r}")
