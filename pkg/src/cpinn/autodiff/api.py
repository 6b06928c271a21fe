"""User-facing differentiation entry points.

`grad` and `payoff_grads` run plain reverse sweeps.  `CrossHessian` records
one payoff tape, differentiates it symbolically once (a taped sweep), and
then answers mixed Hessian-vector products with cheap raw sweeps over the
recorded gradient graph; nothing new is taped per product, so a Krylov loop
can call it many times per optimizer step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from . import dual
from .params import ParamVector
from .tape import GROUP_X, GROUP_Y, Tape, check_finite, sweep


def _make_leaves(tape: Tape, pv: ParamVector, group: int):
    return [tape.leaf(seg, group) for seg in pv.segments()]


def _flatten(handles) -> np.ndarray:
    return np.concatenate([np.asarray(h).reshape(-1) for h in handles])


def grad(scalar_fn, params: ParamVector) -> ParamVector:
    """Gradient of scalar_fn(leaves) with respect to a flat parameter vector."""
    tape = Tape()
    leaves = _make_leaves(tape, params, GROUP_X)
    out = scalar_fn(leaves)
    if out.value.shape != ():
        raise ContractError("grad expects a scalar-valued function")
    check_finite(tape, [out])
    gs = sweep(tape, [(out, 1.0)], leaves)
    g = _flatten(gs)
    check_finite(tape, [g])
    return params.with_values(g)


def payoff_grads(payoff_fn, x: ParamVector, y: ParamVector):
    """Value and both players' gradients of payoff_fn(x_leaves, y_leaves)."""
    tape = Tape()
    xl = _make_leaves(tape, x, GROUP_X)
    yl = _make_leaves(tape, y, GROUP_Y)
    out = payoff_fn(xl, yl)
    if out.value.shape != ():
        raise ContractError("payoff must be scalar")
    check_finite(tape, [out])
    gs = sweep(tape, [(out, 1.0)], xl + yl)
    gx = _flatten(gs[: len(xl)])
    gy = _flatten(gs[len(xl) :])
    check_finite(tape, [gx, gy])
    return float(out.value), x.with_values(gx), y.with_values(gy)


class CrossHessian:
    """Mixed second derivatives of one recorded payoff.

    Builds the payoff tape and the taped gradient graph once; `apply_xy(v)`
    returns D2_xy f . v (shape of x) and `apply_yx(u)` returns D2_yx f . u
    (shape of y) via raw sweeps seeded at the recorded gradient nodes.
    """

    def __init__(self, payoff_fn, x: ParamVector, y: ParamVector):
        self.tape = Tape()
        self._x = x
        self._y = y
        self._xl = _make_leaves(self.tape, x, GROUP_X)
        self._yl = _make_leaves(self.tape, y, GROUP_Y)
        out = payoff_fn(self._xl, self._yl)
        if out.value.shape != ():
            raise ContractError("payoff must be scalar")
        check_finite(self.tape, [out])
        nodes = sweep(self.tape, [(out, 1.0)], self._xl + self._yl, taped=True)
        self._gx_nodes = nodes[: len(self._xl)]
        self._gy_nodes = nodes[len(self._xl) :]
        self.value = float(out.value)
        self.grad_x = _flatten([n.value for n in self._gx_nodes])
        self.grad_y = _flatten([n.value for n in self._gy_nodes])
        check_finite(self.tape, [self.grad_x, self.grad_y])

    def _split(self, v: np.ndarray, pv: ParamVector):
        if v.size != len(pv):
            raise ContractError(f"vector has {v.size} entries, player has {len(pv)}")
        return pv.with_values(v).segments()

    def apply_xy(self, v: np.ndarray) -> np.ndarray:
        """d/dx (grad_y . v): differentiate y-gradient along x."""
        seeds = list(zip(self._gy_nodes, self._split(np.asarray(v, float), self._y)))
        gs = sweep(self.tape, seeds, self._xl)
        out = _flatten(gs)
        check_finite(self.tape, [out])
        return out

    def apply_yx(self, u: np.ndarray) -> np.ndarray:
        """d/dy (grad_x . u): differentiate x-gradient along y."""
        seeds = list(zip(self._gx_nodes, self._split(np.asarray(u, float), self._x)))
        gs = sweep(self.tape, seeds, self._yl)
        out = _flatten(gs)
        check_finite(self.tape, [out])
        return out


def hvp_cross(payoff_fn, x: ParamVector, y: ParamVector, v: ParamVector, direction: str) -> ParamVector:
    """One mixed Hessian-vector product; direction 'xy' maps y-shaped v to
    an x-shaped result, 'yx' the reverse."""
    ch = CrossHessian(payoff_fn, x, y)
    if direction == "xy":
        return x.with_values(ch.apply_xy(v.values))
    if direction == "yx":
        return y.with_values(ch.apply_yx(v.values))
    raise ContractError("direction must be 'xy' or 'yx'")


@dataclass
class InputDerivs:
    value: float
    gradient: np.ndarray
    second: dict[tuple[int, int], float]


def input_derivs(field_fn, point, order: int = 2, pairs=None) -> InputDerivs:
    """Value, gradient, and requested second derivatives of a scalar field
    at one point, by forward-mode dual numbers."""
    coords = [float(c) for c in point]
    duals = dual.seed_duals(coords, order=order, pairs=pairs)
    out = field_fn(duals)
    if not isinstance(out, dual.Dual):
        raise ContractError("field function must return a Dual")
    g = np.array([float(np.asarray(out.d1.get(i, 0.0))) for i in range(len(coords))])
    second = {k: float(np.asarray(out.d2.get(k, 0.0))) for k in out.pairs}
    return InputDerivs(float(np.asarray(out.val)), g, second)
