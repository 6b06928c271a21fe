from .api import CrossHessian, InputDerivs, grad, hvp_cross, input_derivs, payoff_grads
from .dual import ACTIVATIONS, Dual, seed_duals
from .params import Layout, ParamVector, layout_size
from .tape import (
    GROUP_NONE,
    GROUP_X,
    GROUP_Y,
    Tape,
    Tensor,
    absolute,
    check_finite,
    col_slice,
    cos,
    exp,
    log,
    mean,
    relu,
    reshape,
    sin,
    sqrt,
    sweep,
    tanh,
    tsum,
    value_of,
)

__all__ = [
    "ACTIVATIONS",
    "CrossHessian",
    "Dual",
    "GROUP_NONE",
    "GROUP_X",
    "GROUP_Y",
    "InputDerivs",
    "Layout",
    "ParamVector",
    "Tape",
    "Tensor",
    "absolute",
    "check_finite",
    "col_slice",
    "cos",
    "exp",
    "grad",
    "hvp_cross",
    "input_derivs",
    "layout_size",
    "log",
    "mean",
    "payoff_grads",
    "relu",
    "reshape",
    "seed_duals",
    "sin",
    "sqrt",
    "sweep",
    "tanh",
    "tsum",
    "value_of",
]
