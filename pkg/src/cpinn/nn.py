"""Fully connected networks over the autodiff stack.

One architecture description serves three call styles: plain batched
evaluation, evaluation with tape-node weights (for training sweeps), and
evaluation with dual-number inputs (for PDE residuals that need u_t, u_x,
u_xx and friends).  In the dual style the affine layers act channel-wise:
every derivative channel is pushed through the same weights, and the
activations apply the shared chain rule from `autodiff.dual`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import ACTIVATIONS, Dual, Layout, ParamVector
from .autodiff import tape as tp
from .errors import CheckpointError, ContractError

_MAGIC = b"MLPC1\n"
_ACT_TAGS = {"tanh": 1, "relu": 2}
_TAG_ACTS = {v: k for k, v in _ACT_TAGS.items()}


def _scale_blocks(stacked, factor, count, n, width):
    """Multiply each of `count` row blocks of `stacked` by the (n, width)
    factor, broadcasting through a 3-d view when there are several blocks."""
    if count == 1:
        return factor * stacked
    shaped = tp.reshape(stacked, (count, n, width)) * factor
    return tp.reshape(shaped, (count * n, width))


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int
    hidden_layers: int
    hidden_width: int
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"unknown activation {self.activation!r}")
        if min(self.input_dim, self.hidden_layers, self.hidden_width, self.output_dim) < 1:
            raise ContractError("architecture dimensions must be positive")

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def layout(self) -> Layout:
        out = []
        for k, (fan_in, fan_out) in enumerate(self.layer_dims()):
            out.append((f"W{k}", (fan_in, fan_out)))
            out.append((f"b{k}", (1, fan_out)))
        return tuple(out)

    def param_count(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_dims())


def init_params(arch: MlpArchitecture, seed: int) -> ParamVector:
    """Glorot-uniform weights, zero biases; deterministic in the seed."""
    rng = np.random.default_rng(seed)
    segs = []
    for fan_in, fan_out in arch.layer_dims():
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        segs.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        segs.append(np.zeros((1, fan_out)))
    return ParamVector.from_segments(arch.layout(), segs)


class MlpField:
    """One network bound to weight handles (ndarrays or tape Tensors)."""

    def __init__(self, arch: MlpArchitecture, weights):
        weights = list(weights)
        if len(weights) != 2 * (arch.hidden_layers + 1):
            raise ContractError("weight handle count does not match architecture")
        self.arch = arch
        self.weights = weights
        self.activation = ACTIVATIONS[arch.activation]

    @classmethod
    def from_params(cls, arch: MlpArchitecture, params: ParamVector) -> "MlpField":
        return cls(arch, params.segments())

    def values(self, X: np.ndarray):
        """Batched forward pass; returns an (n, output_dim) handle."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.arch.input_dim:
            raise ContractError(f"expected points of dimension {self.arch.input_dim}")
        h = X @ self.weights[0] + self.weights[1]
        for k in range(1, self.arch.hidden_layers + 1):
            h = self.activation(h) @ self.weights[2 * k] + self.weights[2 * k + 1]
        return h

    def with_input_derivs(self, X: np.ndarray, dirs, pairs) -> Dual:
        """Forward pass carrying derivative channels for the listed input
        directions and direction pairs; every channel comes out (n, output_dim).

        The derivative channels ride through each affine layer row-stacked
        into one matrix, so the whole bundle costs two matrix products per
        layer instead of one per channel.  Activations unstack just enough
        to apply the chain rule blockwise.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.arch.input_dim:
            raise ContractError(f"expected points of dimension {self.arch.input_dim}")
        dirs = tuple(dirs)
        if any(d < 0 or d >= self.arch.input_dim for d in dirs):
            raise ContractError("derivative direction outside the input coordinates")
        pairs = tuple(tuple(sorted(p)) for p in pairs)
        for i, j in pairs:
            if i not in dirs or j not in dirs:
                raise ContractError("derivative pair uses an untracked direction")
        if not dirs:
            return Dual(self.values(X), {}, {}, ())
        n = X.shape[0]
        k1, k2 = len(dirs), len(pairs)
        pos = {d: q for q, d in enumerate(dirs)}
        width = self.arch.hidden_width

        W, b = self.weights[0], self.weights[1]
        z = X @ W + b
        # d/dx_j of the first affine layer is row j of W, the same for every
        # point; later layers mix rows, so materialize to full blocks here
        blocks = [tp.broadcast_rows(tp.row_slice(W, d, d + 1), (n, width)) for d in dirs]

        s, ds, dd = self._act_channels(z)
        d1_blocks = [ds * blk for blk in blocks]
        track_d2 = k2 > 0 and dd is not None
        if track_d2:
            d2_blocks = [dd * (blocks[pos[i]] * blocks[pos[j]]) for i, j in pairs]
            stack = tp.row_stack(d1_blocks + d2_blocks)
        elif k1 > 1:
            stack = tp.row_stack(d1_blocks)
        else:
            stack = d1_blocks[0]
        split = k1 * n

        for k in range(1, self.arch.hidden_layers):
            W, b = self.weights[2 * k], self.weights[2 * k + 1]
            dz = stack @ W
            z = s @ W + b
            s, ds, dd = self._act_channels(z)
            d1z = tp.row_slice(dz, 0, split) if track_d2 else dz
            d1_out = _scale_blocks(d1z, ds, k1, n, width)
            if not track_d2:
                stack = d1_out
                continue
            d2z = tp.row_slice(dz, split, split + k2 * n)
            prods = []
            for i, j in pairs:
                zi = tp.row_slice(d1z, pos[i] * n, (pos[i] + 1) * n)
                zj = zi if i == j else tp.row_slice(d1z, pos[j] * n, (pos[j] + 1) * n)
                prods.append(zi * zj)
            curved = tp.row_stack(prods) if k2 > 1 else prods[0]
            d2_out = _scale_blocks(d2z, ds, k2, n, width) + _scale_blocks(curved, dd, k2, n, width)
            stack = tp.row_stack([d1_out, d2_out])

        k = self.arch.hidden_layers
        W, b = self.weights[2 * k], self.weights[2 * k + 1]
        dz = stack @ W
        val = s @ W + b
        out_dim = self.arch.output_dim
        d1 = {d: tp.row_slice(dz, pos[d] * n, (pos[d] + 1) * n) for d in dirs}
        if track_d2:
            d2 = {p: tp.row_slice(dz, (k1 + q) * n, (k1 + q + 1) * n) for q, p in enumerate(pairs)}
        else:
            # curvature of the activation is identically zero (relu), so the
            # second-derivative channels never leave zero
            d2 = {p: np.zeros((n, out_dim)) for p in pairs}
        return Dual(val, d1, d2, pairs)

    def _act_channels(self, z):
        """Activation value plus first/second derivative factors; the second
        factor is None when it is identically zero."""
        if self.arch.activation == "tanh":
            s = tp.tanh(z)
            ds = 1.0 - s * s
            return s, ds, -2.0 * (s * ds)
        gate = (tp.value_of(z) > 0.0).astype(np.float64)
        return tp.relu(z), gate, None


def save_checkpoint(path, arch: MlpArchitecture, params: ParamVector) -> None:
    """Self-describing binary checkpoint: header with the architecture, then
    the flat float64 parameter vector in layout order."""
    if len(params) != arch.param_count():
        raise ContractError("parameter vector does not match architecture")
    header = struct.pack(
        "<5q",
        arch.input_dim,
        arch.hidden_layers,
        arch.hidden_width,
        arch.output_dim,
        _ACT_TAGS[arch.activation],
    )
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(header)
        f.write(params.values.astype("<f8").tobytes())


def load_checkpoint(path) -> tuple[MlpArchitecture, ParamVector]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not raw.startswith(_MAGIC):
        raise CheckpointError(f"{path} is not a network checkpoint")
    body = raw[len(_MAGIC) :]
    head_size = struct.calcsize("<5q")
    if len(body) < head_size:
        raise CheckpointError(f"{path}: truncated header")
    din, layers, width, dout, act_tag = struct.unpack("<5q", body[:head_size])
    if act_tag not in _TAG_ACTS:
        raise CheckpointError(f"{path}: unknown activation tag {act_tag}")
    arch = MlpArchitecture(din, layers, width, dout, _TAG_ACTS[act_tag])
    values = np.frombuffer(body[head_size:], dtype="<f8")
    if values.size != arch.param_count():
        raise CheckpointError(
            f"{path}: expected {arch.param_count()} parameters, found {values.size}"
        )
    return arch, ParamVector(values.copy(), arch.layout())
