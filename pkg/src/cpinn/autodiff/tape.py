"""Reverse-mode differentiation on a tape of array-valued nodes.

Every node stores a full float64 ndarray, so one tape records the whole
batched computation (all collocation points at once) rather than a graph per
scalar.  Two sweep modes share the same backward rules:

* a raw sweep propagates plain ndarrays and is used for ordinary gradients;
* a taped sweep emits new nodes for every adjoint, which makes the gradient
  itself differentiable.  Seeding a second, raw sweep at those gradient nodes
  yields Hessian-vector products without ever forming a matrix.

Each leaf belongs to a player group (a bitmask).  Interior nodes carry the
union of their parents' masks, and sweeps skip any node that cannot reach the
requested targets, so a sweep towards one player never touches arrays that
only the other player influences.
"""

from __future__ import annotations

import weakref

import numpy as np

from ..errors import ContractError, NumericFailure

GROUP_NONE = 0
GROUP_X = 1
GROUP_Y = 2


def _as_value(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    return a


class Tape:
    """Append-only record of one computation; node order is topological.

    The tape tracks its nodes through weak references: live tensors keep
    their parents alive through the graph itself, so dropping the outputs
    releases a whole recording immediately instead of waiting for a cycle
    collection.  That matters because one training step's tape can hold
    hundreds of megabytes of intermediate arrays.
    """

    __slots__ = ("nodes", "count")

    def __init__(self):
        self.nodes: list[weakref.ref] = []
        self.count = 0

    def __len__(self) -> int:
        return self.count

    def _register(self, node: "Tensor") -> int:
        idx = self.count
        self.count = idx + 1
        self.nodes.append(weakref.ref(node))
        return idx

    def node_at(self, i: int) -> "Tensor | None":
        return self.nodes[i]()

    def leaf(self, value, group: int = GROUP_NONE) -> "Tensor":
        return Tensor(self, _as_value(value), "leaf", (), None, group)

    def constant(self, value) -> "Tensor":
        return Tensor(self, _as_value(value), "const", (), None, GROUP_NONE)

    def first_nonfinite(self) -> "Tensor | None":
        for ref in self.nodes:
            node = ref()
            if node is not None and not np.all(np.isfinite(node.value)):
                return node
        return None


class Tensor:
    """Handle to one tape node.  Supports numpy-style arithmetic."""

    __slots__ = ("tape", "idx", "value", "op", "parents", "aux", "mask", "__weakref__")

    # Force numpy to defer binary ops to our right-hand dunders.
    __array_ufunc__ = None

    def __init__(self, tape: Tape, value: np.ndarray, op: str, parents: tuple, aux, mask: int):
        self.tape = tape
        self.value = value
        self.op = op
        self.parents = parents
        self.aux = aux
        self.mask = mask
        self.idx = tape._register(self)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, idx={self.idx}, shape={self.value.shape})"

    def _lift(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if other.tape is not self.tape:
                raise ContractError("operands live on different tapes")
            return other
        return self.tape.constant(other)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        return _emit("add", (self, self._lift(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return _emit("sub", (self, self._lift(other)))

    def __rsub__(self, other):
        return _emit("sub", (self._lift(other), self))

    def __mul__(self, other):
        return _emit("mul", (self, self._lift(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _emit("div", (self, self._lift(other)))

    def __rtruediv__(self, other):
        return _emit("div", (self._lift(other), self))

    def __neg__(self):
        return _emit("neg", (self,))

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise ContractError("exponent must be a plain number")
        return _emit("pow", (self,), aux=float(p))

    def __matmul__(self, other):
        return _emit("matmul", (self, self._lift(other)))

    def __rmatmul__(self, other):
        return _emit("matmul", (self._lift(other), self))

    @property
    def T(self) -> "Tensor":
        return _emit("transpose", (self,))

    def reshape(self, shape) -> "Tensor":
        return _emit("reshape", (self,), aux=tuple(shape))

    def sum(self, axis=None) -> "Tensor":
        return _emit("sum", (self,), aux=axis)

    def mean(self, axis=None) -> "Tensor":
        return _emit("mean", (self,), aux=axis)


def _forward(op: str, parents: tuple, aux):
    vals = [p.value for p in parents]
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "div":
        return vals[0] / vals[1]
    if op == "neg":
        return -vals[0]
    if op == "pow":
        return vals[0] ** aux
    if op == "matmul":
        a, b = vals
        if a.ndim != 2 or b.ndim != 2:
            raise ContractError("matmul expects 2-d operands")
        return a @ b
    if op == "transpose":
        return vals[0].T
    if op == "reshape":
        return vals[0].reshape(aux)
    if op == "sum":
        return np.sum(vals[0], axis=aux)
    if op == "mean":
        return np.mean(vals[0], axis=aux)
    if op == "broadcast":
        return np.broadcast_to(vals[0], aux)
    if op == "sum_to":
        return _sum_to_raw(vals[0], aux)
    if op == "tanh":
        return np.tanh(vals[0])
    if op == "relu":
        return vals[0] * aux  # aux: precomputed 0/1 mask
    if op == "sin":
        return np.sin(vals[0])
    if op == "cos":
        return np.cos(vals[0])
    if op == "exp":
        return np.exp(vals[0])
    if op == "log":
        return np.log(vals[0])
    if op == "sqrt":
        return np.sqrt(vals[0])
    if op == "abs":
        return vals[0] * aux  # aux: precomputed sign
    if op == "col_slice":
        j0, j1 = aux
        return vals[0][:, j0:j1]
    if op == "col_pad":
        ncols, j0 = aux
        v = vals[0]
        out = np.zeros((v.shape[0], ncols))
        out[:, j0 : j0 + v.shape[1]] = v
        return out
    if op == "row_slice":
        i0, i1 = aux
        return vals[0][i0:i1]
    if op == "row_pad":
        nrows, i0 = aux
        v = vals[0]
        out = np.zeros((nrows,) + v.shape[1:])
        out[i0 : i0 + v.shape[0]] = v
        return out
    if op == "row_stack":
        return np.concatenate(vals, axis=0)
    raise ContractError(f"unknown op {op!r}")


def _emit(op: str, parents: tuple, aux=None) -> Tensor:
    tape = parents[0].tape
    mask = 0
    for p in parents:
        mask |= p.mask
    value = np.asarray(_forward(op, parents, aux), dtype=np.float64)
    return Tensor(tape, value, op, parents, aux, mask)


def _sum_to_raw(v: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce v back to `shape`, the adjoint of numpy broadcasting."""
    if v.shape == shape:
        return v
    extra = v.ndim - len(shape)
    if extra:
        v = v.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and v.shape[i] != 1)
    if axes:
        v = v.sum(axis=axes, keepdims=True)
    return v.reshape(shape)


# -- sweep helpers: one rule body serves raw and taped modes ----------------


class _RawH:
    """Adjoint helpers over plain ndarrays."""

    @staticmethod
    def val(t):
        return t.value

    sum_to = staticmethod(_sum_to_raw)

    @staticmethod
    def broadcast(v, shape):
        return np.broadcast_to(v, shape)

    @staticmethod
    def transpose(v):
        return v.T

    @staticmethod
    def reshape(v, shape):
        return np.reshape(v, shape)

    @staticmethod
    def pow(v, p):
        return v**p

    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)

    @staticmethod
    def col_slice(v, j0, j1):
        return v[:, j0:j1]

    @staticmethod
    def col_pad(v, ncols, j0):
        out = np.zeros((v.shape[0], ncols))
        out[:, j0 : j0 + v.shape[1]] = v
        return out

    @staticmethod
    def row_slice(v, i0, i1):
        return v[i0:i1]

    @staticmethod
    def row_pad(v, nrows, i0):
        out = np.zeros((nrows,) + v.shape[1:])
        out[i0 : i0 + v.shape[0]] = v
        return out


class _TapedH:
    """Adjoint helpers that emit new tape nodes."""

    @staticmethod
    def val(t):
        return t

    @staticmethod
    def sum_to(t, shape):
        if t.shape == tuple(shape):
            return t
        return _emit("sum_to", (t,), aux=tuple(shape))

    @staticmethod
    def broadcast(t, shape):
        return _emit("broadcast", (t,), aux=tuple(shape))

    @staticmethod
    def transpose(t):
        return t.T

    @staticmethod
    def reshape(t, shape):
        return t.reshape(shape)

    @staticmethod
    def pow(t, p):
        return t**p

    @staticmethod
    def sin(t):
        return _emit("sin", (t,))

    @staticmethod
    def cos(t):
        return _emit("cos", (t,))

    @staticmethod
    def col_slice(t, j0, j1):
        return _emit("col_slice", (t,), aux=(j0, j1))

    @staticmethod
    def col_pad(t, ncols, j0):
        return _emit("col_pad", (t,), aux=(ncols, j0))

    @staticmethod
    def row_slice(t, i0, i1):
        return _emit("row_slice", (t,), aux=(i0, i1))

    @staticmethod
    def row_pad(t, nrows, i0):
        return _emit("row_pad", (t,), aux=(nrows, i0))


def _keepdims_shape(shape: tuple[int, ...], axis) -> tuple[int, ...]:
    if axis is None:
        return (1,) * len(shape)
    if axis < 0:
        axis += len(shape)
    return tuple(1 if i == axis else n for i, n in enumerate(shape))


def _backward(node: Tensor, adj, H):
    """Yield (parent, contribution) pairs for one node's adjoint."""
    op = node.op
    ps = node.parents
    if op == "add":
        a, b = ps
        return ((a, H.sum_to(adj, a.shape)), (b, H.sum_to(adj, b.shape)))
    if op == "sub":
        a, b = ps
        return ((a, H.sum_to(adj, a.shape)), (b, H.sum_to(-adj, b.shape)))
    if op == "mul":
        a, b = ps
        return (
            (a, H.sum_to(adj * H.val(b), a.shape)),
            (b, H.sum_to(adj * H.val(a), b.shape)),
        )
    if op == "div":
        a, b = ps
        bv = H.val(b)
        ga = adj / bv
        gb = -(adj * H.val(node)) / bv
        return ((a, H.sum_to(ga, a.shape)), (b, H.sum_to(gb, b.shape)))
    if op == "neg":
        return ((ps[0], -adj),)
    if op == "pow":
        (a,) = ps
        p = node.aux
        return ((a, adj * (p * H.pow(H.val(a), p - 1.0))),)
    if op == "matmul":
        a, b = ps
        return (
            (a, adj @ H.transpose(H.val(b))),
            (b, H.transpose(H.val(a)) @ adj),
        )
    if op == "transpose":
        return ((ps[0], H.transpose(adj)),)
    if op == "reshape":
        return ((ps[0], H.reshape(adj, ps[0].shape)),)
    if op == "sum":
        (a,) = ps
        g = H.reshape(adj, _keepdims_shape(a.shape, node.aux))
        return ((a, H.broadcast(g, a.shape)),)
    if op == "mean":
        (a,) = ps
        n = a.value.size if node.aux is None else a.shape[node.aux]
        g = H.reshape(adj * (1.0 / n), _keepdims_shape(a.shape, node.aux))
        return ((a, H.broadcast(g, a.shape)),)
    if op == "broadcast":
        return ((ps[0], H.sum_to(adj, ps[0].shape)),)
    if op == "sum_to":
        return ((ps[0], H.broadcast(adj, ps[0].shape)),)
    if op == "tanh":
        s = H.val(node)
        return ((ps[0], adj * (1.0 - s * s)),)
    if op == "relu":
        return ((ps[0], adj * node.aux),)
    if op == "sin":
        return ((ps[0], adj * H.cos(H.val(ps[0]))),)
    if op == "cos":
        return ((ps[0], -(adj * H.sin(H.val(ps[0])))),)
    if op == "exp":
        return ((ps[0], adj * H.val(node)),)
    if op == "log":
        return ((ps[0], adj / H.val(ps[0])),)
    if op == "sqrt":
        return ((ps[0], adj * (0.5 / H.val(node))),)
    if op == "abs":
        return ((ps[0], adj * node.aux),)
    if op == "col_slice":
        (a,) = ps
        j0, _ = node.aux
        return ((a, H.col_pad(adj, a.shape[1], j0)),)
    if op == "col_pad":
        ncols, j0 = node.aux
        w = ps[0].shape[1]
        return ((ps[0], H.col_slice(adj, j0, j0 + w)),)
    if op == "row_slice":
        (a,) = ps
        i0, _ = node.aux
        return ((a, H.row_pad(adj, a.shape[0], i0)),)
    if op == "row_pad":
        _, i0 = node.aux
        m = ps[0].shape[0]
        return ((ps[0], H.row_slice(adj, i0, i0 + m)),)
    if op == "row_stack":
        out, offset = [], 0
        for p in ps:
            m = p.shape[0]
            out.append((p, H.row_slice(adj, offset, offset + m)))
            offset += m
        return tuple(out)
    raise ContractError(f"no backward rule for op {op!r}")


def sweep(tape: Tape, seeds, targets, taped: bool = False) -> list:
    """Reverse sweep from seeded nodes down to targets.

    seeds: iterable of (tensor, seed) pairs; a seed is an ndarray (raw mode)
    or anything `Tensor._lift` accepts (taped mode).  Returns one adjoint per
    target, in order; targets the seeds cannot reach get zeros.  Every node
    between the seeds and the targets is visited exactly once.
    """
    H = _TapedH if taped else _RawH
    tmask = 0
    for t in targets:
        tmask |= t.mask
    adj: dict[int, object] = {}
    owned: set[int] = set()
    hi = -1

    def accumulate(i: int, g):
        cur = adj.get(i)
        if cur is None:
            adj[i] = g
        elif taped:
            adj[i] = cur + g
        elif i in owned:
            np.add(cur, g, out=cur)
        else:
            adj[i] = np.asarray(cur) + g
            owned.add(i)

    for t, s in seeds:
        if t.tape is not tape:
            raise ContractError("seed node lives on a different tape")
        if taped and not isinstance(s, Tensor):
            s = tape.constant(np.broadcast_to(np.asarray(s, dtype=np.float64), t.shape))
        else:
            s = np.broadcast_to(np.asarray(s, dtype=np.float64), t.shape)
        accumulate(t.idx, s)
        hi = max(hi, t.idx)

    nodes = tape.nodes
    for i in range(hi, -1, -1):
        node = nodes[i]()
        if node is None or not node.parents or not (node.mask & tmask):
            continue  # dead, leaf, or unreachable: keep any adjoint for readout
        a = adj.pop(i, None)
        if a is None:
            continue
        owned.discard(i)
        for parent, g in _backward(node, a, H):
            if parent.mask & tmask:
                accumulate(parent.idx, g)

    out = []
    for t in targets:
        g = adj.get(t.idx)
        if g is None:
            g = tape.constant(np.zeros(t.shape)) if taped else np.zeros(t.shape)
        elif taped and not isinstance(g, Tensor):
            g = tape.constant(g)
        out.append(g)
    return out


# -- numpy/Tensor dispatch helpers ------------------------------------------
#
# Residual and layer code is written once against these functions and runs
# either on plain arrays (evaluation) or on tape nodes (training).


def tanh(x):
    return _emit("tanh", (x,)) if isinstance(x, Tensor) else np.tanh(x)


def relu(x):
    if isinstance(x, Tensor):
        gate = (x.value > 0.0).astype(np.float64)  # slope 0 at exactly 0
        return _emit("relu", (x,), aux=gate)
    return np.where(x > 0.0, x, 0.0)


def sin(x):
    return _emit("sin", (x,)) if isinstance(x, Tensor) else np.sin(x)


def cos(x):
    return _emit("cos", (x,)) if isinstance(x, Tensor) else np.cos(x)


def exp(x):
    return _emit("exp", (x,)) if isinstance(x, Tensor) else np.exp(x)


def log(x):
    return _emit("log", (x,)) if isinstance(x, Tensor) else np.log(x)


def sqrt(x):
    return _emit("sqrt", (x,)) if isinstance(x, Tensor) else np.sqrt(x)


def absolute(x):
    if isinstance(x, Tensor):
        return _emit("abs", (x,), aux=np.sign(x.value))
    return np.abs(x)


def reshape(x, shape):
    return x.reshape(tuple(shape)) if isinstance(x, Tensor) else np.reshape(x, shape)


def col_slice(x, j0: int, j1: int):
    return _emit("col_slice", (x,), aux=(j0, j1)) if isinstance(x, Tensor) else x[:, j0:j1]


def row_slice(x, i0: int, i1: int):
    return _emit("row_slice", (x,), aux=(i0, i1)) if isinstance(x, Tensor) else x[i0:i1]


def row_stack(parts):
    parts = list(parts)
    first = next((p for p in parts if isinstance(p, Tensor)), None)
    if first is None:
        return np.concatenate(parts, axis=0)
    return _emit("row_stack", tuple(first._lift(p) for p in parts))


def broadcast_rows(x, shape):
    if isinstance(x, Tensor):
        return x if x.shape == tuple(shape) else _emit("broadcast", (x,), aux=tuple(shape))
    return np.broadcast_to(x, shape)


def mean(x, axis=None):
    return x.mean(axis) if isinstance(x, Tensor) else np.mean(x, axis=axis)


def tsum(x, axis=None):
    return x.sum(axis) if isinstance(x, Tensor) else np.sum(x, axis=axis)


def value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def check_finite(tape: Tape, outputs) -> None:
    """Raise NumericFailure naming the first bad node if any output is non-finite."""
    for out in outputs:
        v = out.value if isinstance(out, Tensor) else out
        if np.all(np.isfinite(v)):
            continue
        bad = tape.first_nonfinite()
        if bad is None:
            raise NumericFailure("non-finite value appeared outside the tape")
        raise NumericFailure(
            f"non-finite value at node {bad.idx} (op {bad.op!r}, shape {bad.value.shape})",
            op=bad.op,
            index=bad.idx,
        )
