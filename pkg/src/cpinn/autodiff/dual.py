"""Forward-mode bundles for derivatives with respect to network inputs.

A `Dual` carries a value plus sparse first-derivative channels (one per
tracked input direction) and second-derivative channels (one per tracked
direction pair).  Channels may be plain ndarrays or tape Tensors, so the same
arithmetic produces either numbers or differentiable graph nodes.  Absent
channels mean exactly zero; `pairs` lists which second derivatives the
computation is expected to deliver, so a product like u*u_x still picks up
its first-order cross terms only where they are wanted.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from . import tape as T


def _sorted_pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


def seed_duals(values, order: int = 2, pairs=None) -> list["Dual"]:
    """One Dual per input coordinate, seeded with unit first derivatives."""
    if order not in (1, 2):
        raise ContractError("derivative order must be 1 or 2")
    d = len(values)
    if order == 1:
        tracked = ()
    elif pairs is None:
        tracked = tuple((i, i) for i in range(d))
    else:
        tracked = tuple(_sorted_pair(i, j) for i, j in pairs)
    return [Dual(v, {i: 1.0}, {}, tracked) for i, v in enumerate(values)]


class Dual:
    __slots__ = ("val", "d1", "d2", "pairs")

    def __init__(self, val, d1=None, d2=None, pairs=()):
        self.val = val
        self.d1 = d1 or {}
        self.d2 = d2 or {}
        self.pairs = tuple(pairs)

    def __repr__(self) -> str:
        return f"Dual(d1={sorted(self.d1)}, d2={sorted(self.d2)}, pairs={self.pairs})"

    def _coerce(self, other) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(other)

    def _merge_pairs(self, other: "Dual") -> tuple:
        if self.pairs == other.pairs:
            return self.pairs
        merged = dict.fromkeys(self.pairs)
        merged.update(dict.fromkeys(other.pairs))
        return tuple(merged)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        d1 = dict(self.d1)
        for k, v in o.d1.items():
            d1[k] = d1[k] + v if k in d1 else v
        d2 = dict(self.d2)
        for k, v in o.d2.items():
            d2[k] = d2[k] + v if k in d2 else v
        return Dual(self.val + o.val, d1, d2, self._merge_pairs(o))

    __radd__ = __add__

    def __neg__(self):
        return Dual(
            -self.val,
            {k: -v for k, v in self.d1.items()},
            {k: -v for k, v in self.d2.items()},
            self.pairs,
        )

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        pairs = self._merge_pairs(o)
        d1 = {}
        for k in self.d1.keys() | o.d1.keys():
            terms = []
            if k in self.d1:
                terms.append(self.d1[k] * o.val)
            if k in o.d1:
                terms.append(self.val * o.d1[k])
            d1[k] = terms[0] if len(terms) == 1 else terms[0] + terms[1]
        d2 = {}
        for i, j in pairs:
            terms = []
            k = (i, j)
            if k in self.d2:
                terms.append(self.d2[k] * o.val)
            if k in o.d2:
                terms.append(self.val * o.d2[k])
            if i in self.d1 and j in o.d1:
                terms.append(self.d1[i] * o.d1[j])
            if i != j and j in self.d1 and i in o.d1:
                terms.append(self.d1[j] * o.d1[i])
            elif i == j and i in self.d1 and i in o.d1:
                terms.append(self.d1[i] * o.d1[i])
            if terms:
                acc = terms[0]
                for t in terms[1:]:
                    acc = acc + t
                d2[k] = acc
        return Dual(self.val * o.val, d1, d2, pairs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        pairs = self._merge_pairs(o)
        q = self.val / o.val
        d1 = {}
        for k in self.d1.keys() | o.d1.keys():
            num = self.d1.get(k)
            den = o.d1.get(k)
            t = num if num is not None else None
            if den is not None:
                corr = q * den
                t = -corr if t is None else t - corr
            d1[k] = t / o.val
        d2 = {}
        for i, j in pairs:
            k = (i, j)
            terms = []
            if k in self.d2:
                terms.append(self.d2[k])
            if k in o.d2:
                terms.append(-(q * o.d2[k]))
            if j in o.d1 and i in d1:
                terms.append(-(d1[i] * o.d1[j]))
            if i in o.d1 and j in d1:
                terms.append(-(d1[j] * o.d1[i]))
            if terms:
                acc = terms[0]
                for t in terms[1:]:
                    acc = acc + t
                d2[k] = acc / o.val
        return Dual(q, d1, d2, pairs)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise ContractError("exponent must be a plain number")
        v = self.val
        return _unary(self, v**p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))


def _unary(x: Dual, f, df, d2f) -> Dual:
    """Chain rule for f(x): d2 = f''*x_i*x_j + f'*x_ij, channels kept sparse."""
    d1 = {k: df * v for k, v in x.d1.items()}
    d2 = {}
    for i, j in x.pairs:
        k = (i, j)
        terms = []
        if i in x.d1 and j in x.d1:
            terms.append(d2f * (x.d1[i] * x.d1[j]))
        if k in x.d2:
            terms.append(df * x.d2[k])
        if terms:
            acc = terms[0]
            for t in terms[1:]:
                acc = acc + t
            d2[k] = acc
    return Dual(f, d1, d2, x.pairs)


def tanh(x):
    if not isinstance(x, Dual):
        return T.tanh(x)
    s = T.tanh(x.val)
    ds = 1.0 - s * s
    return _unary(x, s, ds, -2.0 * (s * ds))


def relu(x):
    if not isinstance(x, Dual):
        return T.relu(x)
    gate = (T.value_of(x.val) > 0.0).astype(np.float64)  # slope 0 at exactly 0
    d1 = {k: v * gate for k, v in x.d1.items()}
    d2 = {k: v * gate for k, v in x.d2.items()}
    return Dual(T.relu(x.val), d1, d2, x.pairs)


def sin(x):
    if not isinstance(x, Dual):
        return T.sin(x)
    s, c = T.sin(x.val), T.cos(x.val)
    return _unary(x, s, c, -s)


def cos(x):
    if not isinstance(x, Dual):
        return T.cos(x)
    s, c = T.sin(x.val), T.cos(x.val)
    return _unary(x, c, -s, -c)


def exp(x):
    if not isinstance(x, Dual):
        return T.exp(x)
    e = T.exp(x.val)
    return _unary(x, e, e, e)


def sqrt(x):
    if not isinstance(x, Dual):
        return T.sqrt(x)
    s = T.sqrt(x.val)
    return _unary(x, s, 0.5 / s, -0.25 / (s * x.val))


ACTIVATIONS = {"tanh": tanh, "relu": relu}
