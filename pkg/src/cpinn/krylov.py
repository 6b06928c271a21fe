"""Matrix-free Krylov solvers.

Both solvers see the system only through a LinearOperator closure, so the
callers (the game optimizers, the conditioning analyzer) control exactly how
many operator applications happen; `iterations` counts them, which is what
the forward-pass cost model charges for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ContractError


@dataclass
class LinearOperator:
    dim: int
    apply: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_matrix(cls, A: np.ndarray) -> "LinearOperator":
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ContractError("operator matrix must be square")
        return cls(A.shape[0], lambda v: A @ v)

    def probe_linearity(self, seed: int = 0, n_probes: int = 3, tol: float = 1e-10) -> bool:
        rng = np.random.default_rng(seed)
        for _ in range(n_probes):
            u = rng.standard_normal(self.dim)
            v = rng.standard_normal(self.dim)
            a, b = rng.standard_normal(2)
            lhs = self.apply(a * u + b * v)
            rhs = a * self.apply(u) + b * self.apply(v)
            scale = max(1.0, float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
            if np.linalg.norm(lhs - rhs) > tol * scale:
                return False
        return True


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    residual_norms: list[float] = field(default_factory=list)


def _tolerance(b: np.ndarray, rtol: float, atol: float) -> float:
    return max(rtol * float(np.linalg.norm(b)), atol)


def gmres(
    op: LinearOperator,
    b: np.ndarray,
    rtol: float = 1e-7,
    atol: float = 1e-20,
    max_iter: int | None = None,
    restart: int | None = None,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """GMRES with Arnoldi/modified Gram-Schmidt and Givens least squares.

    No restarting unless `restart` is given.  `iterations` counts Krylov
    steps; without restart and without x0 that equals the number of operator
    applications, which is what cost accounting relies on.  Each restart
    cycle spends one extra application recomputing the residual.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (op.dim,):
        raise ContractError(f"rhs must have shape ({op.dim},)")
    if not np.all(np.isfinite(b)):
        raise ContractError("rhs must be finite")
    tol = _tolerance(b, rtol, atol)
    x = np.zeros(op.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    budget = op.dim if max_iter is None else int(max_iter)
    cycle = budget if restart is None else int(restart)

    total_iters = 0
    history: list[float] = []
    while True:
        r = b - op.apply(x) if (total_iters or x0 is not None) else b.copy()
        beta = float(np.linalg.norm(r))
        if not history:
            history.append(beta)
        if beta <= tol or total_iters >= budget:
            return SolveReport(x, total_iters, beta, beta <= tol, history)

        m = min(cycle, budget - total_iters)
        V = np.zeros((m + 1, op.dim))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta

        k = 0
        res = beta
        for j in range(m):
            w = op.apply(V[j])
            total_iters += 1
            for i in range(j + 1):
                H[i, j] = float(V[i] @ w)
                w -= H[i, j] * V[i]
            h_next = float(np.linalg.norm(w))
            H[j + 1, j] = h_next
            for i in range(j):  # carry previous rotations into the new column
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = float(np.hypot(H[j, j], H[j + 1, j]))
            if denom == 0.0:
                k = j  # no new direction at all; drop the dead column and stop
                break
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            res = abs(float(g[j + 1]))
            history.append(res)
            k = j + 1
            if res <= tol or h_next == 0.0:  # converged or lucky breakdown
                break
            V[j + 1] = w / h_next

        if k:
            y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
            x = x + V[:k].T @ y
        if res <= tol or total_iters >= budget or restart is None:
            return SolveReport(x, total_iters, res, res <= tol, history)


def cg(
    op: LinearOperator,
    b: np.ndarray,
    rtol: float = 1e-7,
    atol: float = 1e-20,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
    check_symmetry: bool = False,
) -> SolveReport:
    """Conjugate gradients; the operator must be symmetric positive definite.

    That property is the caller's responsibility, probed only on request.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (op.dim,):
        raise ContractError(f"rhs must have shape ({op.dim},)")
    if not np.all(np.isfinite(b)):
        raise ContractError("rhs must be finite")
    if check_symmetry:
        rng = np.random.default_rng(0)
        u, v = rng.standard_normal(op.dim), rng.standard_normal(op.dim)
        lhs, rhs = float(u @ op.apply(v)), float(v @ op.apply(u))
        if abs(lhs - rhs) > 1e-8 * max(1.0, abs(lhs)):
            raise ContractError("operator failed the symmetry probe")

    tol = _tolerance(b, rtol, atol)
    x = np.zeros(op.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - op.apply(x) if x0 is not None else b.copy()
    res = float(np.linalg.norm(r))
    history = [res]
    if res <= tol:
        return SolveReport(x, 0, res, True, history)
    p = r.copy()
    rho = float(r @ r)
    budget = op.dim if max_iter is None else int(max_iter)
    iters = 0
    while iters < budget:
        Ap = op.apply(p)
        iters += 1
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break  # lost positive definiteness; report what we have
        alpha = rho / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r))
        history.append(res)
        if res <= tol:
            return SolveReport(x, iters, res, True, history)
        rho_new = float(r @ r)
        p = r + (rho_new / rho) * p
        rho = rho_new
    return SolveReport(x, iters, res, res <= tol, history)
