"""Allen-Cahn benchmark with a pseudo-spectral ground truth.

The equation u_t - 0.0001 u_xx + 5 u^3 - 5 u = 0 lives on x in [-1, 1],
t in [0, 1], with u(0, x) = x^2 cos(pi x) and periodic boundary conditions.
The reference integrator splits the flow into two exactly solvable pieces:
diffusion is a Fourier multiplier exp(-nu k^2 dt), and the reaction ODE
u' = 5u - 5u^3 has the closed solution

    u(tau) = u0 exp(5 tau) / sqrt(1 + u0^2 (exp(10 tau) - 1)),

so the only error is the Strang splitting itself, controlled by a
step-halving gate.  The reaction pushes values toward the wells at +-1 and
the diffusion averages, so the solution stays inside [-1.05, 1.05]; the
oracle enforces that bound as a sanity check.
"""

from __future__ import annotations

import numpy as np

from ..errors import OracleFailure
from ..sampling import CollocationSet, latin_hypercube
from .base import GroupSpec, PdeProblem, ReferenceGrid

NU = 1e-4
X_LO, X_HI = -1.0, 1.0
T_END = 1.0


def allen_cahn_initial(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * x * np.cos(np.pi * x)


def allen_cahn_residual(h, X: np.ndarray) -> list:
    """Interior residual u_t - nu u_xx + 5 u^3 - 5 u."""
    u = h.val
    return [h.d1[0] - NU * h.d2[(1, 1)] + 5.0 * u**3 - 5.0 * u]


def reaction_exact(u: np.ndarray, tau: float) -> np.ndarray:
    """Exact flow of u' = 5u - 5u^3 for time tau (sign-preserving)."""
    growth = np.exp(5.0 * tau)
    return u * growth / np.sqrt(1.0 + u * u * (growth * growth - 1.0))


def strang_steps(u0: np.ndarray, length: float, dt: float, n_steps: int, snapshot_every: int):
    """Reaction half-step, exact diffusion, reaction half-step, repeated."""
    n = u0.size
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    decay = np.exp(-NU * k * k * dt)
    u = u0.astype(np.float64)
    snaps = [u.copy()]
    for step in range(1, n_steps + 1):
        u = reaction_exact(u, dt / 2.0)
        u = np.fft.irfft(np.fft.rfft(u) * decay, n=n)
        u = reaction_exact(u, dt / 2.0)
        if step % snapshot_every == 0:
            snaps.append(u.copy())
    return np.array(snaps)


def allen_cahn_reference(
    n_x: int = 512, n_t: int = 101, steps_per_slice: int = 100
) -> ReferenceGrid:
    """Strang-split reference on [0, 1] x [-1, 1).

    Gates: a halved time step must move the solution by at most 1e-6 in
    relative L2, and all values must stay within [-1.05, 1.05].
    """
    length = X_HI - X_LO
    x = X_LO + length * np.arange(n_x) / n_x
    dt = T_END / ((n_t - 1) * steps_per_slice)
    u0 = allen_cahn_initial(x)
    snaps = strang_steps(u0, length, dt, (n_t - 1) * steps_per_slice, steps_per_slice)
    halved = strang_steps(
        u0, length, dt / 2.0, 2 * (n_t - 1) * steps_per_slice, 2 * steps_per_slice
    )
    gap = float(np.linalg.norm(snaps - halved) / np.linalg.norm(halved))
    if gap > 1e-6:
        raise OracleFailure(f"step-halving moved the solution by {gap:.3e} (limit 1e-6)")
    peak = float(np.max(np.abs(snaps)))
    if peak > 1.05:
        raise OracleFailure(f"solution left [-1.05, 1.05]: max |u| = {peak:.4f}")
    t_axis = np.linspace(0.0, T_END, n_t)
    return ReferenceGrid(
        axes=(t_axis, x),
        axis_names=("t", "x"),
        values=snaps[:, :, None],
        source="oracle",
        problem_id="allen_cahn",
    )


class AllenCahnProblem(PdeProblem):
    problem_id = "allen_cahn"
    coord_names = ("t", "x")
    domain = ((0.0, T_END), (X_LO, X_HI))
    solution_dim = 1
    groups = (
        GroupSpec("interior", 1),
        GroupSpec("initial", 1),
        GroupSpec("periodic_value", 1),
        GroupSpec("periodic_derivative", 1),
    )

    def default_counts(self) -> dict[str, int]:
        return {
            "interior": 10000,
            "initial": 100,
            "periodic_value": 256,
            "periodic_derivative": 256,
        }

    def sample_points(self, counts=None, seed: int = 0) -> CollocationSet:
        c = self.resolve_counts(counts)
        rng = np.random.default_rng(seed)
        interior = self._interior(c["interior"], rng)
        initial = self._facet(c["initial"], free_dim=1, fixed_dim=0, fixed_value=0.0, rng=rng)
        groups = {"initial": initial}
        for name in ("periodic_value", "periodic_derivative"):
            times = latin_hypercube(c[name], [self.domain[0]], rng)
            groups[name] = np.column_stack([times[:, 0], np.full(c[name], X_LO)])
        return CollocationSet(interior, groups)

    @staticmethod
    def _high_edge(pts_lo: np.ndarray) -> np.ndarray:
        pts = pts_lo.copy()
        pts[:, 1] = X_HI
        return pts

    def residual_channels(self, field, cset: CollocationSet) -> dict[str, list]:
        h = field.with_input_derivs(cset.interior, dirs=(0, 1), pairs=((1, 1),))
        x0 = cset.groups["initial"]
        pv = cset.groups["periodic_value"]
        pd = cset.groups["periodic_derivative"]
        lo_d = field.with_input_derivs(pd, dirs=(1,), pairs=()).d1[1]
        hi_d = field.with_input_derivs(self._high_edge(pd), dirs=(1,), pairs=()).d1[1]
        return {
            "interior": allen_cahn_residual(h, cset.interior),
            "initial": [field.values(x0) - allen_cahn_initial(x0[:, 1:2])],
            "periodic_value": [field.values(pv) - field.values(self._high_edge(pv))],
            "periodic_derivative": [lo_d - hi_d],
        }

    def reference(self) -> ReferenceGrid:
        return allen_cahn_reference()
