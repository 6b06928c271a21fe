"""Focusing nonlinear Schrodinger benchmark.

The equation is i u_t + (1/2) u_xx + |u|^2 u = 0 on x in [-5, 5], t in
[0, pi/2], with u(0, x) = 2 sech(x) and periodic boundary conditions.  The
network represents u as two real outputs (v, w) = (Re u, Im u), so the
complex residual splits into two real channels.

The reference comes from split-step Fourier integration: the nonlinear
substep is an exact phase rotation u -> exp(i |u|^2 dt) u, the linear
substep an exact Fourier multiplier, combined in Strang order.  Both
substeps preserve the discrete mass sum(|u|^2) dx exactly, which gives the
integrator its integrity check.  The initial profile 2 sech(x) is a breather
whose closed form is known, so tests can compare against the exact field.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import tape as tp
from ..errors import OracleFailure
from ..sampling import CollocationSet, latin_hypercube
from .base import GroupSpec, PdeProblem, ReferenceGrid

X_LO, X_HI = -5.0, 5.0
T_END = np.pi / 2.0


def schrodinger_initial(x: np.ndarray) -> np.ndarray:
    return 2.0 / np.cosh(np.asarray(x, dtype=np.float64))


def schrodinger_residual(h, X: np.ndarray) -> list:
    """Real and imaginary residual channels of i u_t + u_xx/2 + |u|^2 u.

    With u = v + i w the real part is v_xx/2 - w_t + (v^2 + w^2) v and the
    imaginary part is w_xx/2 + v_t + (v^2 + w^2) w.
    """
    v = tp.col_slice(h.val, 0, 1)
    w = tp.col_slice(h.val, 1, 2)
    v_t = tp.col_slice(h.d1[0], 0, 1)
    w_t = tp.col_slice(h.d1[0], 1, 2)
    v_xx = tp.col_slice(h.d2[(1, 1)], 0, 1)
    w_xx = tp.col_slice(h.d2[(1, 1)], 1, 2)
    mag = v * v + w * w
    return [0.5 * v_xx - w_t + mag * v, 0.5 * w_xx + v_t + mag * w]


def breather_exact(t, x) -> np.ndarray:
    """Closed-form evolution of the 2 sech(x) initial profile (whole line).

    u(t,x) = 4 e^{it/2} (cosh 3x + 3 e^{4it} cosh x)
             / (cosh 4x + 4 cosh 2x + 3 cos 4t).
    The modulus is pi/2-periodic in t, which is why the benchmark window
    ends there.
    """
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    num = 4.0 * np.exp(0.5j * t) * (np.cosh(3.0 * x) + 3.0 * np.exp(4.0j * t) * np.cosh(x))
    den = np.cosh(4.0 * x) + 4.0 * np.cosh(2.0 * x) + 3.0 * np.cos(4.0 * t)
    return num / den


def split_step(u0: np.ndarray, length: float, dt: float, n_steps: int, snapshot_every: int):
    """Strang-split integration of the periodic equation from complex u0.

    Returns snapshots[j] = field after j*snapshot_every steps, including the
    initial state, so the caller controls the stored time resolution.
    """
    n = u0.size
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    linear = np.exp(-0.5j * k * k * dt)
    u = u0.astype(np.complex128)
    snaps = [u.copy()]
    for step in range(1, n_steps + 1):
        u = u * np.exp(0.5j * dt * (u.real**2 + u.imag**2))
        u = np.fft.ifft(np.fft.fft(u) * linear)
        u = u * np.exp(0.5j * dt * (u.real**2 + u.imag**2))
        if step % snapshot_every == 0:
            snaps.append(u.copy())
    return np.array(snaps)


def _mass_drift(snaps: np.ndarray, dx: float) -> float:
    mass = (np.abs(snaps) ** 2).sum(axis=1) * dx
    return float(np.max(np.abs(mass - mass[0])) / mass[0])


def schrodinger_reference(
    n_x: int = 512, n_t: int = 101, steps_per_slice: int = 1600
) -> ReferenceGrid:
    """Split-step reference on [0, pi/2] x [-5, 5).

    The stored grid has n_t time slices; integration uses steps_per_slice
    substeps between slices.  Two gates guard the result: relative mass
    drift at most 1e-8 across the run, and a halved time step must move the
    solution by at most 1e-8 in relative L2.
    """
    length = X_HI - X_LO
    x = X_LO + length * np.arange(n_x) / n_x
    dt = T_END / ((n_t - 1) * steps_per_slice)
    if dt > 1e-4:
        raise OracleFailure(f"time step {dt:.3e} too coarse; need at most 1e-4")
    u0 = schrodinger_initial(x).astype(np.complex128)
    snaps = split_step(u0, length, dt, (n_t - 1) * steps_per_slice, steps_per_slice)
    drift = _mass_drift(snaps, length / n_x)
    if drift > 1e-8:
        raise OracleFailure(f"mass drift {drift:.3e} exceeds 1e-8")
    halved = split_step(
        u0, length, dt / 2.0, 2 * (n_t - 1) * steps_per_slice, 2 * steps_per_slice
    )
    gap = float(np.linalg.norm(snaps - halved) / np.linalg.norm(halved))
    if gap > 1e-8:
        raise OracleFailure(f"step-halving moved the solution by {gap:.3e} (limit 1e-8)")
    t_axis = np.linspace(0.0, T_END, n_t)
    values = np.stack([snaps.real, snaps.imag], axis=-1)
    values[0, :, 0] = u0.real  # exact initial slice, untouched by rounding
    values[0, :, 1] = 0.0
    return ReferenceGrid(
        axes=(t_axis, x),
        axis_names=("t", "x"),
        values=values,
        source="oracle",
        problem_id="schrodinger",
    )


class SchrodingerProblem(PdeProblem):
    problem_id = "schrodinger"
    coord_names = ("t", "x")
    domain = ((0.0, T_END), (X_LO, X_HI))
    solution_dim = 2
    groups = (
        GroupSpec("interior", 2),
        GroupSpec("initial", 2),
        GroupSpec("periodic_value", 2),
        GroupSpec("periodic_derivative", 2),
    )

    def default_counts(self) -> dict[str, int]:
        return {
            "interior": 20000,
            "initial": 50,
            "periodic_value": 50,
            "periodic_derivative": 50,
        }

    def sample_points(self, counts=None, seed: int = 0) -> CollocationSet:
        c = self.resolve_counts(counts)
        rng = np.random.default_rng(seed)
        interior = self._interior(c["interior"], rng)
        initial = self._facet(c["initial"], free_dim=1, fixed_dim=0, fixed_value=0.0, rng=rng)
        groups = {"initial": initial}
        # Paired-point groups store the low edge; the partner shares its time.
        for name in ("periodic_value", "periodic_derivative"):
            times = latin_hypercube(c[name], [self.domain[0]], rng)
            pts = np.column_stack([times[:, 0], np.full(c[name], X_LO)])
            groups[name] = pts
        return CollocationSet(interior, groups)

    @staticmethod
    def _high_edge(pts_lo: np.ndarray) -> np.ndarray:
        pts = pts_lo.copy()
        pts[:, 1] = X_HI
        return pts

    def residual_channels(self, field, cset: CollocationSet) -> dict[str, list]:
        h = field.with_input_derivs(cset.interior, dirs=(0, 1), pairs=((1, 1),))
        out = {"interior": schrodinger_residual(h, cset.interior)}

        x0 = cset.groups["initial"]
        vals0 = field.values(x0)
        out["initial"] = [
            tp.col_slice(vals0, 0, 1) - schrodinger_initial(x0[:, 1:2]),
            tp.col_slice(vals0, 1, 2),
        ]

        pv = cset.groups["periodic_value"]
        lo_vals = field.values(pv)
        hi_vals = field.values(self._high_edge(pv))
        out["periodic_value"] = [
            tp.col_slice(lo_vals, 0, 1) - tp.col_slice(hi_vals, 0, 1),
            tp.col_slice(lo_vals, 1, 2) - tp.col_slice(hi_vals, 1, 2),
        ]

        pd = cset.groups["periodic_derivative"]
        lo_d = field.with_input_derivs(pd, dirs=(1,), pairs=()).d1[1]
        hi_d = field.with_input_derivs(self._high_edge(pd), dirs=(1,), pairs=()).d1[1]
        out["periodic_derivative"] = [
            tp.col_slice(lo_d, 0, 1) - tp.col_slice(hi_d, 0, 1),
            tp.col_slice(lo_d, 1, 2) - tp.col_slice(hi_d, 1, 2),
        ]
        return out

    def reference(self) -> ReferenceGrid:
        return schrodinger_reference()
