"""Tour of the reference solutions the error metrics are measured against.

Each problem carries its own oracle: Poisson is analytic, Burgers comes from
the Cole-Hopf integral evaluated with Gauss-Hermite quadrature, and the two
time-dependent complex/stiff problems use a split-step spectral integrator.
This script probes each one and prints the sanity checks that make the
oracles trustworthy, including the conserved quantities the integrators are
supposed to preserve.

Run from the repository root (the two spectral solves take a little while):

    python demos/reference_solutions.py
"""

import time

import numpy as np

from cpinn.problems import get_problem


def banner(text: str) -> None:
    print()
    print(text)
    print("-" * len(text))


def main() -> None:
    banner("poisson: analytic solution sin(x) cos(y) on [-2, 2]^2")
    grid = get_problem("poisson").reference(resolution=201)
    x, y = grid.axes
    u = grid.values[:, :, 0]
    exact = np.sin(x)[:, None] * np.cos(y)[None, :]
    print(f"grid {u.shape[0]} x {u.shape[1]}, max |grid - formula| = {np.max(np.abs(u - exact)):.2e}")

    banner("burgers: Cole-Hopf quadrature, nu = 0.01/pi")
    t0 = time.monotonic()
    grid = get_problem("burgers").reference(n_t=101, n_x=201)
    t_axis, x_axis = grid.axes
    u = grid.values[:, :, 0]
    print(f"computed 101 x 201 grid in {time.monotonic() - t0:.1f}s")
    mid = np.searchsorted(x_axis, 0.0)
    for t_probe in (0.0, 0.5, 1.0):
        k = np.searchsorted(t_axis, t_probe)
        slope = (u[k, mid + 1] - u[k, mid - 1]) / (x_axis[mid + 1] - x_axis[mid - 1])
        print(f"  t = {t_axis[k]:.2f}: u(0) = {u[k, mid]:+.2e}, du/dx at 0 = {slope:+.1f}")
    print("  the solution stays odd in x while the front at x = 0 steepens")

    banner("schrodinger: split-step integrator, 2 sech(x) initial data")
    t0 = time.monotonic()
    grid = get_problem("schrodinger").reference()
    t_axis, x_axis = grid.axes
    density = grid.values[:, :, 0] ** 2 + grid.values[:, :, 1] ** 2
    # periodic grid without the closing endpoint: rectangle rule is exact
    mass = density.sum(axis=1) * (x_axis[1] - x_axis[0])
    print(f"computed {density.shape[0]} x {density.shape[1]} grid in {time.monotonic() - t0:.1f}s")
    print(f"  mass at t = 0:   {mass[0]:.12f}")
    print(f"  worst rel drift: {np.max(np.abs(mass - mass[0])) / mass[0]:.2e}")
    peak = np.max(np.sqrt(density), axis=1)
    print(f"  peak |u| grows from {peak[0]:.3f} to {np.max(peak):.3f} (focusing nonlinearity)")

    banner("allen_cahn: stiff reaction-diffusion, split-step in time")
    t0 = time.monotonic()
    grid = get_problem("allen_cahn").reference()
    t_axis, x_axis = grid.axes
    u = grid.values[:, :, 0]
    print(f"computed {u.shape[0]} x {u.shape[1]} grid in {time.monotonic() - t0:.1f}s")
    print(f"  initial profile x^2 cos(pi x): range [{u[0].min():+.3f}, {u[0].max():+.3f}]")
    print(f"  final profile:                 range [{u[-1].min():+.3f}, {u[-1].max():+.3f}]")
    share = np.mean(np.abs(np.abs(u[-1]) - 1.0) < 0.1)
    print(f"  {100 * share:.0f}% of the final slice sits within 0.1 of the wells at +-1")


if __name__ == "__main__":
    main()
