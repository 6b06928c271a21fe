"""Collocation point generation.

Latin hypercube sampling stratifies each axis independently: n points land
in n distinct equal-width bins per dimension, with an independent random
permutation per axis and a uniform offset inside every bin.  Points are
drawn once per run and stay fixed for all iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


def latin_hypercube(n: int, bounds, seed) -> np.ndarray:
    """n stratified points in the box given by bounds = [(lo, hi), ...].

    Accepts a seed or an existing Generator, so callers can draw several
    point sets from one stream.
    """
    if n < 1:
        raise ContractError("need at least one sample")
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    for lo, hi in bounds:
        if not hi > lo:
            raise ContractError(f"empty interval ({lo}, {hi})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = len(bounds)
    u = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=(n, d))  # keep off bin edges
    cells = np.empty((n, d))
    for j in range(d):
        cells[:, j] = rng.permutation(n)
    unit = (cells + u) / n
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + unit * (hi - lo)


@dataclass
class CollocationSet:
    """Named point groups for one training run.

    `interior` holds the PDE residual points.  `groups` maps constraint
    names (initial, boundary sides, periodic pairs) to (n, d) arrays;
    periodic pairs appear as two arrays with matching row order.
    """

    interior: np.ndarray
    groups: dict[str, np.ndarray] = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        out = {"interior": len(self.interior)}
        out.update({k: len(v) for k, v in self.groups.items()})
        return out


def sample_problem_points(problem_id: str, counts: dict | None = None, seed: int = 0) -> CollocationSet:
    """Problem-aware sampling: interior by Latin hypercube over the domain,
    condition groups on their own faces, periodic faces as matched pairs."""
    from .problems import get_problem  # local import; problems also use this module

    return get_problem(problem_id).sample_points(counts=counts, seed=seed)


def export_points_csv(path, cset: CollocationSet, coord_names) -> None:
    """Write all points with their group tag, one row per point."""
    names = list(coord_names)
    with open(path, "w") as f:
        f.write("group," + ",".join(names) + "\n")
        for name, pts in [("interior", cset.interior)] + sorted(cset.groups.items()):
            for row in np.atleast_2d(pts):
                f.write(name + "," + ",".join(format(v, ".17g") for v in row) + "\n")
