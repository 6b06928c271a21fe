"""Two-dimensional Poisson benchmark with a manufactured solution.

The target field is u(x, y) = sin(x) cos(y) on [-2, 2]^2, so the forcing is
laplacian(u) = -2 sin(x) cos(y) and the Dirichlet boundary data is read off
the same formula.  Ground truth is analytic; no numerical oracle is needed.
"""

from __future__ import annotations

import numpy as np

from ..sampling import CollocationSet
from .base import GroupSpec, PdeProblem, ReferenceGrid

SIDE = 2.0


def poisson_exact(X: np.ndarray) -> np.ndarray:
    """Manufactured solution values, shape (n, 1)."""
    X = np.asarray(X, dtype=np.float64)
    return np.sin(X[:, 0:1]) * np.cos(X[:, 1:2])


def poisson_residual(h, X: np.ndarray) -> list:
    """Interior residual P_xx + P_yy + 2 sin(x) cos(y).

    `h` carries the second derivatives of the candidate field as channels
    (plain arrays or tape tensors); X supplies the forcing coordinates.
    """
    forcing = 2.0 * np.sin(X[:, 0:1]) * np.cos(X[:, 1:2])
    return [h.d2[(0, 0)] + h.d2[(1, 1)] + forcing]


class PoissonProblem(PdeProblem):
    problem_id = "poisson"
    coord_names = ("x", "y")
    domain = ((-SIDE, SIDE), (-SIDE, SIDE))
    solution_dim = 1
    groups = (GroupSpec("interior", 1), GroupSpec("boundary", 1))

    def default_counts(self) -> dict[str, int]:
        return {"interior": 5000, "boundary": 200}

    def sample_points(self, counts=None, seed: int = 0) -> CollocationSet:
        c = self.resolve_counts(counts)
        if c["boundary"] % 4:
            raise ValueError("poisson boundary count must split evenly over 4 sides")
        rng = np.random.default_rng(seed)
        interior = self._interior(c["interior"], rng)
        per_side = c["boundary"] // 4
        sides = [
            self._facet(per_side, free_dim=1, fixed_dim=0, fixed_value=-SIDE, rng=rng),
            self._facet(per_side, free_dim=1, fixed_dim=0, fixed_value=SIDE, rng=rng),
            self._facet(per_side, free_dim=0, fixed_dim=1, fixed_value=-SIDE, rng=rng),
            self._facet(per_side, free_dim=0, fixed_dim=1, fixed_value=SIDE, rng=rng),
        ]
        return CollocationSet(interior, {"boundary": np.concatenate(sides)})

    def residual_channels(self, field, cset: CollocationSet) -> dict[str, list]:
        h = field.with_input_derivs(cset.interior, dirs=(0, 1), pairs=((0, 0), (1, 1)))
        bx = cset.groups["boundary"]
        return {
            "interior": poisson_residual(h, cset.interior),
            "boundary": [field.values(bx) - poisson_exact(bx)],
        }

    def reference(self, resolution: int = 100) -> ReferenceGrid:
        x = np.linspace(-SIDE, SIDE, resolution)
        y = np.linspace(-SIDE, SIDE, resolution)
        values = np.sin(x)[:, None] * np.cos(y)[None, :]
        return ReferenceGrid(
            axes=(x, y),
            axis_names=self.coord_names,
            values=values[:, :, None],
            source="analytic",
            problem_id=self.problem_id,
        )
