"""Benchmark PDE registry.

Problems are stateless; `get_problem` hands out shared instances.
`cached_reference` computes each reference solution once per process and
optionally persists it as a CSV next to other run artifacts.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import ContractError
from .allen_cahn import AllenCahnProblem, allen_cahn_reference, allen_cahn_residual, reaction_exact
from .base import (
    GroupSpec,
    PdeProblem,
    ReferenceGrid,
    load_reference_grid,
    save_reference_grid,
)
from .burgers import (
    BurgersProblem,
    burgers_initial,
    burgers_oracle_derivs,
    burgers_reference,
    burgers_reference_values,
    burgers_residual,
)
from .poisson import PoissonProblem, poisson_exact, poisson_residual
from .schrodinger import (
    SchrodingerProblem,
    breather_exact,
    schrodinger_initial,
    schrodinger_reference,
    schrodinger_residual,
    split_step,
)

_REGISTRY = {
    cls.problem_id: cls()
    for cls in (PoissonProblem, SchrodingerProblem, BurgersProblem, AllenCahnProblem)
}
_REFERENCE_CACHE: dict[str, ReferenceGrid] = {}


def problem_ids() -> list[str]:
    return sorted(_REGISTRY)


def get_problem(problem_id: str) -> PdeProblem:
    try:
        return _REGISTRY[problem_id]
    except KeyError:
        raise ContractError(
            f"unknown problem {problem_id!r}; available: {', '.join(problem_ids())}"
        ) from None


def cached_reference(problem_id: str, cache_dir=None) -> ReferenceGrid:
    """Reference grid for a problem, computed at most once per process.

    With cache_dir set, an existing CSV is loaded instead of recomputing,
    and fresh computations are written back for the next run.
    """
    if problem_id in _REFERENCE_CACHE:
        return _REFERENCE_CACHE[problem_id]
    problem = get_problem(problem_id)
    grid = None
    path = Path(cache_dir) / f"{problem_id}_reference.csv" if cache_dir else None
    if path is not None and path.exists():
        grid = load_reference_grid(path)
    if grid is None:
        grid = problem.reference()
        if path is not None:
            save_reference_grid(path, grid)
    _REFERENCE_CACHE[problem_id] = grid
    return grid


__all__ = [
    "AllenCahnProblem",
    "BurgersProblem",
    "GroupSpec",
    "PdeProblem",
    "PoissonProblem",
    "ReferenceGrid",
    "SchrodingerProblem",
    "allen_cahn_reference",
    "allen_cahn_residual",
    "breather_exact",
    "burgers_initial",
    "burgers_oracle_derivs",
    "burgers_reference",
    "burgers_reference_values",
    "burgers_residual",
    "cached_reference",
    "get_problem",
    "load_reference_grid",
    "poisson_exact",
    "poisson_residual",
    "problem_ids",
    "reaction_exact",
    "save_reference_grid",
    "schrodinger_initial",
    "schrodinger_reference",
    "schrodinger_residual",
    "split_step",
]
