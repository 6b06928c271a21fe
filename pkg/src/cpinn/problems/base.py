"""Shared machinery for the benchmark PDE definitions.

Each problem declares its domain, its constraint groups (interior plus
boundary/initial/periodicity conditions), how to sample collocation points
for every group, how to evaluate the per-group residual channels for a
network field, and where its reference solution comes from.  The residual
builders work on either plain arrays or tape tensors, so the same code
serves loss evaluation and training sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..sampling import CollocationSet, latin_hypercube

FORMAT_TAG = "refgrid_v1"


@dataclass(frozen=True)
class GroupSpec:
    """One constraint group: its name and how many real residual channels
    (and hence discriminator heads) it carries."""

    name: str
    arity: int


@dataclass
class ReferenceGrid:
    """Reference solution values on a tensor-product grid.

    `axes` holds the per-axis coordinate vectors, `values` has shape
    (len(axes[0]), len(axes[1]), components).  `source` records provenance:
    analytic formula, numerical oracle, or a loaded file.
    """

    axes: tuple[np.ndarray, np.ndarray]
    axis_names: tuple[str, str]
    values: np.ndarray
    source: str
    problem_id: str = ""

    def __post_init__(self):
        a0, a1 = (np.asarray(a, dtype=np.float64) for a in self.axes)
        self.axes = (a0, a1)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ContractError("reference values must be (axis0, axis1, components)")
        if self.values.shape[:2] != (a0.size, a1.size):
            raise ContractError(
                f"values shape {self.values.shape} does not match axes "
                f"({a0.size}, {a1.size})"
            )
        if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(a1))):
            raise ContractError("reference axes contain non-finite coordinates")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("reference values contain non-finite entries")

    @property
    def components(self) -> int:
        return self.values.shape[2]

    def points(self) -> np.ndarray:
        """All grid points as an (n0*n1, 2) array in row-major axis order."""
        g0, g1 = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.stack([g0, g1], axis=-1).reshape(-1, 2)

    def flat_values(self) -> np.ndarray:
        return self.values.reshape(-1, self.components)


def save_reference_grid(path, grid: ReferenceGrid) -> None:
    """Versioned CSV: one header line, one line per axis, then the value
    rows block by block (one block per solution component)."""
    n0, n1 = grid.axes[0].size, grid.axes[1].size
    with open(path, "w") as f:
        f.write(
            ",".join(
                [
                    FORMAT_TAG,
                    grid.problem_id or "unknown",
                    grid.axis_names[0],
                    grid.axis_names[1],
                    str(n0),
                    str(n1),
                    str(grid.components),
                    grid.source,
                ]
            )
            + "\n"
        )
        for axis in grid.axes:
            f.write(",".join(repr(float(v)) for v in axis) + "\n")
        for c in range(grid.components):
            for i in range(n0):
                f.write(",".join(repr(float(v)) for v in grid.values[i, :, c]) + "\n")


def _parse_row(line: str, lineno: int, expect: int, path) -> np.ndarray:
    parts = line.split(",")
    if len(parts) != expect:
        raise ContractError(
            f"{path}:{lineno}: expected {expect} comma-separated values, got {len(parts)}"
        )
    try:
        row = np.array([float(p) for p in parts])
    except ValueError as e:
        raise ContractError(f"{path}:{lineno}: {e}") from e
    if not np.all(np.isfinite(row)):
        raise ContractError(f"{path}:{lineno}: non-finite value in grid file")
    return row


def load_reference_grid(path) -> ReferenceGrid:
    """Parse the CSV grid format written by save_reference_grid.

    Malformed headers, ragged rows, non-finite values, and truncated bodies
    all raise a contract error naming the offending line.
    """
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ContractError(f"{path}:1: empty reference grid file")
    head = lines[0].split(",")
    if len(head) != 8 or head[0] != FORMAT_TAG:
        raise ContractError(f"{path}:1: not a {FORMAT_TAG} header")
    problem_id, name0, name1 = head[1], head[2], head[3]
    try:
        n0, n1, ncomp = int(head[4]), int(head[5]), int(head[6])
    except ValueError as e:
        raise ContractError(f"{path}:1: bad grid dimensions: {e}") from e
    if min(n0, n1, ncomp) < 1:
        raise ContractError(f"{path}:1: grid dimensions must be positive")
    expected = 3 + ncomp * n0
    if len(lines) < expected:
        raise ContractError(
            f"{path}:{len(lines)}: file ends early, expected {expected} lines"
        )
    axis0 = _parse_row(lines[1], 2, n0, path)
    axis1 = _parse_row(lines[2], 3, n1, path)
    values = np.empty((n0, n1, ncomp))
    lineno = 4
    for c in range(ncomp):
        for i in range(n0):
            values[i, :, c] = _parse_row(lines[lineno - 1], lineno, n1, path)
            lineno += 1
    return ReferenceGrid(
        axes=(axis0, axis1),
        axis_names=(name0, name1),
        values=values,
        source="file",
        problem_id=problem_id,
    )


class PdeProblem:
    """Base interface shared by all benchmark problems.

    Subclasses set the class attributes and implement sampling, residual
    channels, and the reference solution.  Group order is significant: it
    fixes the discriminator head layout.
    """

    problem_id: str = ""
    coord_names: tuple[str, str] = ("x", "y")
    domain: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0))
    solution_dim: int = 1
    groups: tuple[GroupSpec, ...] = ()

    @property
    def residual_arity(self) -> int:
        return self.groups[0].arity

    @property
    def head_count(self) -> int:
        return sum(g.arity for g in self.groups)

    def head_slices(self) -> dict[str, slice]:
        """Contiguous discriminator output columns per group, in group order."""
        out, start = {}, 0
        for g in self.groups:
            out[g.name] = slice(start, start + g.arity)
            start += g.arity
        return out

    def group_names(self) -> list[str]:
        return [g.name for g in self.groups]

    def default_counts(self) -> dict[str, int]:
        raise NotImplementedError

    def resolve_counts(self, counts: dict | None) -> dict[str, int]:
        out = self.default_counts()
        for key, val in (counts or {}).items():
            if key not in out:
                raise ContractError(
                    f"{self.problem_id}: unknown point group {key!r}; "
                    f"expected one of {sorted(out)}"
                )
            if int(val) < 1:
                raise ContractError(f"{self.problem_id}: count for {key!r} must be positive")
            out[key] = int(val)
        return out

    def sample_points(self, counts: dict | None = None, seed: int = 0) -> CollocationSet:
        raise NotImplementedError

    def residual_channels(self, field, cset: CollocationSet) -> dict[str, list]:
        """Per group, the list of residual channels as (n, 1) handles."""
        raise NotImplementedError

    def disc_inputs(self, cset: CollocationSet) -> dict[str, np.ndarray]:
        """Coordinates at which each group's discriminator heads are read.

        Default: the group's own collocation points.  Paired-point groups
        override this to evaluate at one representative per pair.
        """
        out = {"interior": cset.interior}
        for g in self.groups[1:]:
            out[g.name] = cset.groups[g.name]
        return out

    def reference(self) -> ReferenceGrid:
        raise NotImplementedError

    def _interior(self, n: int, rng) -> np.ndarray:
        return latin_hypercube(n, self.domain, rng)

    def _facet(self, n: int, free_dim: int, fixed_dim: int, fixed_value: float, rng) -> np.ndarray:
        """n points on the 1-D facet where coordinate fixed_dim is pinned."""
        free = latin_hypercube(n, [self.domain[free_dim]], rng)
        pts = np.empty((n, 2))
        pts[:, free_dim] = free[:, 0]
        pts[:, fixed_dim] = fixed_value
        return pts
