"""Finite metric spaces and fields living on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import (
    AsymmetricDistance,
    CoincidentPoints,
    DisconnectedGraph,
    NegativeDistance,
    NonzeroDiagonal,
    TriangleViolation,
    ValidationError,
)

TRIANGLE_TOL = 1e-12
SYMMETRY_TOL = 1e-12

SlopePolicy = Union[str, float]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A validated finite metric space.

    ``slope_radius[x]`` bounds the neighbourhood over which discrete slopes at
    ``x`` are taken.  ``geodesic_mesh`` is set only for lattice discretisations
    of a geodesic continuum.
    """

    dist: np.ndarray
    slope_radius: np.ndarray
    geodesic_mesh: Optional[float] = None
    coords: Optional[np.ndarray] = None
    kind: str = "matrix"
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    @cached_property
    def neighbors(self) -> np.ndarray:
        """Boolean mask ``[x, y]``: ``0 < d(x, y) <= slope_radius[x]``."""
        mask = (self.dist > 0) & (self.dist <= self.slope_radius[:, None])
        mask.setflags(write=False)
        return mask

    @cached_property
    def min_positive_distance(self) -> float:
        if self.n < 2:
            return float("inf")
        return float(self.dist[~np.eye(self.n, dtype=bool)].min())

    def permuted(self, perm: Sequence[int]) -> "MetricSpace":
        """Relabel points so that new point ``k`` is old point ``perm[k]``."""
        perm = np.asarray(perm, dtype=int)
        return MetricSpace(
            dist=_frozen(self.dist[np.ix_(perm, perm)]),
            slope_radius=_frozen(self.slope_radius[perm]),
            geodesic_mesh=self.geodesic_mesh,
            coords=None if self.coords is None else _frozen(self.coords[perm]),
            kind="matrix",
        )

    def field(self, values) -> np.ndarray:
        return as_field(self, values)


def as_field(space: MetricSpace, values) -> np.ndarray:
    """Validate a scalar field on ``space`` and return it as a float array."""
    f = np.asarray(values, dtype=float)
    if f.shape != (space.n,):
        raise ValidationError(f"field has shape {f.shape}, expected ({space.n},)")
    if not np.all(np.isfinite(f)):
        bad = int(np.flatnonzero(~np.isfinite(f))[0])
        raise ValidationError(f"field value at index {bad} is not finite")
    return f


def validate_distances(dist: np.ndarray) -> np.ndarray:
    d = np.array(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        i, j = np.argwhere(~np.isfinite(d))[0]
        raise ValidationError(f"dist({i},{j}) is not finite")
    n = d.shape[0]
    neg = np.argwhere(d < 0)
    if len(neg):
        i, j = neg[0]
        raise NegativeDistance(int(i), int(j), float(d[i, j]))
    diag = np.flatnonzero(np.diag(d) != 0)
    if len(diag):
        i = int(diag[0])
        raise NonzeroDiagonal(i, float(d[i, i]))
    asym = np.argwhere(np.abs(d - d.T) > SYMMETRY_TOL)
    if len(asym):
        i, j = asym[0]
        raise AsymmetricDistance(int(i), int(j), float(d[i, j]), float(d[j, i]))
    d = np.triu(d) + np.triu(d, 1).T
    off = ~np.eye(n, dtype=bool)
    zero = np.argwhere((d == 0) & off)
    if len(zero):
        i, j = zero[0]
        raise CoincidentPoints(int(i), int(j))
    _check_triangle(d)
    return d


def _check_triangle(d: np.ndarray) -> None:
    for y in range(d.shape[0]):
        excess = d - (d[:, y][:, None] + d[y, :][None, :])
        bad = np.argwhere(excess > TRIANGLE_TOL)
        if len(bad):
            x, z = bad[0]
            raise TriangleViolation(int(x), y, int(z), float(excess[x, z]))


def _slope_radius(d: np.ndarray, policy: SlopePolicy) -> np.ndarray:
    n = d.shape[0]
    if n == 1:
        nearest = np.array([0.0])
    else:
        nearest = np.where(np.eye(n, dtype=bool), np.inf, d).min(axis=1)
    if policy == "nearest":
        return nearest if n > 1 else np.array([1.0])
    r = float(policy)
    if not r > 0:
        raise ValidationError(f"fixed slope radius must be positive, got {r!r}")
    if n > 1 and np.any(r < nearest):
        x = int(np.argmax(nearest > r))
        raise ValidationError(
            f"fixed slope radius {r!r} is below the nearest-neighbour distance "
            f"{nearest[x]!r} at point {x}"
        )
    return np.full(n, r)


def build_matrix_space(dist, slope_radius: SlopePolicy = "nearest") -> MetricSpace:
    """Space from an explicit distance matrix.

    >>> build_matrix_space([[0, 1], [1, 0]]).slope_radius.tolist()
    [1.0, 1.0]
    """
    d = validate_distances(dist)
    params = {"slope_radius": slope_radius}
    return MetricSpace(
        dist=_frozen(d), slope_radius=_frozen(_slope_radius(d, slope_radius)),
        kind="matrix", params=params,
    )


def build_grid_space(dimension: int, points_per_axis: int, side_length: float) -> MetricSpace:
    """Lattice of ``points_per_axis ** dimension`` nodes in ``[0, side_length]^dimension``.

    Points are numbered in row-major order.  The slope radius is 1.5 mesh, which
    reaches axis neighbours in 1-D and axis plus diagonal neighbours in 2-D.
    """
    if dimension not in (1, 2):
        raise ValidationError(f"grid dimension must be 1 or 2, got {dimension!r}")
    if int(points_per_axis) != points_per_axis or points_per_axis < 2:
        raise ValidationError(f"points_per_axis must be an integer >= 2, got {points_per_axis!r}")
    if not side_length > 0:
        raise ValidationError(f"side_length must be positive, got {side_length!r}")
    m = int(points_per_axis)
    mesh = side_length / (m - 1)
    axis = np.arange(m) * mesh
    if dimension == 1:
        coords = axis[:, None]
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        coords = np.column_stack([gx.ravel(), gy.ravel()])
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=-1))
    return MetricSpace(
        dist=_frozen(d),
        slope_radius=_frozen(np.full(len(coords), 1.5 * mesh)),
        geodesic_mesh=mesh,
        coords=_frozen(coords),
        kind="grid",
        params={"dimension": dimension, "points_per_axis": m, "side_length": float(side_length)},
    )


def build_graph_space(edges, n: int) -> MetricSpace:
    """Shortest-path metric of a connected weighted graph on ``n`` vertices."""
    n = int(n)
    if n < 1:
        raise ValidationError("graph needs at least one vertex")
    rows, cols, w = [], [], []
    for e in edges:
        i, j, weight = int(e[0]), int(e[1]), float(e[2])
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i},{j}) references a vertex outside 0..{n - 1}")
        if not (np.isfinite(weight) and weight > 0):
            raise ValidationError(f"edge ({i},{j}) weight {weight!r} must be positive")
        if i == j:
            continue
        rows.append(i)
        cols.append(j)
        w.append(weight)
    # duplicate edges keep the lightest weight
    best = {}
    for i, j, weight in zip(rows, cols, w):
        key = (min(i, j), max(i, j))
        best[key] = min(weight, best.get(key, np.inf))
    if best:
        ij = np.array(list(best.keys()))
        g = coo_matrix((list(best.values()), (ij[:, 0], ij[:, 1])), shape=(n, n)).tocsr()
    else:
        g = coo_matrix((n, n)).tocsr()
    ncomp, labels = connected_components(g, directed=False)
    if ncomp > 1:
        comps = [np.flatnonzero(labels == c).tolist() for c in range(ncomp)]
        raise DisconnectedGraph(comps)
    d = shortest_path(g, method="D", directed=False)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    space = build_matrix_space(d, "nearest")
    object.__setattr__(space, "kind", "graph")
    object.__setattr__(
        space, "params", {"n": n, "edges": [[i, j, wt] for (i, j), wt in sorted(best.items())]}
    )
    return space


def approximate_midpoint_defect(space: MetricSpace) -> float:
    """Largest over pairs (x, y) of min_z |d(x,z) - d(x,y)/2|."""
    d = space.dist
    worst = 0.0
    for x in range(space.n):
        gap = np.abs(d[x][None, :] - 0.5 * d[x][:, None]).min(axis=1)
        worst = max(worst, float(gap.max()))
    return worst
