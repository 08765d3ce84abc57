"""Sup- and inf-convolutions, their extremizers and one-sided time derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .costs import CostFunction, power
from .errors import ValidationError
from .metric_space import MetricSpace, as_field

TIE_TOL = 1e-10


@dataclass(frozen=True)
class ExtremizerSet:
    points: Tuple[int, ...]
    tie_tol: float
    value: float


@dataclass(frozen=True)
class TimeDerivatives:
    """Per-point right/left t-derivatives of P_t f and the extremizer distances."""

    dplus: np.ndarray
    dminus: np.ndarray
    maxdist: np.ndarray
    mindist: np.ndarray


def _check_t(t):
    if not (np.isfinite(t) and t > 0):
        raise ValidationError(f"time must be positive and finite, got {t!r}")


def _sup_table(space: MetricSpace, cost: CostFunction, f, t: float) -> np.ndarray:
    """Candidate values ``[x, y] -> f(y) - t alpha(d(x,y)/t)``."""
    _check_t(t)
    f = as_field(space, f)
    return f[None, :] - cost.matrix(space.dist, t)


def sup_convolution(space: MetricSpace, cost: CostFunction, f, t: float) -> np.ndarray:
    """P_t f(x) = max_y f(y) - t alpha(d(x,y)/t)."""
    return _sup_table(space, cost, f, t).max(axis=1)


def inf_convolution(space: MetricSpace, cost: CostFunction, f, t: float) -> np.ndarray:
    """Q_t f(x) = min_y f(y) + t alpha(d(x,y)/t), computed as -P_t(-f)."""
    return -sup_convolution(space, cost, -np.asarray(f, dtype=float), t)


def q_lambda(space: MetricSpace, p: float, f, lam: float) -> np.ndarray:
    """Inf-convolution with cost lam * d**p / p."""
    if not (np.isfinite(lam) and lam > 0):
        raise ValidationError(f"lambda must be positive, got {lam!r}")
    return inf_convolution(space, power(p, scale=lam), f, 1.0)


def extremizer_set(
    space: MetricSpace, cost: CostFunction, f, t: float, x: int,
    tie_tol: float = TIE_TOL, mode: str = "sup",
) -> ExtremizerSet:
    """Points attaining P_t f(x) (mode 'sup') or Q_t f(x) (mode 'inf') within tie_tol."""
    f = np.asarray(f, dtype=float)
    if mode == "sup":
        row = _sup_table(space, cost, f, t)[x]
    elif mode == "inf":
        row = _sup_table(space, cost, -f, t)[x]
    else:
        raise ValidationError(f"mode must be 'sup' or 'inf', got {mode!r}")
    best = row.max()
    pts = tuple(int(i) for i in np.flatnonzero(row >= best - tie_tol))
    return ExtremizerSet(pts, tie_tol, float(best if mode == "sup" else -best))


def _active_distances(table: np.ndarray, dist: np.ndarray, tie_tol: float):
    best = table.max(axis=1)
    active = table >= best[:, None] - tie_tol
    maxdist = np.where(active, dist, -np.inf).max(axis=1)
    mindist = np.where(active, dist, np.inf).min(axis=1)
    return maxdist, mindist


def time_derivatives(
    space: MetricSpace, cost: CostFunction, f, t: float, tie_tol: float = TIE_TOL,
) -> TimeDerivatives:
    """Exact one-sided derivatives of t -> P_t f(x) for every x.

    On a finite space P_t f is a maximum of finitely many smooth functions of t,
    each with derivative beta(d/t); the right derivative takes the largest
    active distance and the left derivative the smallest.
    """
    table = _sup_table(space, cost, f, t)
    maxdist, mindist = _active_distances(table, space.dist, tie_tol)
    return TimeDerivatives(
        dplus=np.asarray(cost.beta(maxdist / t), dtype=float),
        dminus=np.asarray(cost.beta(mindist / t), dtype=float),
        maxdist=maxdist,
        mindist=mindist,
    )


def dP_dt_plus(space, cost, f, t, x, tie_tol: float = TIE_TOL) -> float:
    m = extremizer_set(space, cost, f, t, x, tie_tol)
    return float(cost.beta(max(space.dist[x, y] for y in m.points) / t))


def dP_dt_minus(space, cost, f, t, x, tie_tol: float = TIE_TOL) -> float:
    m = extremizer_set(space, cost, f, t, x, tie_tol)
    return float(cost.beta(min(space.dist[x, y] for y in m.points) / t))


def dQ_dt_plus(space, cost, f, t, tie_tol: float = TIE_TOL) -> np.ndarray:
    """Right t-derivative of Q_t f at every point, via Q_t f = -P_t(-f)."""
    return -time_derivatives(space, cost, -np.asarray(f, dtype=float), t, tie_tol).dplus


def _check_cost_matrix(c, n=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError(f"cost matrix must be square, got shape {c.shape}")
    if n is not None and c.shape[0] != n:
        raise ValidationError(f"cost matrix has size {c.shape[0]}, field has {n}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("cost matrix entries must be finite")
    return c


def p_transform(c, g) -> np.ndarray:
    """P_c g(x) = max_y g(y) - c[x, y]."""
    g = np.asarray(g, dtype=float)
    c = _check_cost_matrix(c, len(g))
    return (g[None, :] - c).max(axis=1)


def q_transform(c, f) -> np.ndarray:
    """Q_c f(y) = min_x f(x) + c[x, y]."""
    f = np.asarray(f, dtype=float)
    c = _check_cost_matrix(c, len(f))
    return (f[:, None] + c).min(axis=0)


def general_transforms(c, f) -> Tuple[np.ndarray, np.ndarray]:
    """The pair (P_c f, Q_c f) for an arbitrary finite cost matrix."""
    return p_transform(c, f), q_transform(c, f)


def transform_argmax(c, g, tie_tol: float = TIE_TOL) -> np.ndarray:
    """Boolean mask ``[x, y]``: y attains P_c g(x) within tie_tol."""
    table = np.asarray(g, dtype=float)[None, :] - _check_cost_matrix(c, len(g))
    return table >= table.max(axis=1)[:, None] - tie_tol


def localization_radius(cost: CostFunction, f, t: float) -> float:
    """Bound t alpha^{-1}(Osc(f)/t) on the distance to any minimiser of Q_t f."""
    _check_t(t)
    f = np.asarray(f, dtype=float)
    return t * cost.inverse((f.max() - f.min()) / t)


def time_lipschitz_bound(cost: CostFunction, f, t: float) -> float:
    """beta(alpha^{-1}(Osc(f)/t)), bounding |d/dt Q_t f| at time t."""
    _check_t(t)
    f = np.asarray(f, dtype=float)
    return float(cost.beta(cost.inverse((f.max() - f.min()) / t)))
