"""c-convexity: convexification, c-subdifferentials, discrete slopes, c-gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .costs import CostFunction
from .errors import NotCConvex
from .hopf_lax import TIE_TOL, p_transform, q_transform
from .metric_space import MetricSpace, as_field


@dataclass(frozen=True)
class ConvexityCheck:
    is_convex: bool
    deviation: float

    def __bool__(self):
        return self.is_convex


@dataclass(frozen=True)
class Subdifferential:
    """``sets[x]`` lists the indices y in the c-subdifferential at x.

    ``convexified`` is True when the input was not c-convex and the sets were
    computed for its convexification instead.
    """

    sets: Tuple[Tuple[int, ...], ...]
    mask: np.ndarray
    tie_tol: float
    convexified: bool
    deviation: float


def c_convexify(c, g) -> np.ndarray:
    """P_c Q_c g, the largest c-convex function below g."""
    return p_transform(c, q_transform(c, g))


def is_c_convex(c, f, tol: float = 1e-10) -> ConvexityCheck:
    f = np.asarray(f, dtype=float)
    dev = float(np.abs(c_convexify(c, f) - f).max()) if len(f) else 0.0
    return ConvexityCheck(dev <= tol, dev)


def subdifferential(c, f, tie_tol: float = TIE_TOL, strict: bool = False,
                    convexity_tol: float = 1e-10) -> Subdifferential:
    """Sets {y : Q_c f(y) - c(x, y) = f(x)} with near-ties admitted."""
    c = np.asarray(c, dtype=float)
    f = np.asarray(f, dtype=float)
    qf = q_transform(c, f)
    fhat = p_transform(c, qf)
    dev = float(np.abs(fhat - f).max()) if len(f) else 0.0
    flagged = dev > convexity_tol
    if flagged and strict:
        raise NotCConvex(dev)
    # Q_c of the convexification equals Q_c f, so qf serves both cases
    mask = qf[None, :] - c >= fhat[:, None] - tie_tol
    mask.setflags(write=False)
    sets = tuple(tuple(int(y) for y in np.flatnonzero(row)) for row in mask)
    return Subdifferential(sets, mask, tie_tol, flagged, dev)


def slopes(space: MetricSpace, f) -> Tuple[np.ndarray, np.ndarray]:
    """Discrete upper and lower local slopes at every point.

    slope_plus(x) = max over neighbours y of [f(y) - f(x)]_+ / d(x, y) and
    slope_minus uses the negative part; both are 0 at isolated points.
    """
    f = as_field(space, f)
    nb = space.neighbors
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (f[None, :] - f[:, None]) / space.dist
    plus = np.where(nb, np.maximum(q, 0.0), 0.0).max(axis=1, initial=0.0)
    minus = np.where(nb, np.maximum(-q, 0.0), 0.0).max(axis=1, initial=0.0)
    return plus, minus


def slope_plus(space: MetricSpace, f, x: int) -> float:
    return float(slopes(space, f)[0][x])


def slope_minus(space: MetricSpace, f, x: int) -> float:
    return float(slopes(space, f)[1][x])


def c_gradients(space: MetricSpace, cost: CostFunction, K: float, f, strict: bool = False,
                tie_tol: float = TIE_TOL) -> Tuple[np.ndarray, np.ndarray, Subdifferential]:
    """(|grad_c^+ f|, |grad_c^- f|, subdifferential) for the cost K alpha(d).

    The gradients are (K alpha)' at the largest and smallest distance from x to
    its c-subdifferential.
    """
    f = as_field(space, f)
    scaled = cost.scaled(K)
    sub = subdifferential(scaled.matrix(space.dist), f, tie_tol=tie_tol, strict=strict)
    far = np.where(sub.mask, space.dist, -np.inf).max(axis=1)
    near = np.where(sub.mask, space.dist, np.inf).min(axis=1)
    plus = np.asarray(scaled.alpha_prime(far), dtype=float)
    minus = np.asarray(scaled.alpha_prime(near), dtype=float)
    return plus, minus, sub


def c_gradient_plus(space, cost, K, f, x, strict: bool = False) -> float:
    return float(c_gradients(space, cost, K, f, strict)[0][x])


def c_gradient_minus(space, cost, K, f, x, strict: bool = False) -> float:
    return float(c_gradients(space, cost, K, f, strict)[1][x])


def contact_distances(space: MetricSpace, cost: CostFunction, g,
                      tie_tol: float = TIE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Largest and smallest d(x, y) over y attaining P_c g(x), for c = alpha(d)."""
    c = cost.matrix(space.dist)
    table = np.asarray(g, dtype=float)[None, :] - c
    m = table >= table.max(axis=1)[:, None] - tie_tol
    far = np.where(m, space.dist, -np.inf).max(axis=1)
    near = np.where(m, space.dist, np.inf).min(axis=1)
    return far, near
