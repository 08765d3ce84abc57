"""Probability measures on finite spaces and the functionals built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMeasure, NonPositiveField, ValidationError

SUM_TOL = 1e-12
ZERO_WEIGHT = 1e-300


@dataclass(frozen=True, eq=False)
class ProbMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise InvalidMeasure(f"weights must be a nonempty vector, got shape {w.shape}")
        bad = np.flatnonzero(~np.isfinite(w) | (w < 0))
        if len(bad):
            i = int(bad[0])
            raise InvalidMeasure(f"weight {w[i]!r} at index {i} is not a finite nonnegative number")
        w[w < ZERO_WEIGHT] = 0.0
        total = math.fsum(w)
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidMeasure(f"weights sum to {total!r}, expected 1 within {SUM_TOL}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0

    def to_document(self) -> dict:
        return {"weights": self.weights.tolist()}


def uniform(n: int) -> ProbMeasure:
    return ProbMeasure(np.full(n, 1.0 / n))


def point_mass(n: int, i: int) -> ProbMeasure:
    w = np.zeros(n)
    w[i] = 1.0
    return ProbMeasure(w)


def normalized(weights) -> ProbMeasure:
    w = np.asarray(weights, dtype=float)
    return ProbMeasure(w / math.fsum(w))


def measure_from_document(doc) -> ProbMeasure:
    if not isinstance(doc, dict) or "weights" not in doc:
        raise InvalidMeasure('measure document needs a "weights" list')
    return ProbMeasure(doc["weights"])


def _field(mu: ProbMeasure, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (mu.n,):
        raise ValidationError(f"field has shape {f.shape}, measure has {mu.n} points")
    return f


def integrate(mu: ProbMeasure, f) -> float:
    f = _field(mu, f)
    s = mu.support
    return math.fsum(mu.weights[s] * f[s])


def _xlogx_excess(L):
    """L e^L - (e^L - 1), which is >= 0; series near 0 avoids cancellation."""
    L = np.asarray(L, dtype=float)
    small = np.abs(L) < 1e-2
    Ls = np.where(small, L, 0.0)
    series = Ls * Ls * (1 / 2 + Ls * (1 / 3 + Ls * (1 / 8 + Ls * (1 / 30 + Ls * (1 / 144 + Ls / 840)))))
    with np.errstate(over="ignore", invalid="ignore"):
        direct = L * np.exp(L) - np.expm1(L)
    return np.where(small, series, direct)


def log_mean_exp(mu: ProbMeasure, f) -> float:
    """log of the integral of e^f, accurate both for small and large f."""
    f = _field(mu, f)
    s = mu.support
    w, x = mu.weights[s], f[s]
    centre = math.fsum(w * x)
    y = x - centre
    if np.max(np.abs(y)) < 1.0:
        return centre + math.log1p(math.fsum(w * np.expm1(y)))
    top = float(x.max())
    return top + math.log(math.fsum(w * np.exp(x - top)))


def entropy_exp_scaled(mu: ProbMeasure, f):
    """Return (shift, value) with Ent_mu(e^f) = e^shift * value.

    Writing g = e^f and m its mean, each point contributes
    mu * m * h(log(g/m)) with h(L) = L e^L - e^L + 1 >= 0, so the sum has no
    cancellation.
    """
    f = _field(mu, f)
    s = mu.support
    w, x = mu.weights[s], f[s]
    lm = log_mean_exp(mu, f)
    L = x - lm
    return lm, math.fsum(w * _xlogx_excess(L))


def entropy_exp(mu: ProbMeasure, f) -> float:
    """Ent_mu(e^f)."""
    shift, value = entropy_exp_scaled(mu, f)
    return math.exp(shift) * value if value > 0 else 0.0


def entropy_functional(mu: ProbMeasure, g) -> float:
    """Ent_mu(g) = integral of g log(g / integral g) for g > 0 on the support."""
    g = _field(mu, g)
    s = mu.support
    bad = np.flatnonzero(s & ~(g > 0))
    if len(bad):
        i = int(bad[0])
        raise NonPositiveField(i, float(g[i]))
    logg = np.where(s, np.log(np.where(s, g, 1.0)), 0.0)
    return entropy_exp(mu, logg)


def relative_entropy(nu: ProbMeasure, mu: ProbMeasure) -> float:
    """H(nu|mu), +inf when nu charges a mu-null point."""
    if nu.n != mu.n:
        raise ValidationError(f"measures live on {nu.n} and {mu.n} points")
    a, b = nu.weights, mu.weights
    if np.any((a > 0) & (b == 0)):
        return math.inf
    s = b > 0
    # nu log(nu/mu) - nu + mu = mu h(log(nu/mu)); points with nu = 0 contribute mu
    pos = s & (a > 0)
    terms = np.zeros(len(a))
    terms[pos] = b[pos] * _xlogx_excess(np.log(a[pos] / b[pos]))
    terms[s & (a == 0)] = b[s & (a == 0)]
    return max(0.0, math.fsum(terms))


def log_k_norm(mu: ProbMeasure, logg, k: float) -> float:
    """log ||g||_k given log g (entries may be -inf when k > 0)."""
    logg = _field(mu, logg)
    s = mu.support
    w, x = mu.weights[s], logg[s]
    if k == 0:
        return math.fsum(w * x)
    if np.all(np.isfinite(x)):
        spread = float(np.max(np.abs(k * (x - math.fsum(w * x)))))
        if spread < 1.0:
            return log_mean_exp(mu, k * logg) / k
    with np.errstate(invalid="ignore"):
        kx = k * x
    top = float(kx.max())
    if top == -math.inf:
        return -math.inf
    return (top + math.log(math.fsum(w * np.exp(kx - top)))) / k


def k_norm(mu: ProbMeasure, g, k: float) -> float:
    """(integral |g|^k)^(1/k), the geometric mean at k = 0."""
    g = _field(mu, g)
    s = mu.support
    if k <= 0:
        bad = np.flatnonzero(s & ~(g > 0))
        if len(bad):
            i = int(bad[0])
            raise NonPositiveField(i, float(g[i]))
    with np.errstate(divide="ignore"):
        logg = np.where(s, np.log(np.abs(g)), 0.0)
    return math.exp(log_k_norm(mu, logg, k))


def variance(mu: ProbMeasure, f) -> float:
    f = _field(mu, f)
    s = mu.support
    w, x = mu.weights[s], f[s]
    mean = math.fsum(w * x)
    return math.fsum(w * (x - mean) ** 2)
