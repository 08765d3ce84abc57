"""Convex cost generators alpha, their duals and growth exponents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DualDiverges, NotDelta2, ParameterOutOfRange, ValidationError

EXPONENT_GRID = np.logspace(-6, 6, 10001)
DELTA2_LIMIT = 1e12


@dataclass(frozen=True)
class CostProfile:
    r_alpha: float
    p_alpha: float
    delta2_constant: float
    estimated: bool = False
    grid: Optional[np.ndarray] = None


class CostFunction:
    """An increasing convex C^1 function alpha on [0, inf) with alpha(0) = 0.

    Use the constructors :func:`power`, :func:`linear_capped` and
    :func:`tabulated` rather than instantiating this class directly.
    """

    kind: str = "abstract"
    ell: float = np.inf
    ell_truncated: bool = False

    def alpha(self, h):
        raise NotImplementedError

    def alpha_prime(self, h):
        raise NotImplementedError

    def __call__(self, h):
        return self.alpha(h)

    def beta(self, h):
        h = np.asarray(h, dtype=float)
        return h * self.alpha_prime(h) - self.alpha(h)

    def legendre_dual(self, u: float) -> float:
        u = float(u)
        if u < 0:
            raise ValidationError(f"Legendre dual is defined for u >= 0, got {u!r}")
        if u > self.ell:
            raise DualDiverges(u, self.ell)
        if u == 0:
            return 0.0
        return _dual_by_ternary_search(self, u)

    def dual(self, u):
        """Vectorised :meth:`legendre_dual`."""
        u = np.asarray(u, dtype=float)
        return np.vectorize(self.legendre_dual, otypes=[float])(u)

    def inverse(self, v: float, rtol: float = 1e-12) -> float:
        """Smallest h with alpha(h) >= v, by bisection."""
        v = float(v)
        if v <= 0:
            return 0.0
        hi = 1.0
        while self.alpha(hi) < v:
            hi *= 2.0
            if hi > 1e300:
                raise ValidationError(f"alpha never reaches {v!r}")
        lo = 0.0
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if self.alpha(mid) >= v:
                hi = mid
            else:
                lo = mid
        return hi

    def matrix(self, dist, t: float = 1.0) -> np.ndarray:
        """Cost matrix ``t * alpha(dist / t)``."""
        dist = np.asarray(dist, dtype=float)
        if t == 1.0:
            return np.asarray(self.alpha(dist), dtype=float)
        return t * np.asarray(self.alpha(dist / t), dtype=float)

    def scaled(self, factor: float) -> "CostFunction":
        return _Scaled(self, float(factor))

    def exponents(self) -> CostProfile:
        return _grid_exponents(self)

    def to_document(self) -> dict:
        raise NotImplementedError


class PowerCost(CostFunction):
    kind = "power"

    def __init__(self, p: float, scale: float = 1.0):
        if not p >= 1:
            raise ValidationError(f"power cost needs p >= 1, got {p!r}")
        if not scale > 0:
            raise ValidationError(f"power cost scale must be positive, got {scale!r}")
        self.p = float(p)
        self.scale = float(scale)
        self.ell = np.inf if self.p > 1 else self.scale

    def __repr__(self):
        return f"PowerCost(p={self.p!r}, scale={self.scale!r})"

    def alpha(self, h):
        return self.scale * np.power(h, self.p) / self.p

    def alpha_prime(self, h):
        if self.p == 1:
            return self.scale * np.ones_like(np.asarray(h, dtype=float))
        return self.scale * np.power(h, self.p - 1)

    def beta(self, h):
        return self.scale * (self.p - 1) * np.power(h, self.p) / self.p

    def legendre_dual(self, u: float) -> float:
        u = float(u)
        if u < 0:
            raise ValidationError(f"Legendre dual is defined for u >= 0, got {u!r}")
        if u > self.ell:
            raise DualDiverges(u, self.ell)
        if self.p == 1:
            return 0.0
        q = self.p / (self.p - 1)
        return self.scale ** (1 - q) * u ** q / q

    def dual(self, u):
        u = np.asarray(u, dtype=float)
        if self.p == 1:
            if np.any(u > self.ell):
                raise DualDiverges(float(u.max()), self.ell)
            return np.zeros_like(u)
        q = self.p / (self.p - 1)
        return self.scale ** (1 - q) * np.power(u, q) / q

    def inverse(self, v: float, rtol: float = 1e-12) -> float:
        return CostFunction.inverse(self, v, rtol)

    def matrix(self, dist, t: float = 1.0) -> np.ndarray:
        dist = np.asarray(dist, dtype=float)
        return (self.scale * t ** (1 - self.p) / self.p) * np.power(dist, self.p)

    def scaled(self, factor: float) -> "PowerCost":
        return PowerCost(self.p, self.scale * factor)

    def exponents(self) -> CostProfile:
        if self.p == 1:
            raise ParameterOutOfRange("growth exponents need a strictly superlinear cost (p > 1)")
        return CostProfile(self.p, self.p, 2.0 ** self.p)

    def to_document(self) -> dict:
        doc = {"kind": "power", "p": self.p}
        if self.scale != 1.0:
            doc["scale"] = self.scale
        return doc


class LinearCappedCost(CostFunction):
    """Quadratic up to ``cap``, then affine with slope ``cap``."""

    kind = "linear_capped"

    def __init__(self, cap: float = 1.0):
        if not cap > 0:
            raise ValidationError(f"cap must be positive, got {cap!r}")
        self.cap = float(cap)
        self.ell = self.cap

    def __repr__(self):
        return f"LinearCappedCost(cap={self.cap!r})"

    def alpha(self, h):
        h = np.asarray(h, dtype=float)
        a = self.cap
        return np.where(h <= a, 0.5 * h * h, a * h - 0.5 * a * a)

    def alpha_prime(self, h):
        return np.minimum(np.asarray(h, dtype=float), self.cap)

    def legendre_dual(self, u: float) -> float:
        u = float(u)
        if u < 0:
            raise ValidationError(f"Legendre dual is defined for u >= 0, got {u!r}")
        if u > self.ell:
            raise DualDiverges(u, self.ell)
        return 0.5 * u * u

    def dual(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u > self.ell):
            raise DualDiverges(float(u.max()), self.ell)
        return 0.5 * u * u

    def exponents(self) -> CostProfile:
        # x alpha'/alpha is 2 below the cap and decreases to 1 above it;
        # alpha(2x)/alpha(x) peaks at 4 on [0, cap/2].
        return CostProfile(1.0, 2.0, 4.0)

    def to_document(self) -> dict:
        return {"kind": "linear_capped", "cap": self.cap}


class TabulatedCost(CostFunction):
    """Convex C^1 interpolant of samples ``(h_k, alpha(h_k))``.

    The derivative is piecewise linear and nondecreasing: each sample interval
    gets one extra knot, placed so the interpolant reproduces both endpoint
    values (a convexity-preserving quadratic spline).  Past the last sample the
    cost continues affinely.  Samples lying on one line pin alpha' to that
    line's slope; where two such runs meet, alpha' jumps, since no C^1 convex
    function fits that data.
    """

    kind = "custom"

    def __init__(self, samples):
        s = np.asarray(samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2 or len(s) < 2:
            raise ValidationError("custom cost needs at least two [h, alpha(h)] samples")
        if not np.all(np.isfinite(s)):
            raise ValidationError("custom cost samples must be finite")
        h, a = s[:, 0], s[:, 1]
        if h[0] != 0 or a[0] != 0:
            raise ValidationError("custom cost samples must start at [0, 0]")
        if np.any(np.diff(h) <= 0):
            raise ValidationError("custom cost sample abscissae must be strictly increasing")
        slopes = np.diff(a) / np.diff(h)
        scale = max(1.0, float(np.abs(slopes).max()))
        if np.any(slopes < -1e-10 * scale):
            raise ValidationError("custom cost samples must be nondecreasing")
        if np.any(np.diff(slopes) < -1e-10 * scale):
            k = int(np.argmax(np.diff(slopes) < -1e-10 * scale)) + 1
            raise ValidationError(f"custom cost samples are not convex at sample {k}")
        slopes = np.maximum.accumulate(np.maximum(slopes, 0.0))
        self.samples = s
        self._build(h, a, slopes)
        self.ell = float(a[-1] / h[-1])
        self.ell_truncated = True

    def __repr__(self):
        return f"TabulatedCost({len(self.samples)} samples)"

    def _build(self, h, a, s):
        n = len(h)
        dh = np.diff(h)
        d = np.empty(n)
        if n > 2:
            d[1:-1] = (dh[1:] * s[:-1] + dh[:-1] * s[1:]) / (dh[:-1] + dh[1:])
            flat = np.abs(np.diff(s)) <= 1e-12 * max(1.0, float(s[-1]))
            for j in range(1, n - 1):
                # an affine run forces alpha' to its slope on the whole run
                if flat[j - 1] or (j + 1 <= n - 2 and flat[j]):
                    d[j] = s[j]
                elif j >= 2 and flat[j - 2]:
                    d[j] = s[j - 1]
            d[0] = min(max(0.0, 2 * s[0] - d[1]), s[0])
            d[-1] = max(2 * s[-1] - d[-2], s[-1])
        else:
            d[0] = d[1] = s[0]
        xs, ys = [h[0]], [d[0]]
        for k in range(n - 1):
            lo, hi, sk = d[k], d[k + 1], s[k]
            if hi - lo > 1e-15 * max(1.0, abs(hi)):
                lo_bar = max(lo, 2 * sk - hi)
                hi_bar = min(hi, 2 * sk - lo)
                dbar = 0.5 * (lo_bar + hi_bar)
                lam = (dbar + hi - 2 * sk) / (hi - lo)
                lam = min(max(lam, 0.0), 1.0)
                # lam at 0 or 1 duplicates an abscissa: a jump in alpha'
                xs.append(h[k] + lam * dh[k])
                ys.append(dbar)
            xs.append(h[k + 1])
            ys.append(d[k + 1])
        self._x = np.array(xs)
        self._y = np.array(ys)
        seg = np.diff(self._x) * 0.5 * (self._y[:-1] + self._y[1:])
        self._a = np.concatenate([[0.0], np.cumsum(seg)])
        # pin the sample values exactly; the spline reproduces them up to rounding
        self._a[np.searchsorted(self._x, h, side="left")] = a
        self._a[np.searchsorted(self._x, h, side="right") - 1] = a

    def _locate(self, h):
        h = np.asarray(h, dtype=float)
        i = np.clip(np.searchsorted(self._x, h, side="right") - 1, 0, len(self._x) - 2)
        return h, i

    def alpha_prime(self, h):
        h, i = self._locate(h)
        x0, x1 = self._x[i], self._x[i + 1]
        y0, y1 = self._y[i], self._y[i + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(x1 > x0, np.clip((h - x0) / (x1 - x0), 0.0, 1.0), 1.0)
        inside = y0 + w * (y1 - y0)
        return np.where(h >= self._x[-1], self._y[-1], inside)

    def alpha(self, h):
        h, i = self._locate(h)
        x0, x1 = self._x[i], self._x[i + 1]
        y0, y1 = self._y[i], self._y[i + 1]
        dx = np.minimum(h, x1) - x0
        with np.errstate(divide="ignore", invalid="ignore"):
            curv = np.where(x1 > x0, (y1 - y0) / (x1 - x0), 0.0)
        inside = self._a[i] + y0 * dx + 0.5 * curv * dx * dx
        beyond = self._a[-1] + self._y[-1] * (h - self._x[-1])
        return np.where(h >= self._x[-1], beyond, inside)

    def to_document(self) -> dict:
        return {"kind": "custom", "samples": self.samples.tolist()}


class _Scaled(CostFunction):
    def __init__(self, base: CostFunction, factor: float):
        if not factor > 0:
            raise ValidationError(f"scale factor must be positive, got {factor!r}")
        self.base, self.factor = base, factor
        self.kind = base.kind
        self.ell = base.ell * factor
        self.ell_truncated = base.ell_truncated

    def alpha(self, h):
        return self.factor * self.base.alpha(h)

    def alpha_prime(self, h):
        return self.factor * self.base.alpha_prime(h)

    def legendre_dual(self, u: float) -> float:
        return self.factor * self.base.legendre_dual(float(u) / self.factor)

    def exponents(self) -> CostProfile:
        return self.base.exponents()


def _dual_by_ternary_search(cost: CostFunction, u: float, rtol: float = 1e-12) -> float:
    hi = 1.0
    while float(cost.alpha_prime(hi)) < u:
        hi *= 2.0
        if hi > 1e300:
            raise DualDiverges(u, cost.ell)
    lo = 0.0

    def gain(h):
        return h * u - float(cost.alpha(h))

    while hi - lo > rtol * max(hi, 1e-300):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if gain(m1) < gain(m2):
            lo = m1
        else:
            hi = m2
    return max(0.0, gain(0.5 * (lo + hi)))


def _grid_exponents(cost: CostFunction) -> CostProfile:
    x = EXPONENT_GRID
    a = np.asarray(cost.alpha(x), dtype=float)
    ok = a > 0
    if not np.any(ok):
        raise ValidationError("cost vanishes on the whole exponent grid")
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = x[ok] * np.asarray(cost.alpha_prime(x[ok])) / a[ok]
        a2 = np.asarray(cost.alpha(2 * x[ok]), dtype=float)
        doubling = a2 / a[ok]
    # overflow on the grid means unbounded growth
    doubling = np.where(np.isfinite(doubling), doubling, np.inf)
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    worst = int(np.argmax(doubling))
    if doubling[worst] > DELTA2_LIMIT:
        raise NotDelta2(float(doubling[worst]), float(x[ok][worst]))
    r = max(1.0, float(ratio.min()))
    p = float(ratio.max())
    if not p > 1:
        raise ParameterOutOfRange("growth exponents need a strictly superlinear cost")
    return CostProfile(r, p, float(doubling.max()), estimated=True, grid=x)


def power(p: float, scale: float = 1.0) -> PowerCost:
    """alpha(h) = scale * h**p / p."""
    return PowerCost(p, scale)


def linear_capped(cap: float = 1.0) -> LinearCappedCost:
    return LinearCappedCost(cap)


def tabulated(samples) -> TabulatedCost:
    return TabulatedCost(samples)


def legendre_dual(cost: CostFunction, u: float) -> float:
    """sup over h >= 0 of h*u - alpha(h)."""
    return cost.legendre_dual(u)


def beta(cost: CostFunction, h):
    """h alpha'(h) - alpha(h)."""
    out = cost.beta(h)
    return float(out) if np.ndim(out) == 0 else out


def exponents(cost: CostFunction) -> CostProfile:
    return cost.exponents()


def cost_from_document(doc: dict) -> CostFunction:
    kind = doc.get("kind")
    if kind == "power":
        return power(float(doc["p"]), float(doc.get("scale", 1.0)))
    if kind == "linear_capped":
        return linear_capped(float(doc.get("cap", 1.0)))
    if kind == "custom":
        return tabulated(doc["samples"])
    raise ValidationError(f"unknown cost kind {kind!r}")
