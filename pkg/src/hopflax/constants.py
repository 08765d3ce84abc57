"""Scalar constants for the power-cost inequalities: beta_p, theta_p, phi, kappa_p.

theta_p(x) = inf over 1 < u < 1/x of (beta_p(u) - 1) / (1 - x u).  Writing
u = (1 + v)^(p-1), the minimiser solves (1 + v)^p - v^p = 1/x, which is
increasing in v, so it is located by bisection.  Working in v rather than u
keeps u - 1 accurate when x is close to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import TOutOfRange, UOutOfRange, ValidationError, XOutOfRange

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
QUAD_TOL = 1e-10


def _check_p(p):
    if not (np.isfinite(p) and p >= 2):
        raise ValidationError(f"p must be >= 2, got {p!r}")


def beta_p(u, p: float):
    """u / (u^(1/(p-1)) - 1)^(p-1), evaluated as (1 - u^(-1/(p-1)))^-(p-1)."""
    _check_p(p)
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 1)):
        raise UOutOfRange(f"beta_p needs u > 1, got {u.min() if u.ndim else float(u)!r}")
    out = np.exp(-(p - 1) * np.log1p(-np.power(u, -1.0 / (p - 1))))
    return float(out) if out.ndim == 0 else out


def _power_gap(v, p):
    """(1 + v)^p - v^p without cancellation for large v."""
    v = np.asarray(v, dtype=float)
    big = v > 1
    vb = np.where(big, v, 1.0)
    large = np.power(vb, p) * np.expm1(p * np.log1p(1.0 / vb))
    small = np.power(1.0 + v, p) - np.power(v, p)
    return np.where(big, large, small)


def stationary_point(x, p: float):
    """v > 0 with (1 + v)^p - v^p = 1/x, vectorised over x in (0, 1)."""
    x = np.asarray(x, dtype=float)
    target = 1.0 / x
    lo = np.zeros_like(x)
    hi = np.power(x, -1.0 / (p - 1)) - 1.0
    # the bracket top satisfies the equation with >=; widen defensively
    while np.any(_power_gap(hi, p) < target):
        hi = np.where(_power_gap(hi, p) < target, 2 * hi + 1, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        up = _power_gap(mid, p) >= target
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
        if np.all(hi - lo <= 1e-16 * hi):
            break
    return 0.5 * (lo + hi)


def _theta(x, p):
    v = stationary_point(x, p)
    num = np.expm1((p - 1) * np.log1p(1.0 / v))
    den = -np.expm1(np.log(x) + (p - 1) * np.log1p(v))
    return num / den


def theta_p(x, p: float):
    """theta_p(x) for x in (0, 1)."""
    _check_p(p)
    x = np.asarray(x, dtype=float)
    if np.any(~((x > 0) & (x < 1))):
        raise XOutOfRange(f"theta_p needs 0 < x < 1, got {x!r}")
    out = _theta(x, p)
    return float(out) if out.ndim == 0 else out


def theta_2_closed_form(x):
    x = np.asarray(x, dtype=float)
    return 4 * x / (1 - x) ** 2


def stationarity_residual(x: float, p: float) -> float:
    """Relative residual of u^(p/(p-1)) - (u^(1/(p-1)) - 1)^p = 1/x at the root."""
    v = float(stationary_point(x, p))
    u = (1 + v) ** (p - 1)
    lhs = u ** (p / (p - 1)) - (u ** (1 / (p - 1)) - 1) ** p
    return (lhs - 1 / x) * x


def phi(s, p: float):
    """theta_p(s) / (s (theta_p(s) + 1))."""
    _check_p(p)
    s = np.asarray(s, dtype=float)
    if np.any(~((s > 0) & (s < 1))):
        raise XOutOfRange(f"phi needs 0 < s < 1, got {s!r}")
    th = _theta(s, p)
    out = 1.0 / (s * (1.0 + 1.0 / th))
    return float(out) if out.ndim == 0 else out


def _phi_dw(w, p):
    """Integrand of phi after s = w^(p-1): phi(w^(p-1)) (p-1) w^(p-2)."""
    s = np.power(w, p - 1)
    th = _theta(s, p)
    # phi(s) ds = (p-1) w^(p-2) / (s (1 + 1/theta)) dw = (p-1) / (w (1 + 1/theta)) dw
    return (p - 1) / (w * (1.0 + 1.0 / th))


def _panel_rule(a, b, p):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * GL_NODES[None, :]
    vals = _phi_dw(nodes, p)
    return half * (vals @ GL_WEIGHTS)


def integrate_phi(r: float, p: float, tol: float = QUAD_TOL) -> float:
    """Integral of phi over (0, r], by adaptive composite Gauss-Legendre in w."""
    _check_p(p)
    if not 0 <= r <= 1:
        raise XOutOfRange(f"upper limit must lie in [0, 1], got {r!r}")
    if r == 0:
        return 0.0
    top = r ** (1.0 / (p - 1))
    # avoid evaluating exactly at s = 1 where theta_p is infinite
    if top >= 1.0:
        top = 1.0
    lo, hi = np.array([0.0]), np.array([top])
    coarse = _panel_rule(lo, hi, p)
    total = []
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        left = _panel_rule(lo, mid, p)
        right = _panel_rule(mid, hi, p)
        fine = left + right
        done = np.abs(fine - coarse) < tol
        total.extend(fine[done].tolist())
        if np.all(done):
            break
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    else:
        raise RuntimeError("phi quadrature did not converge")
    return math.fsum(total)


@lru_cache(maxsize=64)
def kappa_p(p: float) -> float:
    """exp of the integral of phi over (0, 1); equals e^2 for p = 2."""
    return math.exp(integrate_phi(1.0, float(p)))


def psi_p(r: float, p: float) -> float:
    """Integral of phi over (0, r], divided by p - 1."""
    return integrate_phi(r, p) / (p - 1)


@dataclass(frozen=True)
class EllSchedule:
    p: float
    t: float
    a_p: float
    v: float
    ell: float
    psi: Callable[[float], float]


def a_p(p: float) -> float:
    """exp(-Psi_p(1)) = kappa_p^(-1/(p-1))."""
    return math.exp(-math.log(kappa_p(p)) / (p - 1))


def psi_inverse(y: float, p: float, tol: float = 1e-10) -> float:
    """r in [0, 1] with Psi_p(r) = y, by bisection."""
    top = math.log(kappa_p(p)) / (p - 1)
    if y <= 0:
        return 0.0
    if y >= top:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if psi_p(mid, p) >= y:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def ell_schedule(p: float, t: float) -> EllSchedule:
    """v(t) = Psi_p^{-1}(-ln t) and ell_p(t) = t^(p-1) v(t) for t in [a_p, 1]."""
    _check_p(p)
    ap = a_p(p)
    if not (ap * (1 - 1e-12) <= t <= 1):
        raise TOutOfRange(f"t must lie in [{ap!r}, 1], got {t!r}")
    v = psi_inverse(-math.log(t), p)
    return EllSchedule(p, t, ap, v, t ** (p - 1) * v, lambda r: psi_p(r, p))
