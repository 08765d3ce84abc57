"""Functional inequalities on finite spaces: evaluators, slacks and witness-based estimators.

Every estimator returns a lower bound on the optimal constant, certified by the
witness stored in its report; :func:`replay_witness` recomputes the value from
the witness alone.  Search families are declared by the module constants below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import beta_p, kappa_p
from .convexity import c_convexify, c_gradients, slopes
from .costs import EXPONENT_GRID, CostFunction, power
from .errors import (
    DegenerateSchedule,
    FieldOutsideClass,
    LambdaOutOfRange,
    NonPositiveExponent,
    ParameterOutOfRange,
    ThetaBelowFloor,
    UOutOfRange,
    ValidationError,
)
from .hopf_lax import dQ_dt_plus, inf_convolution, q_lambda
from .measures import (
    ProbMeasure,
    entropy_exp,
    entropy_exp_scaled,
    integrate,
    log_k_norm,
    relative_entropy,
    variance,
)
from .metric_space import MetricSpace, as_field
from .parallel import argmax_lowest, map_ordered, restart_rngs
from .transport import ot_cost

# search family
AMPLITUDE_DECADES = (-3.0, 1.0)
SMOOTHING_TIMES = (None, 0.1, 1.0)
ASCENT_STARTS = 4
ASCENT_ITERS = 200
ASCENT_RTOL = 1e-8
ASCENT_MIN_STEP = 1e-12
LAMBDA_GRID = np.logspace(-3, 3, 25)
K_GRID = np.logspace(-2, 2, 17)
U_GRID = 1.0 + np.logspace(-3, 2, 21)
ENTROPY_FLOOR = 1e-10
# fields flatter than this (relative to their size) give 0/0 rounding noise
OSCILLATION_FLOOR = 1e-6
CHAIN_SLACK = 0.05

FAMILY_FIELDS = (
    "gaussian fields, optionally smoothed by Q_t (t in {0.1, 1}), oscillation "
    "log-uniform in [1e-3, 10], then coordinate ascent from the best 4 starts"
)


@dataclass(frozen=True)
class RatioValue:
    """A ratio numerator/denominator, both divided by a common positive factor.

    ``value`` is None for 0/0.
    """

    value: Optional[float]
    numerator: float
    denominator: float

    @property
    def undefined(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class InequalityReport:
    name: str
    constant_estimate: float
    bound_side: str
    witness: Optional[dict]
    trials: int
    seed: int
    family: str = FAMILY_FIELDS
    undefined: bool = False
    extra: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "constant_estimate": self.constant_estimate,
            "bound_side": self.bound_side,
            "witness": self.witness,
            "trials": self.trials,
            "seed": self.seed,
            "family": self.family,
            "undefined": self.undefined,
            "extra": self.extra,
        }


# ---------------------------------------------------------------------------
# exponent schedule


@dataclass(frozen=True)
class ScheduleParams:
    """Exponent schedule k(t): p_alpha growth up to t_o, r_alpha growth after."""

    C: float
    t_o: float
    r_alpha: float
    p_alpha: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValidationError(f"C must be positive, got {self.C!r}")
        if not self.t_o > 0:
            raise ValidationError(f"t_o must be positive, got {self.t_o!r}")
        if not (1 <= self.r_alpha <= self.p_alpha and self.p_alpha > 1):
            raise ValidationError(
                f"need 1 <= r_alpha <= p_alpha and p_alpha > 1, got {self.r_alpha!r}, {self.p_alpha!r}"
            )

    @classmethod
    def from_cost(cls, cost: CostFunction, C: float, t_o: Optional[float] = None) -> "ScheduleParams":
        prof = cost.exponents()
        if t_o is None:
            t_o = 0.5 * C * (prof.p_alpha - 1)
        return cls(C, t_o, prof.r_alpha, prof.p_alpha)

    @property
    def admissible(self) -> bool:
        return self.t_o <= self.C * (self.p_alpha - 1)

    def _p_base(self, t):
        return 1 + (t - self.t_o) / (self.C * (self.p_alpha - 1))

    def _r_base(self, t):
        return 1 + (t - self.t_o) / (self.C * (self.r_alpha - 1))

    def k(self, t: float) -> float:
        if self.r_alpha > 1 and t > self.t_o:
            return self._r_base(t) ** (self.r_alpha - 1)
        base = self._p_base(t)
        if base < 0:
            raise NonPositiveExponent(t, base)
        # k = 0 at the admissible edge t_o = C (p_alpha - 1), t = 0: the geometric-mean norm
        value = base ** (self.p_alpha - 1)
        return min(1.0, value) if self.r_alpha == 1 else value

    def k_prime(self, t: float) -> float:
        """Right derivative of k."""
        if t >= self.t_o:
            if self.r_alpha == 1:
                return 0.0
            return self._r_base(t) ** (self.r_alpha - 2) / self.C
        base = self._p_base(t)
        if base < 0 or (base == 0 and self.p_alpha < 2):
            raise NonPositiveExponent(t, base)
        return base ** (self.p_alpha - 2) / self.C

    def default_grid(self) -> np.ndarray:
        return np.logspace(math.log10(1e-3 * self.t_o), math.log10(10 * self.t_o), 40)


# ---------------------------------------------------------------------------
# evaluators


def _check_class(space: MetricSpace, cost: CostFunction, f: np.ndarray) -> None:
    if np.isfinite(cost.ell):
        plus, minus = slopes(space, f)
        top = float(max(plus.max(initial=0.0), minus.max(initial=0.0)))
        if top > cost.ell * (1 + 1e-12):
            raise FieldOutsideClass(top, cost.ell)


def lsi_ratio(space: MetricSpace, cost: CostFunction, mu: ProbMeasure, f) -> RatioValue:
    """Ent(e^f) over the integral of alpha*(|grad^- f|) e^f."""
    f = as_field(space, f)
    _check_class(space, cost, f)
    _, minus = slopes(space, f)
    shift, ent = entropy_exp_scaled(mu, f)
    s = mu.support
    den = math.fsum(mu.weights[s] * cost.dual(minus[s]) * np.exp(f[s] - shift))
    if den == 0:
        return RatioValue(None if ent == 0 else math.inf, ent, den)
    return RatioValue(ent / den, ent, den)


def tau_lsi_check(space: MetricSpace, p: float, mu: ProbMeasure, D: float, f, lam: float) -> float:
    """RHS - LHS of Ent(e^f) <= (1 - lam D)^-1 times the integral of (f - Q^lam f) e^f."""
    if not D > 0:
        raise ParameterOutOfRange(f"D must be positive, got {D!r}")
    if not 0 < lam < 1 / D:
        raise LambdaOutOfRange(f"lambda must lie in (0, {1 / D!r}), got {lam!r}")
    f = as_field(space, f)
    q = q_lambda(space, p, f, lam)
    ent = entropy_exp(mu, f)
    gain = integrate(mu, (f - q) * np.exp(f))
    return gain / (1 - lam * D) - ent


def _restricted_gradient(space, p, K, f, variant):
    if variant == "minus_cgrad":
        return c_gradients(space, power(p), K, f)[1]
    if variant == "plus_slope":
        return slopes(space, f)[0]
    raise ValidationError(f"variant must be 'minus_cgrad' or 'plus_slope', got {variant!r}")


def restricted_lsi_check(space: MetricSpace, p: float, mu: ProbMeasure, E: float, K: float,
                         u: float, g, variant: str = "minus_cgrad") -> float:
    """RHS - LHS of the restricted log-Sobolev inequality for f = Kc_p-convexification of g."""
    if not E > 0:
        raise ParameterOutOfRange(f"E must be positive, got {E!r}")
    if not 0 < K < 1 / E:
        raise ParameterOutOfRange(f"K must lie in (0, {1 / E!r}), got {K!r}")
    if not 1 < u < 1 / (K * E):
        raise UOutOfRange(f"u must lie in (1, {1 / (K * E)!r}), got {u!r}")
    g = as_field(space, g)
    q = p / (p - 1)
    f = c_convexify(power(p, K).matrix(space.dist), g)
    grad = _restricted_gradient(space, p, K, f, variant)
    shift, ent = entropy_exp_scaled(mu, f)
    s = mu.support
    G = math.fsum(mu.weights[s] * grad[s] ** q * np.exp(f[s] - shift))
    if G == 0 and ent == 0:
        return 0.0
    factor = (beta_p(u, p) - 1) / ((1 - K * E * u) * p * K ** (q - 1))
    return math.exp(shift) * (factor * G - ent)


def convex_descent_gap(space: MetricSpace, p: float, K: float, lam: float, g) -> np.ndarray:
    """Per-point min over y in the subdifferential of K(beta_p(lam/K) - 1) c_p(x, y) - (f - Q^lam f)(x).

    f is the Kc_p-convexification of g and c_p = d^p / p.
    """
    if not (K > 0 and lam > K):
        raise ParameterOutOfRange(f"need lam > K > 0, got K={K!r}, lam={lam!r}")
    from .convexity import subdifferential

    g = as_field(space, g)
    cp = power(p).matrix(space.dist)
    f = c_convexify(K * cp, g)
    drop = f - q_lambda(space, p, f, lam)
    sub = subdifferential(K * cp, f)
    bound = K * (beta_p(lam / K, p) - 1) * cp
    return np.where(sub.mask, bound - drop[:, None], np.inf).min(axis=1)


lemma_adieupec_gap = convex_descent_gap


def variance_slack(space: MetricSpace, mu: ProbMeasure, C: float, f) -> float:
    f = as_field(space, f)
    _, minus = slopes(space, f)
    return C / 2 * integrate(mu, minus ** 2) - variance(mu, f)


def theta_floor(theta_cost: CostFunction) -> float:
    """Largest a with theta(x) >= min(x^2, a^2) on the exponent grid."""
    x = EXPONENT_GRID
    th = np.asarray(theta_cost.alpha(x), dtype=float)
    below = th < x * x * (1 - 1e-12)
    if below[0]:
        raise ThetaBelowFloor(
            f"theta({x[0]:.1e}) = {th[0]:.3e} is below x^2 at the bottom of the grid"
        )
    if not below.any():
        return math.inf
    return math.sqrt(float(th[below].min()))


def poincare_check(space: MetricSpace, theta_cost: CostFunction, mu: ProbMeasure, C: float, f) -> float:
    """(C/2) times the integral of |grad^- f|^2 minus Var(f)."""
    theta_floor(theta_cost)
    return variance_slack(space, mu, C, f)


# ---------------------------------------------------------------------------
# hypercontractivity


@dataclass(frozen=True)
class HyperProfile:
    t: np.ndarray
    k: np.ndarray
    H: np.ndarray
    H0: float
    max_increase: float

    @property
    def nonincreasing(self) -> bool:
        return self.max_increase <= 1e-12 * (1 + float(np.abs(self.H).max(initial=0.0)))


def hyper_H(space, cost, mu, schedule, f, t: float) -> float:
    """log ||exp(Q_t f)||_{k(t)}."""
    return log_k_norm(mu, inf_convolution(space, cost, f, t), schedule.k(t))


def hypercontractivity_profile(space: MetricSpace, cost: CostFunction, mu: ProbMeasure,
                               params: ScheduleParams, f, t_grid=None) -> HyperProfile:
    f = as_field(space, f)
    t_grid = params.default_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    ks = np.array([params.k(t) for t in t_grid])
    Hs = np.array([log_k_norm(mu, inf_convolution(space, cost, f, t), k) for t, k in zip(t_grid, ks)])
    H0 = log_k_norm(mu, f, params.k(0.0))
    incr = float(np.max(np.diff(np.concatenate([[H0], Hs])), initial=0.0))
    return HyperProfile(t_grid, ks, Hs, H0, max(incr, 0.0))


def derivative_formula_H(space: MetricSpace, cost: CostFunction, mu: ProbMeasure,
                         schedule, f, t: float) -> float:
    """Right derivative of H(t) = log ||exp(Q_t f)||_{k(t)} from the entropy formula."""
    f = as_field(space, f)
    k, kp = schedule.k(t), schedule.k_prime(t)
    if not k > 0:
        raise NonPositiveExponent(t, k)
    if kp == 0:
        raise DegenerateSchedule(f"k'({t!r}) = 0; the formula divides by it")
    q = inf_convolution(space, cost, f, t)
    dq = dQ_dt_plus(space, cost, f, t)
    w = k * q
    shift, ent = entropy_exp_scaled(mu, w)
    s = mu.support
    drift = math.fsum(mu.weights[s] * dq[s] * np.exp(w[s] - shift))
    return kp / k ** 2 * ent + drift


# ---------------------------------------------------------------------------
# search machinery


def _coordinate_ascent(objective: Callable[[np.ndarray], float], x: np.ndarray, step: float):
    """Best-coordinate ascent with step halving."""
    best = objective(x)
    for _ in range(ASCENT_ITERS):
        top, top_x = best, None
        for i in range(len(x)):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] += sgn * step
                v = objective(y)
                if v > top:
                    top, top_x = v, y
        if top_x is None:
            step *= 0.5
            if step < ASCENT_MIN_STEP:
                break
            continue
        gain = top - best
        x, best = top_x, top
        if gain <= ASCENT_RTOL * abs(best):
            break
    return x, best


def _resolvable(f) -> bool:
    f = np.asarray(f, dtype=float)
    return float(f.max() - f.min()) >= OSCILLATION_FLOOR * (1.0 + float(np.abs(f).max()))


def _safe(v) -> float:
    v = float(v)
    return v if not math.isnan(v) else -math.inf


def _search(budget: int, seed: int, propose, objective, step_of):
    """Random starts, then ascent from the best few; returns (value, point)."""
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget!r}")
    rngs = restart_rngs(seed, budget)
    starts = map_ordered(lambda r: propose(rngs[r], r), budget)
    values = map_ordered(lambda r: _safe(objective(starts[r])), budget)
    ranked = sorted(range(budget), key=lambda r: (-values[r], r))
    ranked = [r for r in ranked if values[r] > -math.inf][:ASCENT_STARTS]
    refined = map_ordered(
        lambda j: _coordinate_ascent(lambda x: _safe(objective(x)), starts[ranked[j]],
                                     step_of(starts[ranked[j]])),
        len(ranked),
    )
    pool = [(values[r], starts[r]) for r in range(budget)] + [(v, x) for x, v in refined]
    i = argmax_lowest([v for v, _ in pool])
    if i < 0:
        return -math.inf, None
    return pool[i]


def random_field(space: MetricSpace, cost: CostFunction, rng: np.random.Generator, r: int) -> np.ndarray:
    """Member of the declared field family for restart r."""
    f = rng.standard_normal(space.n)
    amp = 10.0 ** rng.uniform(*AMPLITUDE_DECADES)
    t = SMOOTHING_TIMES[r % len(SMOOTHING_TIMES)]
    if t is not None:
        f = inf_convolution(space, cost, f, t)
    osc = float(f.max() - f.min())
    if osc > 0:
        f = (f - f.min()) * (amp / osc)
    if np.isfinite(cost.ell) and space.n > 1:
        plus, minus = slopes(space, f)
        top = float(max(plus.max(), minus.max()))
        if top > cost.ell:
            f = f * (0.999 * cost.ell / top)
    return f


def _field_step(f):
    return 0.25 * max(float(f.max() - f.min()), 1e-6)


def _report(name, value, witness, budget, seed, family=FAMILY_FIELDS, extra=None):
    if value == -math.inf or witness is None:
        return InequalityReport(name, 0.0, "lower_bound", None, budget, seed, family, True, extra or {})
    return InequalityReport(name, float(value), "lower_bound", witness, budget, seed, family, False, extra or {})


# ---------------------------------------------------------------------------
# estimators


def _lsi_objective(space, cost, mu):
    def objective(f):
        if not _resolvable(f):
            return -math.inf
        try:
            r = lsi_ratio(space, cost, mu, f)
        except FieldOutsideClass:
            return -math.inf
        return -math.inf if r.value is None else r.value
    return objective


def estimate_lsi_constant(space: MetricSpace, cost: CostFunction, mu: ProbMeasure,
                          budget: int, seed: int) -> InequalityReport:
    objective = _lsi_objective(space, cost, mu)
    value, f = _search(
        budget, seed, lambda rng, r: random_field(space, cost, rng, r), objective, _field_step
    )
    if f is None or value <= 0:
        # every ratio vanished or was 0/0: the entropy side is identically zero
        return InequalityReport("LSI", 0.0, "lower_bound", None if f is None else {"field": f.tolist()},
                                budget, seed, FAMILY_FIELDS, f is None)
    return _report("LSI", value, {"field": f.tolist()}, budget, seed)


def tp_ratio(c: np.ndarray, mu: ProbMeasure, nu: ProbMeasure) -> float:
    """T_c(mu, nu) / H(nu|mu); -inf below the entropy floor."""
    H = relative_entropy(nu, mu)
    if not (H >= ENTROPY_FLOOR and math.isfinite(H)):
        return -math.inf
    return ot_cost(c, mu, nu).cost / H


def _tilt(mu: ProbMeasure, z: np.ndarray) -> ProbMeasure:
    idx = np.flatnonzero(mu.support)
    logits = z + np.log(mu.weights[idx])
    w = np.exp(logits - logits.max())
    out = np.zeros(mu.n)
    out[idx] = w / math.fsum(w)
    return ProbMeasure(out)


def estimate_tp_constant(space: MetricSpace, p: float, mu: ProbMeasure, budget: int, seed: int,
                         cost: Optional[CostFunction] = None) -> InequalityReport:
    """Lower bound on the transport-entropy constant via exponential tilts of mu."""
    cost = power(p) if cost is None else cost
    c = cost.matrix(space.dist)
    idx = np.flatnonzero(mu.support)
    family = (
        "exponential tilts of mu with gaussian log-density, scale log-uniform in "
        f"[1e-3, 10], relative entropy >= {ENTROPY_FLOOR:g}, then coordinate ascent on the log-density"
    )
    if len(idx) < 2:
        return InequalityReport("Tp", 0.0, "lower_bound", None, budget, seed, family, False)

    def objective(z):
        return tp_ratio(c, mu, _tilt(mu, z))

    def propose(rng, r):
        return rng.standard_normal(len(idx)) * 10.0 ** rng.uniform(*AMPLITUDE_DECADES)

    value, z = _search(budget, seed, propose, objective, _field_step)
    if z is None:
        return InequalityReport("Tp", 0.0, "lower_bound", None, budget, seed, family, True)
    nu = _tilt(mu, z)
    return _report("Tp", value, {"measure": nu.weights.tolist()}, budget, seed, family)


def tau_lsi_bound(space: MetricSpace, p: float, mu: ProbMeasure, f) -> Tuple[float, float]:
    """Best (bound, lambda) over LAMBDA_GRID with bound = (1 - G/Ent) / lambda.

    Any admissible D must be at least this bound.
    """
    f = as_field(space, f)
    if not _resolvable(f):
        return -math.inf, math.nan
    shift, ent = entropy_exp_scaled(mu, f)
    if not ent > 0:
        return -math.inf, math.nan
    s = mu.support
    w = mu.weights[s] * np.exp(f[s] - shift)
    best, best_lam = -math.inf, math.nan
    for lam in LAMBDA_GRID:
        G = math.fsum(w * (f - q_lambda(space, p, f, lam))[s])
        bound = (1 - G / ent) / lam
        if bound > best:
            best, best_lam = bound, float(lam)
    return best, best_lam


def estimate_tau_constant(space: MetricSpace, p: float, mu: ProbMeasure, budget: int,
                          seed: int) -> InequalityReport:
    cost = power(p)
    value, f = _search(
        budget, seed, lambda rng, r: random_field(space, cost, rng, r),
        lambda f: tau_lsi_bound(space, p, mu, f)[0], _field_step,
    )
    family = FAMILY_FIELDS + f"; lambda on a log grid of {len(LAMBDA_GRID)} points in [1e-3, 1e3]"
    if f is None:
        return InequalityReport("TauLSI", 0.0, "lower_bound", None, budget, seed, family, True)
    _, lam = tau_lsi_bound(space, p, mu, f)
    return _report("TauLSI", value, {"field": f.tolist(), "lambda": lam}, budget, seed, family)


def restricted_lsi_bound(space: MetricSpace, p: float, mu: ProbMeasure, g,
                         variant: str = "minus_cgrad") -> Tuple[float, float, float]:
    """Best (bound, K, u) over K_GRID x U_GRID with bound = (1 - R) / (K u).

    R = (beta_p(u) - 1) G / (p K^(q-1) Ent) for f the Kc_p-convexification of g;
    any admissible E must be at least the bound.
    """
    g = as_field(space, g)
    q = p / (p - 1)
    s = mu.support
    bu = beta_p(U_GRID, p) - 1
    best = (-math.inf, math.nan, math.nan)
    for K in K_GRID:
        f = c_convexify(power(p, K).matrix(space.dist), g)
        if not _resolvable(f):
            continue
        shift, ent = entropy_exp_scaled(mu, f)
        if not ent > 0:
            continue
        grad = _restricted_gradient(space, p, K, f, variant)
        G = math.fsum(mu.weights[s] * grad[s] ** q * np.exp(f[s] - shift))
        R = bu * G / (p * K ** (q - 1) * ent)
        bounds = (1 - R) / (K * U_GRID)
        j = int(np.argmax(bounds))
        if bounds[j] > best[0]:
            best = (float(bounds[j]), float(K), float(U_GRID[j]))
    return best


def estimate_restricted_constant(space: MetricSpace, p: float, mu: ProbMeasure, budget: int,
                                 seed: int, variant: str = "minus_cgrad") -> InequalityReport:
    cost = power(p)
    value, g = _search(
        budget, seed, lambda rng, r: random_field(space, cost, rng, r),
        lambda g: restricted_lsi_bound(space, p, mu, g, variant)[0], _field_step,
    )
    family = (FAMILY_FIELDS + f"; K on a log grid of {len(K_GRID)} points in [1e-2, 1e2], "
              f"u - 1 on a log grid of {len(U_GRID)} points in [1e-3, 1e2]")
    if g is None:
        return InequalityReport("RestrictedLSI", 0.0, "lower_bound", None, budget, seed, family, True,
                                {"variant": variant})
    _, K, u = restricted_lsi_bound(space, p, mu, g, variant)
    return _report("RestrictedLSI", value, {"field": g.tolist(), "K": K, "u": u, "variant": variant},
                   budget, seed, family, {"variant": variant})


def estimate_poincare_constant(space: MetricSpace, mu: ProbMeasure, budget: int,
                               seed: int) -> InequalityReport:
    """Lower bound 2 Var(f) / integral |grad^- f|^2 on the Poincare constant."""
    cost = power(2)

    def objective(f):
        if not _resolvable(f):
            return -math.inf
        _, minus = slopes(space, f)
        den = integrate(mu, minus ** 2)
        return 2 * variance(mu, f) / den if den > 0 else -math.inf

    value, f = _search(budget, seed, lambda rng, r: random_field(space, cost, rng, r),
                       objective, _field_step)
    return _report("Poincare", value, None if f is None else {"field": f.tolist()}, budget, seed)


def replay_witness(report: InequalityReport, space: MetricSpace, mu: ProbMeasure,
                   cost: Optional[CostFunction] = None, p: Optional[float] = None) -> float:
    """Recompute an estimator's value from its witness."""
    w = report.witness
    if w is None:
        return 0.0
    if report.name == "LSI":
        return lsi_ratio(space, cost, mu, w["field"]).value
    if report.name == "Tp":
        c = (cost or power(p)).matrix(space.dist)
        return tp_ratio(c, mu, ProbMeasure(w["measure"]))
    if report.name == "TauLSI":
        return tau_lsi_bound(space, p, mu, w["field"])[0]
    if report.name == "RestrictedLSI":
        return restricted_lsi_bound(space, p, mu, w["field"], w["variant"])[0]
    if report.name == "Poincare":
        f = np.asarray(w["field"], dtype=float)
        _, minus = slopes(space, f)
        return 2 * variance(mu, f) / integrate(mu, minus ** 2)
    raise ValidationError(f"no replay rule for report {report.name!r}")


# ---------------------------------------------------------------------------
# two-point dense scans


def _two_point(space: MetricSpace):
    if space.n != 2:
        raise ValidationError("dense scans are defined for two-point spaces only")


def two_point_lsi_scan(space: MetricSpace, cost: CostFunction, mu: ProbMeasure,
                       lo: float = -5.0, hi: float = 5.0, step: float = 1e-3) -> InequalityReport:
    """Max of lsi_ratio over f = (0, s) on a dense grid of s.

    On two points the ratio only depends on f(1) - f(0), so this covers every
    field up to the grid resolution and range.
    """
    _two_point(space)
    grid = np.arange(round((hi - lo) / step) + 1) * step + lo
    best, best_s = -math.inf, None
    for s_ in grid:
        if s_ == 0:
            continue
        try:
            r = lsi_ratio(space, cost, mu, [0.0, s_])
        except FieldOutsideClass:
            continue
        if r.value is not None and r.value > best:
            best, best_s = r.value, float(s_)
    if best_s is None:
        return InequalityReport("LSI", 0.0, "upper_bound", None, len(grid), 0, "dense scan", True)
    return InequalityReport("LSI", best, "upper_bound", {"field": [0.0, best_s]}, len(grid), 0,
                            f"dense scan of f = (0, s), s in [{lo}, {hi}] step {step}")


def two_point_tp_scan(space: MetricSpace, p: float, mu: ProbMeasure, step: float = 1e-4,
                      cost: Optional[CostFunction] = None) -> InequalityReport:
    """Max of T/H over nu = (1 - q, q) on a dense grid of q in (0, 1)."""
    _two_point(space)
    cost = power(p) if cost is None else cost
    c = cost.matrix(space.dist)
    qs = np.arange(1, round(1 / step)) * step
    best, best_q, best_i = -math.inf, None, -1
    for i, q in enumerate(qs):
        nu = ProbMeasure([1 - q, q])
        v = tp_ratio(c, mu, nu)
        if v > best:
            best, best_q, best_i = v, float(q), i
    family = f"dense scan of nu = (1 - q, q), q step {step}, relative entropy >= {ENTROPY_FLOOR:g}"
    if best_q is None:
        return InequalityReport("Tp", 0.0, "upper_bound", None, len(qs), 0, family, True)
    # a maximiser next to an excluded point means the supremum lies off the grid
    excluded = [j for j in (best_i - 1, best_i + 1)
                if 0 <= j < len(qs) and tp_ratio(c, mu, ProbMeasure([1 - qs[j], qs[j]])) == -math.inf]
    extra = {"max_at_scan_edge": bool(excluded) or best_i in (0, len(qs) - 1)}
    return InequalityReport("Tp", best, "upper_bound", {"measure": [1 - best_q, best_q]}, len(qs), 0,
                            family, False, extra)


def _two_point_field_scan(space, bound_fn, lo=-5.0, hi=5.0, step=2e-2):
    grid = np.arange(round((hi - lo) / step) + 1) * step + lo
    best, best_s = -math.inf, None
    for s_ in grid:
        v = bound_fn([0.0, float(s_)])
        if v > best:
            best, best_s = v, float(s_)
    return best, best_s, len(grid)


# ---------------------------------------------------------------------------
# constant chain


@dataclass(frozen=True)
class ChainCheck:
    label: str
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class ChainAudit:
    F: InequalityReport
    E: InequalityReport
    D: InequalityReport
    C: InequalityReport
    kappa: float
    slack: float
    checks: Tuple[ChainCheck, ...]
    scans: dict

    @property
    def ordered(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_document(self) -> dict:
        return {
            "F": self.F.to_document(),
            "E": self.E.to_document(),
            "D": self.D.to_document(),
            "C": self.C.to_document(),
            "kappa": self.kappa,
            "slack": self.slack,
            "checks": [c.__dict__ for c in self.checks],
            "scans": self.scans,
            "ordered": self.ordered,
        }


def _with_scan(report: InequalityReport, value: float, witness: Optional[dict]) -> InequalityReport:
    """Keep whichever of the search and the scan found the larger witness."""
    if witness is None or value <= report.constant_estimate:
        return report
    return InequalityReport(report.name, float(value), "lower_bound", witness, report.trials,
                            report.seed, report.family + "; plus two-point dense scan",
                            False, report.extra)


def constant_chain_audit(space: MetricSpace, p: float, mu: ProbMeasure, budget: int, seed: int,
                         slack: float = CHAIN_SLACK) -> ChainAudit:
    """Estimate F, E, D, C and compare them along F <= E <= D <= C <= kappa_p F.

    The comparison is reported, never enforced: each estimate is a lower bound.
    """
    if not mu.support.sum() > 1:
        zero = lambda name: InequalityReport(name, 0.0, "lower_bound", None, budget, seed, "point mass")
        reps = [zero("RestrictedLSI"), zero("RestrictedLSI"), zero("TauLSI"), zero("Tp")]
    else:
        reps = [
            estimate_restricted_constant(space, p, mu, budget, seed, "plus_slope"),
            estimate_restricted_constant(space, p, mu, budget, seed, "minus_cgrad"),
            estimate_tau_constant(space, p, mu, budget, seed),
            estimate_tp_constant(space, p, mu, budget, seed),
        ]
    scans = {}
    if space.n == 2 and mu.support.sum() > 1:
        for i, variant in ((0, "plus_slope"), (1, "minus_cgrad")):
            v, s_, n = _two_point_field_scan(
                space, lambda g: restricted_lsi_bound(space, p, mu, g, variant)[0])
            scans[variant] = {"value": v, "s": s_, "points": n}
            if s_ is not None:
                _, K, u = restricted_lsi_bound(space, p, mu, [0.0, s_], variant)
                reps[i] = _with_scan(reps[i], v, {"field": [0.0, s_], "K": K, "u": u, "variant": variant})
        v, s_, n = _two_point_field_scan(space, lambda f: tau_lsi_bound(space, p, mu, f)[0])
        scans["tau"] = {"value": v, "s": s_, "points": n}
        if s_ is not None:
            reps[2] = _with_scan(reps[2], v, {"field": [0.0, s_], "lambda": tau_lsi_bound(space, p, mu, [0.0, s_])[1]})
        scan = two_point_tp_scan(space, p, mu)
        scans["tp"] = {"value": scan.constant_estimate, **scan.extra}
        reps[3] = _with_scan(reps[3], scan.constant_estimate, scan.witness)
    F, E, D, C = reps
    kap = kappa_p(p)
    one = 1 + slack
    values = [F.constant_estimate, E.constant_estimate, D.constant_estimate, C.constant_estimate]
    checks = (
        ChainCheck("F <= E", values[0], values[1], values[0] <= values[1] * one),
        ChainCheck("E <= D", values[1], values[2], values[1] <= values[2] * one),
        ChainCheck("D <= C", values[2], values[3], values[2] <= values[3] * one),
        ChainCheck("C <= kappa_p F", values[3], kap * values[0], values[3] <= kap * values[0] * one),
    )
    return ChainAudit(F, E, D, C, kap, slack, checks, scans)
