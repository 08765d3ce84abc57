"""The full invariant suite behind ``hopflax verify-paper``.

Each check returns rows of (label, passed, slack, cases).  A positive slack is
the margin by which the invariant held, a negative one the size of the
violation.  Nothing here reads the clock, so the rendered table is a pure
function of (scale, seed, beta_perturbation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from .constants import kappa_p, phi, theta_2_closed_form, theta_p
from .convexity import c_convexify, c_gradients, contact_distances, slopes, subdifferential
from .costs import CostFunction, power
from .hopf_lax import sup_convolution, time_derivatives, transform_argmax
from .inequalities import (
    ScheduleParams,
    constant_chain_audit,
    convex_descent_gap,
    derivative_formula_H,
    estimate_lsi_constant,
    hyper_H,
    hypercontractivity_profile,
    random_field,
)
from .measures import ProbMeasure, uniform
from .metric_space import MetricSpace, build_graph_space, build_grid_space, build_matrix_space
from .parallel import restart_rngs
from .transport import bobkov_gotze_gap, ot_cost, ot_oracle_1d

SCALES = ("smoke", "full")

# case counts per scale
SIZES: Dict[str, Dict[str, int]] = {
    "smoke": {"spaces": 5, "fields": 4, "times": 3, "convex": 100, "ot": 20, "descent": 50,
              "hyper": 10, "budget": 8, "grid_trials": 2},
    "full": {"spaces": 50, "fields": 10, "times": 5, "convex": 1000, "ot": 200, "descent": 500,
             "hyper": 100, "budget": 32, "grid_trials": 6},
}

FD_STEPS = (1e-3, 1e-4, 1e-5, 1e-6)
FD_TOL = 1e-4
IDEMPOTENCE_TOL = 1e-12
EXACT_TOL = 1e-9
ESTIMATOR_SLACK = 0.05


@dataclass(frozen=True)
class Row:
    label: str
    passed: bool
    slack: float
    cases: int


class _PerturbedBeta(CostFunction):
    """Mutation canary: a cost whose beta is off by a relative factor."""

    def __init__(self, base: CostFunction, eps: float):
        self.base, self.eps = base, eps
        self.kind, self.ell = base.kind, base.ell

    def alpha(self, h):
        return self.base.alpha(h)

    def alpha_prime(self, h):
        return self.base.alpha_prime(h)

    def beta(self, h):
        return (1 + self.eps) * np.asarray(self.base.beta(h), dtype=float)

    def matrix(self, dist, t: float = 1.0):
        return self.base.matrix(dist, t)


# ---------------------------------------------------------------------------
# fixtures


def two_point() -> MetricSpace:
    return build_matrix_space([[0.0, 1.0], [1.0, 0.0]])


def path5() -> MetricSpace:
    return build_graph_space([(i, i + 1, 1.0) for i in range(4)], 5)


def random_planar_space(rng: np.random.Generator, n_max: int = 50) -> MetricSpace:
    n = int(rng.integers(2, n_max + 1))
    pts = rng.random((n, 2))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    return build_matrix_space(d)


def bounded_curvature_field(coords: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Affine plus concave quadratic plus a small ripple; second derivatives stay below 1."""
    dim = coords.shape[1]
    b = rng.normal(size=dim)
    c = rng.random(dim)
    a = rng.uniform(0, 2)
    eps = rng.uniform(0, 0.02)
    k = rng.uniform(2, 6)
    return coords @ b - a * ((coords - c) ** 2).sum(1) / 2 + eps * np.sin(k * coords.sum(1))


# ---------------------------------------------------------------------------
# checks


def check_kappa_2(sizes, seed, eps) -> List[Row]:
    err = abs(kappa_p(2.0) - math.exp(2.0))
    return [Row("kappa_2 equals e^2", err <= 1e-6, 1e-6 - err, 1)]


def check_theta_2(sizes, seed, eps) -> List[Row]:
    x = np.arange(1, 100) / 100
    err = float(np.max(np.abs(theta_p(x, 2.0) - theta_2_closed_form(x)) / theta_2_closed_form(x)))
    return [Row("theta_2 generic solver vs closed form", err <= 1e-10, 1e-10 - err, len(x))]


def check_time_derivative(sizes, seed, eps) -> List[Row]:
    """Forward difference quotients of t -> P_t f against beta(maxdist / t)."""
    rng = restart_rngs(seed, 1)[0]
    worst, monotone, cases = 0.0, True, 0
    for _ in range(sizes["spaces"]):
        space = random_planar_space(rng)
        cost = power(float(rng.choice([1.5, 2.0, 3.0])))
        tested = _PerturbedBeta(cost, eps) if eps else cost
        for _ in range(sizes["fields"]):
            f = rng.normal(size=space.n)
            for t in rng.uniform(0.5, 8.0, size=sizes["times"]):
                d = time_derivatives(space, tested, f, t).dplus
                p0 = sup_convolution(space, cost, f, t)
                errs = [np.abs((sup_convolution(space, cost, f, t + h) - p0) / h - d) for h in FD_STEPS]
                monotone &= bool(np.all(np.diff(np.array(errs), axis=0) <= 1e-9))
                worst = max(worst, float(errs[-1].max()))
                cases += 1
    return [
        Row("P_t f time derivative equals beta(maxdist/t)", worst <= FD_TOL, FD_TOL - worst, cases),
        Row("P_t f difference quotient converges monotonically", monotone, 0.0 if monotone else -1.0, cases),
    ]


def _hj_run(dim, m, cost, f_of, ts):
    space = build_grid_space(dim, m, 1.0)
    f = f_of(space.coords)
    lows, resid = [], []
    for t in ts:
        P = sup_convolution(space, cost, f, t)
        D = time_derivatives(space, cost, f, t)
        plus, _ = slopes(space, P)
        r = D.dplus - cost.dual(plus)
        lows.append(float(r.min()))
        resid.append(float(np.abs(r).max()))
    tol = float(cost.alpha_prime(2 * space.diameter / min(ts))) * space.geodesic_mesh
    return min(lows) + tol, max(resid)


def check_hamilton_jacobi(sizes, seed, eps) -> List[Row]:
    """d/dt P_t f >= alpha*(|grad^+ P_t f|) on refining grids, equality residual shrinking."""
    rng = restart_rngs(seed, 2)[1]
    ts = (0.25, 0.5, 1.0)
    worst_slack, worst_ratio, cases = math.inf, 0.0, 0
    for _ in range(sizes["grid_trials"]):
        for dim, ms in ((1, (41, 81)), (2, (11, 21))):
            params = rng.integers(0, 2 ** 32)
            for p in (2.0, 3.0):
                cost = power(p)
                f_of = lambda X: bounded_curvature_field(X, np.random.default_rng(params))
                (s0, r0), (s1, r1) = (_hj_run(dim, m, cost, f_of, ts) for m in ms)
                worst_slack = min(worst_slack, s0, s1)
                worst_ratio = max(worst_ratio, r1 / r0 if r0 > 0 else 0.0)
                cases += 1
    return [
        Row("Hamilton-Jacobi inequality within mesh tolerance", worst_slack >= 0, worst_slack, cases),
        Row("Hamilton-Jacobi equality residual shrinks on refinement", worst_ratio < 1,
            1 - worst_ratio, cases),
    ]


def check_c_convexity(sizes, seed, eps) -> List[Row]:
    rng = restart_rngs(seed, 3)[2]
    idem, incl, nonempty = 0.0, True, True
    chain_plus, chain_minus = math.inf, math.inf
    for _ in range(sizes["convex"]):
        space = random_planar_space(rng, 30)
        cost = power(float(rng.choice([1.5, 2.0, 3.0])))
        c = cost.matrix(space.dist)
        g = rng.normal(size=space.n) * 10 ** rng.uniform(-2, 1)
        f = c_convexify(c, g)
        idem = max(idem, float(np.abs(c_convexify(c, f) - f).max()))
        sub = subdifferential(c, f)
        nonempty &= bool(sub.mask.any(axis=1).all())
        # P_c g is c-convex; its contact set m(x) comes from the maximisation over g
        pg = (g[None, :] - c).max(axis=1)
        m = transform_argmax(c, g)
        sub_pg = subdifferential(c, pg)
        incl &= bool(np.all(~m | sub_pg.mask))
        plus, minus, _ = c_gradients(space, cost, 1.0, pg)
        far, near = contact_distances(space, cost, g)
        chain_plus = min(chain_plus, float((plus - cost.alpha_prime(far)).min()))
        chain_minus = min(chain_minus, float((cost.alpha_prime(near) - minus).min()))
    n = sizes["convex"]
    return [
        Row("c-convex hull is idempotent", idem <= IDEMPOTENCE_TOL, IDEMPOTENCE_TOL - idem, n),
        Row("contact set lies in the c-subdifferential", incl, 0.0 if incl else -1.0, n),
        Row("c-subdifferential nonempty on c-convex fields", nonempty, 0.0 if nonempty else -1.0, n),
        Row("upper c-gradient dominates contact-set gradient", chain_plus >= -EXACT_TOL, chain_plus, n),
        Row("lower c-gradient below contact-set gradient", chain_minus >= -EXACT_TOL, chain_minus, n),
    ]


def check_transport(sizes, seed, eps) -> List[Row]:
    rng = restart_rngs(seed, 4)[3]
    err, gap = 0.0, 0.0
    for _ in range(sizes["ot"]):
        n = int(rng.integers(2, 51))
        x = np.sort(rng.random(n))
        x = x[np.concatenate([[True], np.diff(x) > 0])]
        n = len(x)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        a, b = rng.random(n), rng.random(n)
        a[rng.random(n) < 0.2] = 0.0
        a, b = a / a.sum() if a.sum() > 0 else np.full(n, 1 / n), b / b.sum()
        plan = ot_cost(np.abs(x[:, None] - x[None, :]) ** p / p, a, b)
        err = max(err, abs(plan.cost - ot_oracle_1d(x, p, a, b)))
        gap = max(gap, abs(plan.duality_gap))
    n = sizes["ot"]
    return [
        Row("transport LP equals quantile coupling on the line", err <= EXACT_TOL, EXACT_TOL - err, n),
        Row("transport duality gap closes", gap <= EXACT_TOL, EXACT_TOL - gap, n),
    ]


def check_convex_descent(sizes, seed, eps) -> List[Row]:
    """f - Q^lambda f <= K(beta_p(lambda/K) - 1) c_p(x, y) on the subdifferential."""
    rng = restart_rngs(seed, 5)[4]
    worst = math.inf
    for _ in range(sizes["descent"]):
        space = random_planar_space(rng, 30)
        p = float(rng.choice([2.0, 2.5, 3.0]))
        K = 10 ** rng.uniform(-2, 1)
        lam = K * (1 + 10 ** rng.uniform(-3, 2))
        g = rng.normal(size=space.n) * 10 ** rng.uniform(-2, 1)
        worst = min(worst, float(convex_descent_gap(space, p, K, lam, g).min()))
    return [Row("Kc_p-convex descent bound", worst >= -EXACT_TOL, worst, sizes["descent"])]


def _fixtures():
    return (("two-point", two_point()), ("5-point path", path5()))


def check_hypercontractivity(sizes, seed, eps) -> List[Row]:
    """H(t) = log ||exp(Q_t f)||_k(t) along the schedule built from the estimated constant."""
    cost = power(2.0)
    rows = []
    for name, space in _fixtures():
        mu = uniform(space.n)
        rep = estimate_lsi_constant(space, cost, mu, sizes["budget"], seed)
        params = ScheduleParams.from_cost(cost, rep.constant_estimate * (1 + ESTIMATOR_SLACK))
        rngs = restart_rngs(seed, sizes["hyper"])
        grid = params.default_grid()
        worst, fd = -math.inf, 0.0
        for r in range(sizes["hyper"]):
            f = random_field(space, cost, rngs[r], r)
            prof = hypercontractivity_profile(space, cost, mu, params, f, grid)
            worst = max(worst, prof.max_increase)
            t = float(grid[rngs[r].integers(len(grid))])
            h = 1e-6
            # central: the forward quotient carries h H''/2, which reaches 1e-3 at small t
            quotient = (hyper_H(space, cost, mu, params, f, t + h)
                        - hyper_H(space, cost, mu, params, f, t - h)) / (2 * h)
            fd = max(fd, abs(derivative_formula_H(space, cost, mu, params, f, t) - quotient))
        n = sizes["hyper"]
        rows.append(Row(f"hypercontractive H nonincreasing ({name})", worst <= 0, -worst, n))
        rows.append(Row(f"H right-derivative formula ({name})", fd <= FD_TOL, FD_TOL - fd, n))
    return rows


def check_dual_transport(sizes, seed, eps) -> List[Row]:
    """Bobkov-Gotze gap at the transport constant derived from the log-Sobolev estimate."""
    cost = power(2.0)
    prof = cost.exponents()
    rows = []
    for name, space in _fixtures():
        mu = uniform(space.n)
        rep = estimate_lsi_constant(space, cost, mu, sizes["budget"], seed)
        base = (prof.p_alpha - 1) * rep.constant_estimate
        A = max(base ** (prof.r_alpha - 1), base ** (prof.p_alpha - 1)) * (1 + ESTIMATOR_SLACK)
        rngs = restart_rngs(seed, sizes["budget"])
        pool = [random_field(space, cost, rngs[r], r) for r in range(sizes["budget"])]
        if rep.witness is not None:
            pool.append(np.asarray(rep.witness["field"], dtype=float))
        worst = max(bobkov_gotze_gap(space, cost, mu, A, f) for f in pool) if A > 0 else math.inf
        rows.append(Row(f"dual transport bound at derived constant ({name})", worst <= EXACT_TOL,
                        EXACT_TOL - worst, len(pool)))
    return rows


def check_constant_chain(sizes, seed, eps) -> List[Row]:
    audit = constant_chain_audit(two_point(), 2.0, uniform(2), sizes["budget"], seed, ESTIMATOR_SLACK)
    rows = []
    one = 1 + ESTIMATOR_SLACK
    for check in audit.checks:
        if check.label in ("C <= kappa_p F", "D <= C"):
            rows.append(Row(f"constant chain {check.label} (two-point)", check.holds,
                            check.rhs * one - check.lhs, 1))
    return rows


def check_phi_asymptotics(sizes, seed, eps) -> List[Row]:
    near_one = max(abs(phi(1 - 1e-4, p) - 1) for p in (2.0, 2.5, 3.0, 4.0))
    ratios = [phi(1e-6, p) * 1e-6 ** ((p - 2) / (p - 1)) / p ** (p / (p - 1)) for p in (2.5, 3.0, 4.0)]
    dev = max(abs(r - 1) for r in ratios)
    return [
        Row("phi tends to 1 at the right end", near_one <= 1e-2, 1e-2 - near_one, 4),
        Row("phi small-s asymptote", dev <= 0.1, 0.1 - dev, 3),
    ]


CHECKS: List[Callable] = [
    check_kappa_2,
    check_theta_2,
    check_time_derivative,
    check_hamilton_jacobi,
    check_c_convexity,
    check_transport,
    check_convex_descent,
    check_hypercontractivity,
    check_dual_transport,
    check_constant_chain,
    check_phi_asymptotics,
]


def verify_paper(scale: str = "smoke", seed: int = 0, beta_perturbation: float = 0.0) -> List[Row]:
    if scale not in SIZES:
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")
    sizes = SIZES[scale]
    rows: List[Row] = []
    for check in CHECKS:
        rows.extend(check(sizes, int(seed), float(beta_perturbation)))
    return rows


def render_table(rows: List[Row]) -> str:
    width = max(len(r.label) for r in rows)
    lines = [f"{'invariant':<{width}}  status  {'slack':>14}  cases"]
    for r in rows:
        lines.append(f"{r.label:<{width}}  {'pass' if r.passed else 'FAIL':<6}  {r.slack:>14.6e}  {r.cases}")
    passed = sum(r.passed for r in rows)
    lines.append(f"{passed}/{len(rows)} passed")
    return "\n".join(lines) + "\n"
