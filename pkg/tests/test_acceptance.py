"""Acceptance suite: one test per numbered criterion, each at its stated tolerance.

The terminal summary prints one PASS/FAIL line per criterion (see conftest.py).
"""

import os
import subprocess
import sys
import time

import numpy as np

from hopflax import kappa_p, phi
from hopflax.constants import theta_2_closed_form, theta_p
from hopflax.transport import ot_cost, ot_oracle_1d
from hopflax.verify import (
    SIZES,
    check_c_convexity,
    check_constant_chain,
    check_convex_descent,
    check_dual_transport,
    check_hamilton_jacobi,
    check_hypercontractivity,
    check_time_derivative,
    check_transport,
)

FULL = SIZES["full"]
SEED = 7


def _tag(record_property, n, title):
    record_property("criterion", n)
    record_property("title", title)


def _timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - start


def _assert_rows(rows):
    failed = [f"{r.label}: slack {r.slack:.3e}" for r in rows if not r.passed]
    assert not failed, "; ".join(failed)


def test_c01_kappa_2(record_property):
    _tag(record_property, 1, "kappa_2 = e^2 via the CLI, under 1 s")
    start = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "hopflax.cli", "kappa", "--p", "2"],
                         capture_output=True, text=True, check=True).stdout
    elapsed = time.perf_counter() - start
    assert abs(float(out.split()[-1]) - 7.38905609893) <= 1e-6
    assert abs(kappa_p(2.0) - 7.38905609893) <= 1e-6
    _, t_lib = _timed(kappa_p, 2.0)
    assert t_lib < 1.0 and elapsed < 5.0  # interpreter start-up dominates the subprocess time


def test_c02_theta_2_closed_form(record_property):
    _tag(record_property, 2, "theta_2 solver equals 4x/(1-x)^2 on 99 points, under 1 s")
    x = np.arange(1, 100) / 100
    vals, elapsed = _timed(theta_p, x, 2.0)
    closed = theta_2_closed_form(x)
    assert np.allclose(closed, 4 * x / (1 - x) ** 2, rtol=1e-15)
    assert np.max(np.abs(vals - closed) / closed) <= 1e-10
    assert elapsed < 1.0


def test_c03_time_derivative(record_property):
    _tag(record_property, 3, "P_t f right derivative equals beta(maxdist/t), under 30 s")
    rows, elapsed = _timed(check_time_derivative, FULL, SEED, 0.0)
    assert rows[0].cases == 50 * 10 * 5
    _assert_rows(rows)
    assert elapsed < 30.0


def test_c04_hamilton_jacobi(record_property):
    _tag(record_property, 4, "Hamilton-Jacobi inequality on refining grids, under 60 s")
    rows, elapsed = _timed(check_hamilton_jacobi, FULL, SEED, 0.0)
    _assert_rows(rows)
    assert elapsed < 60.0


def test_c05_c_convexity_calculus(record_property):
    _tag(record_property, 5, "c-convex hull idempotent, contact set inclusion, nonempty subdifferential")
    rows, elapsed = _timed(check_c_convexity, FULL, SEED, 0.0)
    assert all(r.cases == 1000 for r in rows)
    _assert_rows(rows[:3])
    assert elapsed < 30.0


def test_c06_gradient_chains(record_property):
    _tag(record_property, 6, "c-gradient chains through the contact set on 1000 cases")
    rows = check_c_convexity(FULL, SEED, 0.0)[3:]
    assert all(r.slack >= -1e-9 for r in rows), [r.slack for r in rows]
    _assert_rows(rows)


def test_c07_optimal_transport(record_property):
    _tag(record_property, 7, "transport LP vs quantile oracle, duality gap, n = 300 under 1 s")
    rows = check_transport(FULL, SEED, 0.0)
    assert all(r.cases == 200 for r in rows)
    _assert_rows(rows)
    rng = np.random.default_rng(SEED)
    x = np.sort(rng.random(300))
    a, b = rng.random(300), rng.random(300)
    a, b = a / a.sum(), b / b.sum()
    c = np.abs(x[:, None] - x[None, :]) ** 2 / 2
    plan, elapsed = _timed(ot_cost, c, a, b)
    assert abs(plan.cost - ot_oracle_1d(x, 2.0, a, b)) <= 1e-9
    assert abs(plan.duality_gap) <= 1e-9
    assert elapsed < 1.0


def test_c08_convex_descent(record_property):
    _tag(record_property, 8, "convex descent bound over 500 random configurations")
    rows = check_convex_descent(FULL, SEED, 0.0)
    assert rows[0].cases == 500
    _assert_rows(rows)


def test_c09_hypercontractivity(record_property):
    _tag(record_property, 9, "H(t) nonincreasing at the estimated constant; H' formula vs differences")
    rows = check_hypercontractivity(FULL, SEED, 0.0)
    assert all(r.cases == 100 for r in rows)
    _assert_rows(rows)


def test_c10_dual_transport(record_property):
    _tag(record_property, 10, "Bobkov-Gotze gap <= 1e-9 at the derived transport constant")
    _assert_rows(check_dual_transport(FULL, SEED, 0.0))


def test_c11_constant_chain(record_property):
    _tag(record_property, 11, "constant chain on two points: C <= e^2 F and D <= C within 5%")
    rows = check_constant_chain(FULL, SEED, 0.0)
    assert {r.label for r in rows} == {"constant chain C <= kappa_p F (two-point)",
                                       "constant chain D <= C (two-point)"}
    _assert_rows(rows)


def test_c12_phi_asymptotics(record_property):
    _tag(record_property, 12, "phi -> 1 at s -> 1 and the small-s asymptote")
    for p in (2.0, 2.5, 3.0, 4.0):
        assert abs(phi(1 - 1e-4, p) - 1) <= 1e-2
    for p in (2.5, 3.0, 4.0):
        s = 1e-6
        ratio = phi(s, p) / (p ** (p / (p - 1)) / s ** ((p - 2) / (p - 1)))
        assert 0.9 <= ratio <= 1.1


def _verify_full(threads):
    env = dict(os.environ, HOPFLAX_THREADS=str(threads))
    cmd = [sys.executable, "-m", "hopflax.cli", "verify-paper", "--scale", "full", "--seed", str(SEED)]
    return subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env)


def test_c13_determinism(record_property):
    _tag(record_property, 13, "verify-paper full seed 7 byte-identical across runs and thread counts")
    procs = [_verify_full(t) for t in (1, 1, 8)]
    outs = []
    for p in procs:
        out, err = p.communicate()
        assert p.returncode in (0, 1), err.decode()
        outs.append(out)
    assert outs[0] and outs[0] == outs[1] == outs[2]
