import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopflax import cost_from_document, linear_capped, power, tabulated
from hopflax.costs import CostFunction, beta, exponents, legendre_dual
from hopflax.errors import DualDiverges, NotDelta2, ValidationError

H = np.linspace(0, 5, 501)


def _kinked_samples():
    h = np.concatenate([np.linspace(0, 1, 11), [2.0, 10.0, 1e3, 1e6]])
    return np.column_stack([h, np.where(h <= 1, h * h / 2, h - 0.5)])


COSTS = [power(1.5), power(2), power(3), power(2, scale=0.3), linear_capped(1.0),
         tabulated(_kinked_samples())]


def test_dual_examples():
    assert legendre_dual(power(2), 2.0) == pytest.approx(2.0, rel=1e-15)
    assert legendre_dual(power(3), 1.0) == pytest.approx(2 / 3, rel=1e-15)
    for c in COSTS:
        assert legendre_dual(c, 0.0) == 0.0


def test_beta_examples():
    assert beta(power(2), 2.0) == pytest.approx(2.0, rel=1e-15)
    assert beta(power(3), 1.0) == pytest.approx(2 / 3, rel=1e-15)
    for c in COSTS:
        assert float(beta(c, 0.0)) == 0.0


def test_power_is_exact():
    c = power(2.5)
    assert np.array_equal(c.alpha(H), H ** 2.5 / 2.5)


def test_exponents_power():
    prof = exponents(power(2))
    assert (prof.r_alpha, prof.p_alpha, prof.delta2_constant) == (2.0, 2.0, 4.0)
    prof = exponents(power(3.5))
    assert prof.r_alpha == prof.p_alpha == 3.5
    assert prof.delta2_constant == 2 ** 3.5


def test_exponents_custom_kinked_cost():
    c = tabulated(_kinked_samples())
    prof = exponents(c)
    assert prof.estimated and len(prof.grid) >= 10 ** 4
    assert prof.r_alpha == pytest.approx(1.0, abs=1e-6)
    assert c.ell == pytest.approx(1.0, abs=1e-6) and c.ell_truncated


def test_linear_capped_exponents_match_grid():
    exact = exponents(linear_capped(1.0))
    grid = CostFunction.exponents(linear_capped(1.0))
    assert grid.r_alpha == pytest.approx(exact.r_alpha, abs=1e-5)
    assert grid.p_alpha == pytest.approx(exact.p_alpha, abs=1e-12)
    assert grid.delta2_constant == pytest.approx(exact.delta2_constant, abs=1e-12)


def test_dual_diverges_above_ell():
    with pytest.raises(DualDiverges):
        legendre_dual(linear_capped(1.0), 1.5)
    with pytest.raises(DualDiverges):
        legendre_dual(power(1.0), 2.0)


class _Exponential(CostFunction):
    def alpha(self, h):
        return np.expm1(h) - h

    def alpha_prime(self, h):
        return np.expm1(h)


def test_not_delta2():
    with pytest.raises(NotDelta2):
        exponents(_Exponential())


@pytest.mark.parametrize("c", COSTS, ids=repr)
def test_convex_increasing_on_grid(c):
    a = np.asarray(c.alpha(H))
    ap = np.asarray(c.alpha_prime(H))
    assert a[0] == 0
    assert np.all(np.diff(a) >= -1e-12)
    assert np.all(np.diff(a, 2) >= -1e-10)
    assert np.all(ap >= 0) and np.all(np.diff(ap) >= -1e-12)
    assert np.all(np.diff(np.asarray(c.beta(H))) >= -1e-12)


@pytest.mark.parametrize("c", COSTS, ids=repr)
def test_alpha_prime_matches_finite_differences(c):
    h = np.linspace(0.05, 4.95, 50)
    fd = (c.alpha(h + 1e-6) - c.alpha(h - 1e-6)) / 2e-6
    assert np.allclose(fd, c.alpha_prime(h), atol=1e-6)


@pytest.mark.parametrize("c", COSTS, ids=repr)
def test_fenchel_young(c):
    h = np.linspace(0, 3, 31)
    us = np.linspace(0, min(c.ell, 4.0), 17)
    for u in us:
        a_star = c.legendre_dual(u)
        assert np.all(h * u <= c.alpha(h) + a_star + 1e-9)
    # equality at u = alpha'(h), i.e. beta(h) = alpha*(alpha'(h))
    for hh in h:
        u = float(c.alpha_prime(hh))
        if u <= c.ell:
            assert c.legendre_dual(u) == pytest.approx(float(c.beta(hh)), abs=1e-9)


def test_ternary_search_agrees_with_closed_form():
    c = power(3)
    for u in (0.1, 0.7, 2.0, 9.0):
        assert CostFunction.legendre_dual(c, u) == pytest.approx(c.legendre_dual(u), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.2, 6.0), st.floats(0.0, 50.0))
def test_double_dual_is_identity_for_power(p, h):
    c = power(p)
    q = p / (p - 1)
    dual = power(q)  # alpha*(u) = u^q / q is itself a power cost
    assert dual.legendre_dual(h) == pytest.approx(float(c.alpha(h)), rel=1e-10, abs=1e-300)
    assert c.legendre_dual(h) == pytest.approx(float(dual.alpha(h)), rel=1e-10, abs=1e-300)


def test_inverse():
    c = power(2)
    assert c.inverse(2.0) == pytest.approx(2.0, rel=1e-12)
    assert tabulated(_kinked_samples()).inverse(1.5) == pytest.approx(2.0, rel=1e-12)


def test_tabulated_reproduces_samples_and_rejects_concave():
    s = _kinked_samples()
    c = tabulated(s)
    assert np.allclose(c.alpha(s[:, 0]), s[:, 1], rtol=1e-14, atol=0)
    with pytest.raises(ValidationError):
        tabulated([[0, 0], [1, 1], [2, 1.5]])


def test_documents_round_trip():
    for c in (power(2), power(3, scale=2.0), linear_capped(0.5), tabulated(_kinked_samples())):
        back = cost_from_document(c.to_document())
        assert np.array_equal(back.alpha(H), c.alpha(H))


def test_scaled_cost():
    c = linear_capped(1.0).scaled(3.0)
    assert float(c.alpha(2.0)) == 3 * 1.5
    assert c.ell == 3.0
    assert c.legendre_dual(1.5) == pytest.approx(3 * 0.5 * 0.5 ** 2)
    assert math.isinf(power(2).scaled(2).ell)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0.05, 2.0), st.sampled_from([0.0, 0.0, 0.1, 0.5, 2.0])),
                min_size=1, max_size=8))
def test_tabulated_is_convex_and_continuous(steps):
    # random convex data: widths and slope increments, repeated slopes give affine runs
    widths = np.array([w for w, _ in steps])
    slopes = 0.2 + np.cumsum([inc for _, inc in steps])
    h = np.concatenate([[0.0], np.cumsum(widths)])
    a = np.concatenate([[0.0], np.cumsum(widths * slopes)])
    c = tabulated(np.column_stack([h, a]))
    assert np.allclose(c.alpha(h), a, rtol=1e-12, atol=1e-12)
    # no jumps in alpha at the samples
    eps = 1e-9
    assert np.allclose(c.alpha(h[1:] - eps), a[1:], atol=1e-8)
    assert np.allclose(c.alpha(h + eps), a, atol=1e-8)
    grid = np.linspace(0, h[-1] * 1.2, 2001)
    vals = np.asarray(c.alpha(grid))
    assert np.all(np.diff(vals, 2) >= -1e-10)
    assert np.all(np.diff(np.asarray(c.alpha_prime(grid))) >= -1e-12)
    # alpha' integrates back to alpha
    mid = 0.5 * (grid[1:] + grid[:-1])
    integral = np.concatenate([[0.0], np.cumsum(np.asarray(c.alpha_prime(mid)) * np.diff(grid))])
    # midpoint rule is exact on linear pieces; each jump in alpha' costs at most dx * jump
    dx = grid[1] - grid[0]
    assert np.allclose(integral, vals, atol=dx * float(c.alpha_prime(grid[-1])) + 1e-12)
