import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopflax import a_p, beta_p, ell_schedule, kappa_p, phi, theta_p
from hopflax.constants import (
    GL_NODES,
    integrate_phi,
    psi_p,
    stationarity_residual,
    theta_2_closed_form,
)
from hopflax.errors import TOutOfRange, UOutOfRange, ValidationError, XOutOfRange

# 20-digit reference values from mpmath (findroot for the stationary point, quad for the integral)
BETA_3_AT_8 = 2.3929557958354906441
THETA_3_AT_QUARTER = 16.944271909999158786
KAPPA_3 = 90.0171313005218


def test_beta_examples():
    assert beta_p(4.0, 2.0) == pytest.approx(4 / 3, rel=1e-15)
    assert beta_p(2.0, 2.0) == pytest.approx(2.0, rel=1e-15)
    assert beta_p(8.0, 3.0) == pytest.approx(BETA_3_AT_8, rel=1e-14)


def test_beta_limits():
    assert beta_p(1 + 1e-12, 3.0) > 1e20
    assert beta_p(1e12, 2.5) == pytest.approx(1.0, abs=1e-7)
    assert np.all(np.diff(beta_p(np.linspace(1.01, 50, 200), 3.0)) < 0)


def test_theta_examples():
    assert theta_p(0.5, 2.0) == pytest.approx(8.0, rel=1e-12)
    assert theta_p(0.9, 2.0) == pytest.approx(360.0, rel=1e-12)
    assert theta_p(0.25, 3.0) == pytest.approx(THETA_3_AT_QUARTER, rel=1e-12)


def test_theta_3_matches_dense_scan():
    x, p = 0.25, 3.0
    u = 1 + np.arange(1, 3_000_000) * 1e-6
    scan = float(((beta_p(u, p) - 1) / (1 - x * u)).min())
    value = theta_p(x, p)
    assert value <= scan and scan - value <= 1e-8


def test_theta_2_near_one_keeps_relative_accuracy():
    x = np.array([0.99, 0.999, 0.999999])
    assert np.allclose(theta_p(x, 2.0), theta_2_closed_form(x), rtol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6), st.floats(2.0, 8.0))
def test_stationary_point_solves_first_order_condition(x, p):
    assert abs(stationarity_residual(x, p)) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.95), st.floats(2.0, 6.0))
def test_theta_is_a_lower_bound_attained_on_a_scan(x, p):
    value = theta_p(x, p)
    u = 1 + np.geomspace(1e-9, 1 / x - 1, 20001)[:-1]
    ratios = (beta_p(u, p) - 1) / (1 - x * u)
    assert ratios.min() >= value * (1 - 1e-12)
    assert ratios.min() <= value * (1 + 1e-3)


def test_phi_examples():
    assert phi(0.5, 2.0) == pytest.approx(16 / 9, rel=1e-12)
    s = np.linspace(0.01, 0.99, 99)
    assert np.allclose(phi(s, 2.0), 4 / (1 + s) ** 2, rtol=1e-12)


def test_kappa_examples():
    assert abs(kappa_p(2.0) - math.exp(2.0)) <= 1e-6
    assert kappa_p(3.0) == pytest.approx(KAPPA_3, rel=1e-9)
    assert np.all(np.diff([kappa_p(p) for p in (2.0, 2.5, 3.0, 4.0)]) > 0)


def test_kappa_3_is_stable_under_refinement():
    coarse = integrate_phi(1.0, 3.0, tol=1e-8)
    fine = integrate_phi(1.0, 3.0, tol=1e-12)
    assert abs(coarse - fine) <= 1e-7
    assert len(GL_NODES) == 64


def test_ell_schedule_endpoints():
    for p in (2.0, 3.0):
        top = ell_schedule(p, 1.0)
        assert top.v == 0.0 and top.ell == 0.0
        ap = a_p(p)
        bottom = ell_schedule(p, ap)
        assert bottom.v == pytest.approx(1.0, abs=1e-9)
        assert bottom.ell == pytest.approx(ap ** (p - 1), rel=1e-8)
        assert 2.5 / bottom.ell == pytest.approx(2.5 * kappa_p(p), rel=1e-8)
    assert a_p(2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_ell_schedule_solves_its_ode():
    # Psi_p(v(t)) = -ln t, so v'(t) = -(p - 1) / (t phi(v))
    p, h = 3.0, 1e-5
    for t in (0.2, 0.5, 0.8):
        fd = (ell_schedule(p, t + h).v - ell_schedule(p, t - h).v) / (2 * h)
        v = ell_schedule(p, t).v
        assert fd == pytest.approx(-(p - 1) / (t * phi(v, p)), abs=1e-5)
    assert psi_p(1.0, p) == pytest.approx(math.log(kappa_p(p)) / (p - 1), rel=1e-12)


def test_errors():
    with pytest.raises(UOutOfRange):
        beta_p(1.0, 2.0)
    with pytest.raises(ValidationError):
        beta_p(2.0, 1.5)
    with pytest.raises(XOutOfRange):
        theta_p(1.0, 2.0)
    with pytest.raises(XOutOfRange):
        phi(0.0, 3.0)
    with pytest.raises(TOutOfRange):
        ell_schedule(2.0, 0.01)
