import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_space
from hopflax import (
    build_grid_space,
    c_convexify,
    c_gradient_minus,
    c_gradient_plus,
    is_c_convex,
    power,
    slope_minus,
    slope_plus,
    slopes,
    subdifferential,
)
from hopflax.convexity import c_gradients, contact_distances
from hopflax.errors import NotCConvex
from hopflax.hopf_lax import p_transform, transform_argmax

C_HALF = np.array([[0.0, 0.5], [0.5, 0.0]])


def test_two_point_examples():
    assert c_convexify(C_HALF, [0.0, 1.0]).tolist() == [0.0, 0.5]
    ok = is_c_convex(C_HALF, [0.0, 0.5])
    assert ok and ok.deviation == 0.0
    bad = is_c_convex(C_HALF, [0.0, 1.0])
    assert not bad and bad.deviation == 0.5
    assert is_c_convex(C_HALF, [2.0, 2.0])


def test_zero_cost_hull_is_the_minimum():
    g = np.array([0.4, -2.0, 1.0])
    assert c_convexify(np.zeros((3, 3)), g).tolist() == [-2.0] * 3


def test_subdifferential_examples():
    sub = subdifferential(C_HALF, [0.0, 0.5])
    assert sub.sets == ((0, 1), (1,)) and not sub.convexified
    const = subdifferential(np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float), [1.0, 1.0, 1.0])
    assert all(x in s for x, s in enumerate(const.sets))


def test_subdifferential_flags_or_rejects_nonconvex_input():
    sub = subdifferential(C_HALF, [0.0, 1.0])
    assert sub.convexified and sub.deviation == 0.5
    with pytest.raises(NotCConvex):
        subdifferential(C_HALF, [0.0, 1.0], strict=True)


def test_c_gradient_examples(two_point, quad):
    f = [0.0, 0.5]
    assert c_gradient_minus(two_point, quad, 1.0, f, 0) == 0.0
    assert c_gradient_plus(two_point, quad, 1.0, f, 0) == 1.0
    plus, minus, _ = c_gradients(two_point, quad, 1.0, [3.0, 3.0])
    assert minus.tolist() == [0.0, 0.0]


def test_slope_examples():
    space = build_grid_space(1, 101, 1.0)
    x = space.coords[:, 0]
    assert slope_plus(space, x ** 2, 50) == pytest.approx(1.01, rel=1e-12)
    assert slope_minus(space, x ** 2, 50) == pytest.approx(0.99, rel=1e-12)
    plus, minus = slopes(space, np.full(101, 2.0))
    assert not plus.any() and not minus.any()
    errs = []
    for m in (11, 101, 1001):
        s = build_grid_space(1, m, 1.0)
        errs.append(abs(slope_plus(s, s.coords[:, 0] ** 2, (m - 1) // 2) - 1.0))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 2e-3


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_hull_is_idempotent_below_and_contains_contact_sets(seed):
    rng = np.random.default_rng(seed)
    space = random_space(rng, 25)
    cost = power(float(rng.choice([1.5, 2.0, 3.0])))
    c = cost.matrix(space.dist)
    g = rng.normal(size=space.n) * 10 ** rng.uniform(-2, 1)
    f = c_convexify(c, g)
    assert np.all(f <= g + 1e-12)
    assert np.abs(c_convexify(c, f) - f).max() <= 1e-12
    assert is_c_convex(c, f)
    sub = subdifferential(c, f)
    assert sub.mask.any(axis=1).all()
    pg = p_transform(c, g)
    m = transform_argmax(c, g)
    assert np.all(~m | subdifferential(c, pg).mask)
    # contact-set gradients bracket the c-gradients
    plus, minus, _ = c_gradients(space, cost, 1.0, pg)
    far, near = contact_distances(space, cost, g)
    assert np.all(plus >= cost.alpha_prime(far) - 1e-9)
    assert np.all(minus <= cost.alpha_prime(near) + 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(5, 60))
def test_quadratic_hull_on_the_line_is_shifted_convex(seed, m):
    # f is c-convex for |x - y|^2 / 2 exactly when f + x^2/2 is convex
    rng = np.random.default_rng(seed)
    space = build_grid_space(1, m, float(rng.uniform(0.5, 5.0)))
    x = space.coords[:, 0]
    f = c_convexify(power(2.0).matrix(space.dist), rng.normal(size=m) * 3)
    assert np.all(np.diff(f + x * x / 2, 2) >= -1e-10)


def test_slopes_approach_contact_gradient_under_refinement():
    cost = power(2.0)
    gaps = []
    for m in (21, 41, 81, 161):
        space = build_grid_space(1, m, 1.0)
        x = space.coords[:, 0]
        g = np.sin(4 * x) - x ** 2
        pg = p_transform(cost.matrix(space.dist), g)
        far, _ = contact_distances(space, cost, g)
        plus, _ = slopes(space, pg)
        inner = slice(1, -1)
        gaps.append(float(np.abs(plus[inner] - cost.alpha_prime(far[inner])).max()))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1
