"""Gaussian kernel primitives and cross-width RKHS geometry."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from klms.kernels import (
    GaussianKernelSpec,
    RkhsContext,
    RkhsMembershipError,
    gaussian,
    grad_sigma,
    squared_distance,
)


def test_squared_distance_examples():
    assert squared_distance([0.0], [3.0]) == 9.0
    assert squared_distance([1.0, 2.0], [4.0, 6.0]) == 25.0
    assert squared_distance([1.5, -2.0], [1.5, -2.0]) == 0.0


def test_squared_distance_shape_mismatch():
    with pytest.raises(ValueError):
        squared_distance([1.0, 2.0], [1.0])


def test_gaussian_examples():
    assert gaussian([0.0], [3.0], 1.0) == pytest.approx(math.exp(-4.5), rel=1e-15)
    assert gaussian([1.0, 1.0], [2.0, 2.0], 1.0) == pytest.approx(
        math.exp(-1.0), rel=1e-15
    )
    assert gaussian([0.7, -0.3], [0.7, -0.3], 0.2) == 1.0


def test_gaussian_validation():
    for sigma in (0.0, -1.0):
        with pytest.raises(ValueError):
            gaussian([0.0], [1.0], sigma)
    with pytest.raises(ValueError):
        gaussian([0.0, 1.0], [0.0], 1.0)


@settings(deadline=None, derandomize=True)
@given(
    u=st.lists(st.floats(-5, 5), min_size=1, max_size=3),
    shift=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    sigma=st.floats(0.05, 10.0),
)
def test_gaussian_symmetry_and_bounds(u, shift, sigma):
    v = [a + b for a, b in zip(u, shift)]
    k_uv = gaussian(u, v, sigma)
    assert k_uv == gaussian(v, u, sigma)
    assert 0.0 <= k_uv <= 1.0  # exp underflows to 0 for far points
    assert k_uv <= gaussian(u, u, sigma)


def test_grad_sigma_zero_at_coincident_points():
    assert grad_sigma([1.0, 2.0], [1.0, 2.0], 0.7) == 0.0


def test_grad_sigma_matches_finite_differences():
    rng = np.random.default_rng(0)
    worst = 0.0
    for u, v, sigma in oracles.grad_cases(100, rng):
        exact = grad_sigma(u, v, sigma)
        approx = oracles.fd_grad_sigma(u, v, sigma)
        worst = max(worst, abs(exact - approx) / abs(exact))
    assert worst < 1e-5


def test_gaussian_kernel_spec():
    k = GaussianKernelSpec(sigma=1.0, dim=2)
    assert k([0.0, 0.0], [1.0, 1.0]) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert k([0.5, 0.5], [0.5, 0.5]) == 1.0
    with pytest.raises(ValueError):
        k([0.0], [1.0])
    with pytest.raises(ValueError):
        GaussianKernelSpec(sigma=0.0, dim=2)
    with pytest.raises(ValueError):
        GaussianKernelSpec(sigma=1.0, dim=0)


@pytest.mark.parametrize("sigma_star", [0.5, 0.8, 1.0, 2.0])
def test_membership_raised_exactly_at_bound(sigma_star):
    ctx = RkhsContext(sigma_star, 1)
    bound = math.sqrt(2.0) * sigma_star / 2.0
    assert ctx.membership_bound == pytest.approx(bound, rel=1e-15)
    just_above = bound * (1.0 + 1e-12)
    assert not ctx.contains(bound)
    assert ctx.contains(just_above)
    for bad in (bound, 0.5 * bound):
        with pytest.raises(RkhsMembershipError):
            ctx.norm_of(bad)
        with pytest.raises(RkhsMembershipError):
            ctx.inner([0.0], bad, [1.0], just_above)
        with pytest.raises(RkhsMembershipError):
            ctx.inner([0.0], just_above, [1.0], bad)
    # just above the bound all closed forms are defined
    assert ctx.norm_of(just_above) > 0.0
    assert ctx.inner([0.0], just_above, [0.0], just_above) > 0.0


def test_norm_frozen_value_and_quadrature():
    ctx = RkhsContext(0.8, 1)
    norm = ctx.norm_of(1.0)
    assert norm == pytest.approx(1.0353096914163802, rel=1e-12)
    by_quad = oracles.quad_inner([0.3], 1.0, [0.3], 1.0, 0.8)
    assert norm * norm == pytest.approx(by_quad, rel=1e-10)


def test_norm_is_center_independent_self_inner():
    ctx = RkhsContext(0.7, 2)
    for sigma in (0.6, 1.1, 3.0):
        n2 = ctx.norm_of(sigma) ** 2
        for point in ([0.0, 0.0], [2.0, -1.5]):
            assert ctx.inner(point, sigma, point, sigma) == pytest.approx(
                n2, rel=1e-12
            )


def test_inner_matches_quadrature_20_cases():
    rng = np.random.default_rng(1)
    worst = 0.0
    for u, su, v, sv, ss in oracles.inner_cases(20, rng):
        ctx = RkhsContext(ss, u.size)
        exact = ctx.inner(u, su, v, sv)
        by_quad = oracles.quad_inner(u, su, v, sv, ss)
        worst = max(worst, abs(exact - by_quad) / abs(by_quad))
    assert worst < 1e-8


def test_inner_reduces_to_reproducing_property():
    # equal widths at the reference width: <k(u,.), k(v,.)> = k(u, v)
    ctx = RkhsContext(0.9, 2)
    u = [0.2, -1.0]
    v = [1.3, 0.4]
    assert ctx.inner(u, 0.9, v, 0.9) == gaussian(u, v, 0.9)


def test_inner_symmetry_bitwise():
    ctx = RkhsContext(0.8, 2)
    u, v = [0.1, 2.0], [-0.7, 0.3]
    assert ctx.inner(u, 1.2, v, 0.9) == ctx.inner(v, 0.9, u, 1.2)


def test_inner_cauchy_schwarz():
    rng = np.random.default_rng(2)
    for u, su, v, sv, ss in oracles.inner_cases(50, rng):
        ctx = RkhsContext(ss, u.size)
        lhs = abs(ctx.inner(u, su, v, sv))
        rhs = ctx.norm_of(su) * ctx.norm_of(sv)
        assert lhs <= rhs * (1.0 + 1e-12)


def test_expansion_inner_matches_term_sum():
    rng = np.random.default_rng(3)
    ctx = RkhsContext(0.8, 2)
    centers = rng.uniform(-2, 2, (7, 2))
    sigmas = rng.uniform(0.7, 2.0, 7)
    coeffs = rng.normal(0.0, 1.0, 7)
    v = np.array([0.4, -0.2])
    sigma_v = 1.1
    expected = sum(
        c * ctx.inner(center, s, v, sigma_v)
        for center, s, c in zip(centers, sigmas, coeffs)
    )
    got = ctx.expansion_inner(centers, sigmas, coeffs, v, sigma_v)
    assert got == pytest.approx(expected, rel=1e-12)


def test_expansion_inner_empty_and_membership():
    ctx = RkhsContext(1.0, 1)
    assert ctx.expansion_inner(np.empty((0, 1)), [], [], [0.0], 1.0) == 0.0
    with pytest.raises(RkhsMembershipError):
        ctx.expansion_inner([[0.0]], [0.1], [1.0], [0.0], 1.0)
    with pytest.raises(RkhsMembershipError):
        ctx.expansion_inner([[0.0]], [1.0], [1.0], [0.0], 0.1)


def test_delta_norm_sq_zero_at_reference_width():
    for sigma_star, dim in ((0.8, 1), (1.3, 3)):
        ctx = RkhsContext(sigma_star, dim)
        assert abs(ctx.delta_norm_sq(sigma_star)) < 1e-14


def test_delta_norm_sq_center_independent_and_positive():
    ctx = RkhsContext(0.8, 2)
    base = ctx.delta_norm_sq(1.4)
    assert base > 0.0
    assert ctx.delta_norm_sq(1.4, u=[3.0, -2.0]) == base
    # consistency with the expanded form norm^2 - 2 <.,.> + 1
    point = np.zeros(2)
    expanded = (
        ctx.norm_of(1.4) ** 2 - 2.0 * ctx.inner(point, 1.4, point, 0.8) + 1.0
    )
    assert base == pytest.approx(expanded, rel=1e-12)


def test_context_validation():
    with pytest.raises(ValueError):
        RkhsContext(0.0, 1)
    with pytest.raises(ValueError):
        RkhsContext(1.0, 0)
