import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lntail import NotPositiveDefinite, BENCH_SIGMA
from lntail.numerics import (
    cholesky,
    log_std_normal_cdf,
    quad_form,
    row_sums_inverse,
    solve_spd,
    std_normal_cdf,
)

from conftest import random_spd


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)).lower, np.eye(3))


def test_cholesky_2x2_by_hand():
    L = cholesky([[4.0, 2.0], [2.0, 3.0]]).lower
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, math.sqrt(2.0)]], rtol=1e-15)


def test_cholesky_bench_matrix():
    L = cholesky(BENCH_SIGMA).lower
    h = math.sqrt(0.5)
    expected = [[1, 0, 0, 0], [2, 1, 0, 0], [2, 0, h, 0], [2, 0, 0, h]]
    np.testing.assert_allclose(L, expected, atol=1e-15)
    np.testing.assert_allclose(L @ L.T, BENCH_SIGMA, atol=1e-14)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite) as info:
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    assert info.value.pivot == 1


def test_cholesky_rejects_singular():
    with pytest.raises(NotPositiveDefinite):
        cholesky([[1.0, 1.0], [1.0, 1.0]])


def test_cholesky_reconstructs_random_spd():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        s = random_spd(rng, n)
        f = cholesky(s)
        assert np.all(np.diag(f.lower) > 0)
        worst = max(worst, float(np.max(np.abs(f.reconstruct() - s))))
    assert worst <= 1e-9


@pytest.mark.parametrize("sigma, rhs, expected", [
    (np.eye(2), [3.0, -1.0], [3.0, -1.0]),
    ([[4.0, 2.0], [2.0, 3.0]], [1.0, 0.0], [0.375, -0.25]),
])
def test_solve_spd_small(sigma, rhs, expected):
    np.testing.assert_allclose(solve_spd(sigma, rhs), expected, rtol=1e-14, atol=1e-15)


def test_solve_spd_bench_residual():
    s = np.array(BENCH_SIGMA)
    a = solve_spd(s, np.ones(4))
    assert np.max(np.abs(s @ a - 1.0)) <= 1e-8 * 2.0
    np.testing.assert_allclose(a, row_sums_inverse(s))


@pytest.mark.parametrize("sigma, expected", [
    (np.eye(3), [1.0, 1.0, 1.0]),
    ([[2.0, 1.0], [1.0, 2.0]], [1 / 3, 1 / 3]),
    (np.diag([1.0, 4.0]), [1.0, 0.25]),
])
def test_row_sums_inverse(sigma, expected):
    np.testing.assert_allclose(row_sums_inverse(sigma), expected, rtol=1e-14)


def test_quad_form_basics():
    assert quad_form(np.eye(3), np.zeros(3)) == 0.0
    v = np.array([1.0, -2.0, 0.5])
    assert quad_form(np.eye(3), v) == pytest.approx(v @ v, rel=1e-15)


def test_quad_form_matches_inverse():
    rng = np.random.default_rng(3)
    s = random_spd(rng, 4)
    v = rng.standard_normal(4)
    assert quad_form(s, v) == pytest.approx(v @ np.linalg.solve(s, v), rel=1e-10)


def test_normal_cdf_points():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(-1.96) == pytest.approx(0.024997895148220436, abs=1e-15)


def _log_phi_series(x, terms=8):
    # Mills-ratio asymptotic series, independent of any erfc routine.
    s, term = 1.0, 1.0
    for k in range(1, terms):
        term *= -(2 * k - 1) / (x * x)
        s += term
    return -0.5 * x * x - math.log(-x) - 0.5 * math.log(2 * math.pi) + math.log(s)


def test_log_normal_cdf_deep_tail():
    # True value -75.410673...; Phi(-12) = 1.7765e-33.
    assert log_std_normal_cdf(-12.0) == pytest.approx(-75.41067300156880, rel=1e-12)
    assert log_std_normal_cdf(-12.0) == pytest.approx(_log_phi_series(-12.0), rel=1e-10)


@pytest.mark.parametrize("x", [-8.0, -8.5, -10.0, -20.0, -38.0, -60.0, -200.0])
def test_log_normal_cdf_tail_vs_mpmath(x):
    mp.mp.dps = 50
    ref = float(mp.log(mp.ncdf(x)))
    assert log_std_normal_cdf(x) == pytest.approx(ref, rel=1e-10)


def test_log_normal_cdf_no_underflow():
    assert np.isfinite(log_std_normal_cdf(-1000.0))
    assert std_normal_cdf(-1000.0) == 0.0


def test_log_cdf_vectorised():
    xs = np.array([-30.0, -1.0, 0.0, 3.0])
    out = log_std_normal_cdf(xs)
    assert out.shape == (4,)
    assert out[2] == pytest.approx(math.log(0.5), rel=1e-15)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-8.0, max_value=8.0))
def test_log_cdf_consistent(x):
    assert math.exp(log_std_normal_cdf(x)) == pytest.approx(std_normal_cdf(x), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-8.0, max_value=8.0))
def test_cdf_symmetry(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-14


@pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
def test_cdf_absolute_error(x):
    mp.mp.dps = 30
    assert abs(std_normal_cdf(x) - float(mp.ncdf(x))) <= 1e-14


def test_cdf_monotone():
    grid = np.linspace(-8, 8, 10_000)
    # Near x = 8 neighbouring values of Phi round to the same double; the log
    # keeps the resolution through log1p, so strictness is checked there.
    assert np.all(np.diff(std_normal_cdf(grid)) >= 0)
    assert np.all(np.diff(log_std_normal_cdf(grid)) > 0)
