import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import lntail as lt
from lntail import (
    AssumptionViolated,
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    NotSymmetric,
)


def test_scalar_problem():
    p = lt.validate_problem([0.0], [[1.0]])
    assert p.dim == 1
    np.testing.assert_array_equal(p.chol.lower, [[1.0]])
    np.testing.assert_array_equal(p.row_sums, [1.0])


def test_bench_problem_invariants(bench):
    s = np.array(lt.BENCH_SIGMA)
    assert bench.dim == 4
    L = bench.chol.lower
    assert np.max(np.abs(L @ L.T - s)) <= 1e-10 * np.max(np.abs(s))
    np.testing.assert_allclose(s @ bench.sigma_inv, np.eye(4), atol=1e-8)
    np.testing.assert_allclose(s @ bench.row_sums, np.ones(4), atol=1e-8)


def test_problem_is_read_only(bench):
    with pytest.raises(ValueError):
        bench.mu[0] = 1.0


@pytest.mark.parametrize("mu, sigma, exc", [
    ([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], NotPositiveDefinite),
    ([0.0, 0.0], [[1.0, 0.1], [0.0, 1.0]], NotSymmetric),
    ([0.0], [[1.0, 0.0], [0.0, 1.0]], DimensionMismatch),
    ([], [[1.0]], DimensionMismatch),
])
def test_validation_errors(mu, sigma, exc):
    with pytest.raises(exc):
        lt.validate_problem(mu, sigma)


def test_bench_dominance(bench_report):
    r = bench_report
    assert r.holds and r.index == 0
    assert r.others == (1, 2, 3)
    np.testing.assert_allclose(r.a, [1.0, 1.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(r.c, [math.exp(-4)] * 3, rtol=1e-14)
    assert r.i0(0.1) == 1  # all tied, smallest index


def test_identity_has_no_dominant_component():
    r = lt.check_assumption_a(lt.validate_problem([0, 0, 0], np.eye(3)))
    assert not r.holds and r.index is None


def test_scalar_dominance_is_vacuous():
    r = lt.check_assumption_a(lt.validate_problem([1.0], [[2.0]]))
    assert r.holds and r.index == 0 and r.others == ()
    assert r.i0(0.5) is None


def test_ties_do_not_count_as_dominance():
    r = lt.check_assumption_a(lt.validate_problem([0, 0], [[1.0, 1.0], [1.0, 2.0]]))
    assert not r.holds


def test_dominant_index_need_not_be_first():
    s = np.array([[5.0, 2.0, 4.0], [2.0, 1.0, 1.5], [4.0, 1.5, 4.5]])
    r = lt.check_assumption_a(lt.validate_problem([0, 1, 2], s))
    assert r.holds and r.index == 1
    np.testing.assert_allclose(r.a, [1.0, 0.5])
    np.testing.assert_allclose(r.c, [math.exp(0 - 2 * 1), math.exp(2 - 1.5 * 1)])


def test_i0_depends_on_gamma():
    s = np.array([[1.0, 1.5, 3.0], [1.5, 4.0, 4.5], [3.0, 4.5, 12.0]])
    p = lt.validate_problem([0.0, 0.0, 5.0], s)
    r = lt.check_assumption_a(p)
    # a = (0.5, 2), c = (1, e^5): the steeper term wins only for larger gamma.
    assert r.i0(1e-6) == 1
    assert r.i0(0.9) == 2


def test_random_dominant_matrices_have_positive_a():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        b = rng.standard_normal((n - 1, n + 1))
        inner = b @ b.T / (n + 1) + 0.5 * np.eye(n - 1)
        # Rows of the form (v, v*1 + inner) with v small: Sigma_11 = v < Sigma_1j = v + ...
        v = float(rng.uniform(0.05, 0.3))
        s = np.empty((n, n))
        s[0, 0] = v
        s[0, 1:] = s[1:, 0] = v * (1.0 + rng.uniform(0.2, 1.0, n - 1))
        s[1:, 1:] = inner + np.outer(s[1:, 0], s[1:, 0]) / v
        p = lt.validate_problem(rng.normal(size=n), s)
        r = lt.check_assumption_a(p)
        assert r.holds and r.index == 0
        assert np.all(r.a > 0)


def test_alpha_asymptotic_bench(bench, bench_report):
    g = math.exp(-2)
    assert lt.alpha_asymptotic(bench, bench_report, g) == pytest.approx(3.0379414249116427e-9, rel=1e-12)
    assert lt.log_alpha_asymptotic(bench, bench_report, g) == pytest.approx(-19.612085713764618, rel=1e-13)
    ratio = lt.alpha_asymptotic(bench, bench_report, g) / lt.std_normal_cdf(-6.0)
    assert ratio == pytest.approx(3.0792413022722995, rel=1e-10)


def test_alpha_asymptotic_scalar():
    p = lt.validate_problem([0.0], [[1.0]])
    r = lt.check_assumption_a(p)
    assert lt.alpha_asymptotic(p, r, math.exp(-1)) == pytest.approx(0.24197072451914337, rel=1e-13)


def test_alpha_asymptotic_errors(bench, bench_report):
    with pytest.raises(DomainError):
        lt.alpha_asymptotic(bench, bench_report, 1.0)
    with pytest.raises(DomainError):
        lt.alpha_asymptotic(bench, bench_report, 0.0)
    p = lt.validate_problem([0, 0], np.eye(2))
    with pytest.raises(AssumptionViolated):
        lt.alpha_asymptotic(p, lt.check_assumption_a(p), 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-40.0, max_value=-0.05))
def test_alpha_asymptotic_increasing(log_gamma):
    p = lt.validate_problem(lt.BENCH_MU, lt.BENCH_SIGMA)
    r = lt.check_assumption_a(p)
    h = 1e-6
    lo = lt.log_alpha_asymptotic(p, r, math.exp(log_gamma - h))
    hi = lt.log_alpha_asymptotic(p, r, math.exp(log_gamma + h))
    assert hi > lo
