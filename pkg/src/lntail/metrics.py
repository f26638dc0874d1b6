"""Efficiency metrics and diagnostics for the left-tail estimators."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateValue
from .model import alpha_asymptotic
from .numerics import solve_spd
from .montecarlo import (
    _accumulate,
    _require_dominant_plan,
    _sample_cov,
    control_variate_mean,
    l4_indicator_closed_form,
    log_sum_exp_rows,
    normal_interval,
    rho_from_moments,
    z_second_moment_closed_form,
)

LOW_COUNT = 100


def squared_cv(e):
    """Per-sample variance over the squared estimate.

    Raises :class:`DegenerateValue` if the estimate is zero (callers that
    tabulate results report ``inf``).
    """
    if e.value == 0:
        raise DegenerateValue("estimate is zero; squared coefficient of variation undefined")
    return e.variance / (e.value * e.value)


def variance_reduction_ratio(var_is, var_iscv):
    if not var_iscv > 0:
        raise DegenerateValue("variance of the control-variate estimator is zero")
    return var_is / var_iscv


def correlation(t, z):
    """Pearson correlation of two paired samples, clamped to ``[-1, 1]``."""
    var_t, var_z, cov_tz = _sample_cov(t, z)
    return rho_from_moments(var_t, var_z, cov_tz)


def confidence_interval(e, level=0.95):
    """Normal-approximation interval; the low end is floored at 0 for probabilities."""
    return normal_interval(e.value, e.variance, e.m, level, floor=0.0)


def second_moment_log_ratio(e):
    """``log E[T^2] / log alpha``; tends to 2 from below for asymptotically optimal IS."""
    if not (0 < e.value < 1 and e.second_moment > 0):
        return math.nan
    return math.log(e.second_moment) / math.log(e.value)


@dataclass(frozen=True)
class EfficiencyRow:
    gamma: float
    cv2_is: float
    cv2_iscv: float
    cv2_iscv_star: float
    rho_hat: float
    beta_hat: float
    xi_fixed: float
    xi_estimated: float
    p1_minus_p2_hat: float
    alpha_asymptotic: float
    log_ratio_is: float = math.nan


def _safe(fn, *args):
    try:
        return fn(*args)
    except (DegenerateValue, ArithmeticError, ValueError):
        return math.inf if fn is squared_cv else math.nan


def efficiency_row(p, report, gamma, is_est=None, fixed_est=None, star_est=None):
    """Collect CV^2, xi, rho and beta for one threshold.

    ``xi`` values use ``var(T)`` from the same paired batch as the CV estimate.
    """
    nan = math.nan
    cv2_is = _safe(squared_cv, is_est) if is_est is not None else nan
    cv2_fixed = _safe(squared_cv, fixed_est) if fixed_est is not None else nan
    cv2_star = _safe(squared_cv, star_est) if star_est is not None else nan
    ref = star_est if star_est is not None else fixed_est
    rho = ref.rho_hat if ref is not None else nan
    beta = nan
    if ref is not None and ref.paired is not None and ref.paired.z_variance > 0:
        beta = -ref.paired.covariance / ref.paired.z_variance
    xi_f = (_safe(variance_reduction_ratio, fixed_est.paired.t_variance, fixed_est.variance)
            if fixed_est is not None else nan)
    xi_s = (_safe(variance_reduction_ratio, star_est.paired.t_variance, star_est.variance)
            if star_est is not None else nan)
    gap = ref.paired.gap if ref is not None else nan
    try:
        asym = alpha_asymptotic(p, report, gamma) if report.holds else nan
    except ValueError:
        asym = nan
    log_ratio = second_moment_log_ratio(is_est) if is_est is not None else nan
    return EfficiencyRow(gamma, cv2_is, cv2_fixed, cv2_star, rho, beta, xi_f, xi_s, gap,
                         asym, log_ratio)


@dataclass(frozen=True)
class GapDiagnostics:
    """Monte Carlo probes of the dominant-event gap and the moment bounds.

    ``p1_hat`` estimates ``P_g(Y_i <= log g)`` (exactly 1/2 under the dominant
    tilt) and ``gap_hat`` estimates ``P_g(Y_i <= log g, sum exp(Y) > g)``.
    ``cauchy_lhs`` is ``(E[Z^2] - E[T^2]) / E[Z^2]`` and ``cauchy_rhs`` its
    Cauchy-Schwarz bound ``sqrt(E[L^4 1] gap) / E[Z^2]``, both from the
    same batch, so ``cauchy_lhs <= cauchy_rhs`` holds up to rounding.
    """

    gamma: float
    m: int
    p1_hat: float
    p1_se: float
    p1_within_3se: bool
    gap_hat: float
    gap_se: float
    discrepancies: int
    low_count: bool
    ez2_hat: float
    ez2_se: float
    ez2_closed: float
    et2_hat: float
    el4_hat: float
    el4_se: float
    el4_closed: float
    cauchy_lhs: float
    cauchy_rhs: float
    c1_implied: float
    a_i0: float
    gap_rate: float


def lemma_diagnostics(p, plan, report, gamma, m, stream, workers=1):
    """Sample under the dominant tilt and report the gap/moment probes."""
    i = _require_dominant_plan(plan, report)
    log_gamma = math.log(gamma)
    w = solve_spd(p, plan.lam)
    half_quad = 0.5 * plan.quad

    def kernel(y):
        log_l = -(y - p.mu) @ w + half_quad
        in_sum = log_sum_exp_rows(y) <= log_gamma
        in_dom = y[:, i] <= log_gamma
        l2 = np.exp(np.where(in_dom, 2.0 * log_l, -np.inf))
        l4 = np.exp(np.where(in_dom, 4.0 * log_l, -np.inf))
        return np.column_stack([
            in_dom.astype(float),
            (in_dom & ~in_sum).astype(float),
            l2,
            np.where(in_sum, l2, 0.0),
            l4,
        ])

    mom = _accumulate(p.mu + plan.lam, p.chol, m, stream, kernel, workers)
    se = np.sqrt(np.maximum(np.diag(mom.cov), 0.0) / m)
    p1, gap, ez2, et2, el4 = (float(v) for v in mom.mean)
    discrepancies = int(round(gap * m))
    ez2_closed = z_second_moment_closed_form(p, plan, report, gamma)
    el4_closed = l4_indicator_closed_form(p, plan, report, gamma)

    lhs = (ez2 - et2) / ez2 if ez2 > 0 else math.nan
    rhs = math.sqrt(el4 * gap) / ez2 if ez2 > 0 else math.nan
    root_log = math.sqrt(-log_gamma) if log_gamma < 0 else math.nan
    c1 = lhs / (root_log * math.sqrt(gap)) if gap > 0 and root_log > 0 else math.nan
    k0 = report.i0(gamma)
    a_i0 = report.a_of(k0) if k0 is not None else math.nan
    rate = gap / gamma ** a_i0 if k0 is not None else math.nan
    return GapDiagnostics(
        gamma=float(gamma), m=int(m),
        p1_hat=p1, p1_se=float(se[0]), p1_within_3se=abs(p1 - 0.5) <= 3 * math.sqrt(0.25 / m),
        gap_hat=gap, gap_se=float(se[1]), discrepancies=discrepancies,
        low_count=discrepancies < LOW_COUNT,
        ez2_hat=ez2, ez2_se=float(se[2]), ez2_closed=ez2_closed, et2_hat=et2,
        el4_hat=el4, el4_se=float(se[4]), el4_closed=el4_closed,
        cauchy_lhs=lhs, cauchy_rhs=rhs, c1_implied=c1, a_i0=a_i0, gap_rate=rate,
    )


def gap_rate_bounded(diags, max_spread=50.0):
    """True when ``gap / gamma^{a_i0}`` stays within a factor ``max_spread`` over a grid."""
    rates = np.array([d.gap_rate for d in diags], dtype=float)
    rates = rates[np.isfinite(rates) & (rates > 0)]
    if rates.size < 2:
        return False
    return float(rates.max() / rates.min()) <= max_spread


def vanishing_relative_error(cv2_values):
    """Trend check: CV^2 strictly decreasing over the final three grid points."""
    tail = np.asarray(cv2_values, dtype=float)[-3:]
    return tail.size == 3 and bool(np.all(np.diff(tail) < 0))

