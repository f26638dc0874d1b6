"""Samplers, likelihood ratios and the three left-tail estimators.

Random numbers come from ``numpy``'s Philox4x64 counter-based generator keyed
by ``(seed, stream_id)``. Samples are processed in chunks of ``CHUNK`` draws;
each chunk gets its own stream id derived from the parent stream and the chunk
index, and per-chunk moments are merged in a fixed pairwise order. The result
of an estimator is therefore a function of ``(seed, stream_id, m)`` only, no
matter how many worker threads produce the chunks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import hashlib
import math
import warnings

import numpy as np

from .errors import AssumptionViolated, DegenerateVariance, DimensionMismatch
from .numerics import log_std_normal_cdf, solve_spd, std_normal_quantile
from .shift import DOMINANT

CHUNK = 2 ** 16
RNG_FAMILY = "numpy.random.Philox (4x64, key = seed | stream_id << 64)"
LOGL_WARN = 700.0

NAIVE = "naive"
IS = "is"
ISCV_STAR = "is-cv-beta-star"
ISCV_FIXED = "is-cv-fixed"
ESTIMATORS = (NAIVE, IS, ISCV_STAR, ISCV_FIXED)

_MASK64 = (1 << 64) - 1


def derive_stream_id(*parts):
    """Stable 64-bit hash of a tuple of ints/strings."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self):
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def chunk(self, index):
        return RngStream(self.seed, derive_stream_id(self.stream_id, "chunk", index))


def sample_mvn(mean, chol, m, stream):
    """Draw ``m`` rows ``mean + L xi`` with ``xi`` i.i.d. standard normal."""
    lower = np.asarray(getattr(chol, "lower", chol), dtype=float)
    mean = np.asarray(mean, dtype=float)
    if lower.shape != (mean.shape[0], mean.shape[0]):
        raise DimensionMismatch("mean and Cholesky factor disagree")
    xi = stream.generator().standard_normal((int(m), mean.shape[0]))
    return mean + xi @ lower.T


class Moments:
    """Count, means, raw second moments and co-moment matrix of k columns.

    Two accumulators merge with Chan et al.'s pairwise update, so chunk
    statistics can be combined in any tree shape.
    """

    __slots__ = ("n", "mean", "mean_sq", "comoment")

    def __init__(self, n, mean, mean_sq, comoment):
        self.n = n
        self.mean = mean
        self.mean_sq = mean_sq
        self.comoment = comoment

    @classmethod
    def from_batch(cls, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        mean = x.mean(axis=0)
        centred = x - mean
        return cls(x.shape[0], mean, (x * x).mean(axis=0), centred.T @ centred)

    def merge(self, other):
        n = self.n + other.n
        delta = other.mean - self.mean
        frac = other.n / n
        return Moments(
            n,
            self.mean + delta * frac,
            self.mean_sq + (other.mean_sq - self.mean_sq) * frac,
            self.comoment + other.comoment + np.outer(delta, delta) * (self.n * frac),
        )

    @staticmethod
    def merge_all(parts):
        parts = list(parts)
        while len(parts) > 1:
            merged = [a.merge(b) for a, b in zip(parts[::2], parts[1::2])]
            if len(parts) % 2:
                merged.append(parts[-1])
            parts = merged
        return parts[0]

    @property
    def cov(self):
        return self.comoment / (self.n - 1)

    def var(self, k=0):
        return max(float(self.comoment[k, k]) / (self.n - 1), 0.0)


def _chunk_sizes(m):
    full, rest = divmod(int(m), CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _accumulate(mean, chol, m, stream, kernel, workers=1):
    sizes = _chunk_sizes(m)

    def run(item):
        index, size = item
        y = sample_mvn(mean, chol, size, stream.chunk(index))
        return Moments.from_batch(kernel(y))

    items = list(enumerate(sizes))
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, items))
    else:
        parts = [run(item) for item in items]
    return Moments.merge_all(parts)


def normal_interval(value, variance, m, level=0.95, floor=None):
    """``value -/+ z_{(1+level)/2} sqrt(variance / m)``, optionally floored."""
    value = float(value)
    if level <= 0:
        return (value, value)
    half = float(std_normal_quantile(0.5 * (1.0 + level))) * math.sqrt(max(variance, 0.0) / m)
    low = value - half
    if floor is not None and value >= floor:
        low = max(low, floor)
    return (low, value + half)


@dataclass(frozen=True)
class PairedStats:
    """Sample moments of ``(T, Z)`` from the batch behind a CV estimate.

    ``gap`` is the fraction of draws with ``Y_i <= log gamma`` but
    ``sum exp(Y) > gamma``, i.e. an estimate of ``P_g`` of the dominant event
    minus ``P_g`` of the sum event.
    """

    t_mean: float
    z_mean: float
    t_variance: float
    z_variance: float
    covariance: float
    t_second_moment: float
    z_second_moment: float
    gap: float


@dataclass(frozen=True)
class Estimate:
    """Point estimate with its per-sample variance (``m - 1`` denominator)."""

    value: float
    second_moment: float
    variance: float
    m: int
    gamma: float
    estimator: str
    ci95: tuple
    log_value: float
    seed: int | None = None
    stream_id: int | None = None
    beta_used: float | None = None
    rho_hat: float | None = None
    paired: PairedStats | None = field(default=None, repr=False)

    @property
    def std_error(self):
        return math.sqrt(self.variance / self.m)


def _log(x):
    if x > 0:
        return math.log(x)
    return -math.inf if x == 0 else math.nan


def _make_estimate(value, variance, second_moment, m, gamma, tag, stream, **extra):
    return Estimate(
        value=float(value),
        second_moment=float(second_moment),
        variance=float(max(variance, 0.0)),
        m=int(m),
        gamma=float(gamma),
        estimator=tag,
        ci95=normal_interval(value, variance, m, 0.95, floor=0.0),
        log_value=_log(value),
        seed=stream.seed,
        stream_id=stream.stream_id,
        **extra,
    )


def log_sum_exp_rows(y):
    """``log(sum_k exp(y_k))`` per row, stable for any magnitude."""
    ymax = y.max(axis=1)
    return ymax + np.log(np.exp(y - ymax[:, None]).sum(axis=1))


def _tilt_weights(p, plan):
    return solve_spd(p, plan.lam)


def log_likelihood_ratio(p, plan, y):
    """``-lam^T Sigma^{-1} (y - mu) + quad / 2`` for one point or a batch of rows."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != p.dim:
        raise DimensionMismatch(f"y has trailing dimension {y.shape[-1]}, expected {p.dim}")
    out = -(y - p.mu) @ _tilt_weights(p, plan) + 0.5 * plan.quad
    return float(out) if np.ndim(out) == 0 else out


def _weights_on(log_l, mask):
    on = log_l[mask]
    if on.size and on.max() > LOGL_WARN:
        warnings.warn(
            f"log-likelihood ratio reached {on.max():.1f} on the rare event; "
            "per-sample weights may overflow",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.exp(np.where(mask, log_l, -np.inf))


def _check_m(m):
    if int(m) < 2:
        raise ValueError(f"need at least 2 samples, got {m}")


def naive_mc(p, gamma, m, stream, workers=1):
    """Crude Monte Carlo: mean of ``1{sum exp(Y) <= gamma}`` with ``Y ~ f``."""
    _check_m(m)
    log_gamma = math.log(gamma)

    def kernel(y):
        return (log_sum_exp_rows(y) <= log_gamma).astype(float)

    mom = _accumulate(p.mu, p.chol, m, stream, kernel, workers)
    return _make_estimate(mom.mean[0], mom.var(0), mom.mean_sq[0], m, gamma, NAIVE, stream)


def _event_kernel(p, plan, log_gamma, dominant=None):
    w = _tilt_weights(p, plan)
    half_quad = 0.5 * plan.quad

    def kernel(y):
        log_l = -(y - p.mu) @ w + half_quad
        in_sum = log_sum_exp_rows(y) <= log_gamma
        if dominant is None:
            return _weights_on(log_l, in_sum)
        in_dom = y[:, dominant] <= log_gamma
        return np.column_stack([
            _weights_on(log_l, in_sum),
            _weights_on(log_l, in_dom),
            (in_dom & ~in_sum).astype(float),
        ])

    return kernel


def is_mean_shift(p, plan, gamma, m, stream, workers=1):
    """Mean-shift importance sampling estimator ``T`` with ``Y ~ N(mu + lam, Sigma)``."""
    _check_m(m)
    kernel = _event_kernel(p, plan, math.log(gamma))
    mom = _accumulate(p.mu + plan.lam, p.chol, m, stream, kernel, workers)
    return _make_estimate(mom.mean[0], mom.var(0), mom.mean_sq[0], m, gamma, IS, stream)


@dataclass(frozen=True)
class PairedSamples:
    """Per-sample realisations of ``T`` (sum event) and ``Z`` (dominant event)."""

    t: np.ndarray
    z: np.ndarray


def paired_samples(p, plan, report, gamma, m, stream):
    """Materialise ``(T, Z)`` for ``m`` draws from the shifted density.

    Uses the same chunked streams as :func:`is_cv`, so moments of the returned
    arrays match the accumulated ones up to summation order.
    """
    i = _dominant_index(report)
    kernel = _event_kernel(p, plan, math.log(gamma), dominant=i)
    mean = p.mu + plan.lam
    cols = [kernel(sample_mvn(mean, p.chol, size, stream.chunk(c)))
            for c, size in enumerate(_chunk_sizes(m))]
    tz = np.concatenate(cols, axis=0)
    return PairedSamples(t=tz[:, 0], z=tz[:, 1])


def _dominant_index(report):
    if not report.holds:
        raise AssumptionViolated("the control variate needs a dominant component")
    return report.index


def control_variate_mean(p, report, gamma, log=False):
    """``P(gamma) = Phi((log gamma - mu_i) / sqrt(Sigma_ii))``, the mean of ``Z``."""
    i = _dominant_index(report)
    arg = (math.log(gamma) - p.mu[i]) / math.sqrt(p.sigma[i, i])
    lv = log_std_normal_cdf(arg)
    return lv if log else math.exp(lv)


def _require_dominant_plan(plan, report):
    i = _dominant_index(report)
    if plan.mode != DOMINANT or plan.index != i:
        raise AssumptionViolated("closed-form moments need the dominant-component tilt")
    return i


def z_second_moment_closed_form(p, plan, report, gamma, log=False):
    """``E_g[Z^2] = exp(quad) Phi(2 (log gamma - mu_i) / sqrt(Sigma_ii))``."""
    i = _require_dominant_plan(plan, report)
    d = (math.log(gamma) - p.mu[i]) / math.sqrt(p.sigma[i, i])
    lv = plan.quad + log_std_normal_cdf(2.0 * d)
    return lv if log else math.exp(lv)


def l4_indicator_closed_form(p, plan, report, gamma, log=False):
    """``E_g[L^4 1{Y_i <= log gamma}] = exp(6 quad) Phi(4 (log gamma - mu_i) / sqrt(Sigma_ii))``."""
    i = _require_dominant_plan(plan, report)
    d = (math.log(gamma) - p.mu[i]) / math.sqrt(p.sigma[i, i])
    lv = 6.0 * plan.quad + log_std_normal_cdf(4.0 * d)
    return lv if log else math.exp(lv)


def _sample_cov(t, z):
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if t.shape != z.shape or t.size < 2:
        raise ValueError("need two equally long samples with at least 2 entries")
    c = np.cov(np.vstack([t, z]), ddof=1)
    return float(c[0, 0]), float(c[1, 1]), float(c[0, 1])


def beta_from_moments(var_z, cov_tz):
    if not var_z > 0:
        raise DegenerateVariance("sample variance of the control variate is zero")
    return -cov_tz / var_z


def estimate_beta_star(t, z):
    """``-cov(t, z) / var(z)`` with ``m - 1`` denominators."""
    _, var_z, cov_tz = _sample_cov(t, z)
    return beta_from_moments(var_z, cov_tz)


def rho_from_moments(var_t, var_z, cov_tz):
    if not (var_t > 0 and var_z > 0):
        raise DegenerateVariance("correlation needs two nonconstant samples")
    return float(np.clip(cov_tz / math.sqrt(var_t * var_z), -1.0, 1.0))


def is_cv(p, plan, report, gamma, m, stream, beta_mode="fixed", workers=1):
    """Importance sampling plus control variate, ``T + beta (Z - P(gamma))``.

    ``beta_mode`` is ``"fixed"`` (``beta = -1``) or ``"estimated"``
    (``beta = -cov(T, Z) / var(Z)`` from the same batch). The reported variance
    is ``var(T) + 2 beta cov(T, Z) + beta^2 var(Z)`` from the sample moments.
    """
    _check_m(m)
    i = _dominant_index(report)
    kernel = _event_kernel(p, plan, math.log(gamma), dominant=i)
    mom = _accumulate(p.mu + plan.lam, p.chol, m, stream, kernel, workers)
    cov = mom.cov
    var_t, var_z, cov_tz = max(cov[0, 0], 0.0), max(cov[1, 1], 0.0), float(cov[0, 1])
    p_gamma = control_variate_mean(p, report, gamma)

    if beta_mode == "fixed":
        beta, tag = -1.0, ISCV_FIXED
    elif beta_mode == "estimated":
        beta, tag = beta_from_moments(var_z, cov_tz), ISCV_STAR
    else:
        raise ValueError(f"unknown beta_mode {beta_mode!r}")

    try:
        rho = rho_from_moments(var_t, var_z, cov_tz)
    except DegenerateVariance:
        rho = math.nan
    t_mean, z_mean = float(mom.mean[0]), float(mom.mean[1])
    value = t_mean + beta * (z_mean - p_gamma)
    variance = var_t + 2.0 * beta * cov_tz + beta * beta * var_z
    # Second moment of the per-sample CV estimator: population variance + mean^2.
    second = max(variance, 0.0) * (m - 1) / m + value * value
    paired = PairedStats(t_mean, z_mean, var_t, var_z, cov_tz,
                         float(mom.mean_sq[0]), float(mom.mean_sq[1]), float(mom.mean[2]))
    return _make_estimate(value, variance, second, m, gamma, tag, stream,
                          beta_used=float(beta), rho_hat=rho, paired=paired)
