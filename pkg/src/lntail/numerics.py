"""Dense linear algebra kernels and standard normal CDF helpers.

Everything here works on small dense matrices (the problems of interest have a
handful of dimensions), so clarity wins over blocking or sparse tricks.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc, erfcx, ndtri

from .errors import DimensionMismatch, NotPositiveDefinite

_SQRT2 = np.sqrt(2.0)

# Below this argument the CDF is evaluated through the scaled complementary
# error function so the Gaussian factor never has to be formed in linear space.
LOG_TAIL_SWITCH = -8.0


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the factored matrix."""

    lower: np.ndarray

    @property
    def dim(self):
        return self.lower.shape[0]

    def reconstruct(self):
        return self.lower @ self.lower.T


def cholesky(sigma):
    """Cholesky factor of a symmetric positive definite matrix.

    A pivot ``<= N * eps * max(diag(sigma))`` is treated as a failure, which
    makes the test scale-aware and deterministic.

    Raises
    ------
    NotPositiveDefinite
        With ``pivot`` set to the 0-based index of the failing pivot.
    """
    a = np.array(sigma, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    diag_max = float(np.max(np.abs(np.diag(a)))) if n else 0.0
    threshold = n * np.finfo(float).eps * diag_max
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > threshold:
            raise NotPositiveDefinite(
                f"matrix is not positive definite: pivot {j} (row/column {j}) "
                f"is {pivot:.6g}",
                pivot=j,
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return CholeskyFactor(lower)


def _as_factor(sigma_or_factor):
    if isinstance(sigma_or_factor, CholeskyFactor):
        return sigma_or_factor
    chol = getattr(sigma_or_factor, "chol", None)
    if isinstance(chol, CholeskyFactor):
        return chol
    return cholesky(sigma_or_factor)


def solve_spd(sigma_or_factor, rhs):
    """Solve ``sigma @ x = rhs`` through the Cholesky factor.

    ``sigma_or_factor`` may be a matrix, a :class:`CholeskyFactor`, or any
    object exposing one as ``.chol`` (e.g. a ``Problem``). ``rhs`` may be a
    vector or a matrix of right-hand sides.
    """
    factor = _as_factor(sigma_or_factor)
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, expected {factor.dim}")
    u = solve_triangular(factor.lower, b, lower=True)
    return solve_triangular(factor.lower.T, u, lower=False)


def quad_form(p, v):
    """Return ``v^T Sigma^{-1} v`` for the covariance held by ``p``.

    Computed as ``|L^{-1} v|^2`` so the result is nonnegative by construction
    and zero only for ``v = 0``.
    """
    factor = _as_factor(p)
    v = np.asarray(v, dtype=float)
    if v.shape != (factor.dim,):
        raise DimensionMismatch(f"vector has shape {v.shape}, expected ({factor.dim},)")
    u = solve_triangular(factor.lower, v, lower=True)
    return float(u @ u)


def row_sums_inverse(sigma):
    """Row sums ``A_k = sum_j (Sigma^{-1})_{kj}``, i.e. ``Sigma^{-1} @ 1``."""
    factor = _as_factor(sigma)
    return solve_spd(factor, np.ones(factor.dim))


def std_normal_cdf(x):
    """Standard normal CDF via ``erfc``; accepts scalars or arrays."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def log_std_normal_cdf(x):
    """Natural log of the standard normal CDF, accurate deep in the left tail.

    For ``x <= -8`` uses ``Phi(x) = erfcx(t) exp(-t^2) / 2`` with
    ``t = -x / sqrt(2)``, so nothing underflows before the log is taken.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    t = -x / _SQRT2
    tail = x <= LOG_TAIL_SWITCH
    upper = x > 0.0
    mid = ~(tail | upper)
    out[tail] = np.log(0.5 * erfcx(t[tail])) - t[tail] ** 2
    out[mid] = np.log(0.5 * erfc(t[mid]))
    out[upper] = np.log1p(-0.5 * erfc(-t[upper]))
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(q):
    """Inverse of the standard normal CDF (thin wrapper for CI half-widths)."""
    return float(ndtri(q))
