"""Problem definition and structural facts about the covariance.

Indices are 0-based throughout. The dominant component is kept explicit
instead of permuting coordinates so that user-facing indices never move.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import AssumptionViolated, DimensionMismatch, DomainError, NotSymmetric
from .numerics import CholeskyFactor, cholesky, row_sums_inverse, solve_spd

SYMMETRY_RTOL = 1e-12
DOMINANCE_RTOL = 1e-12
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Problem:
    """Validated ``(mu, Sigma)`` pair with cached factorisations.

    Build instances with :func:`validate_problem`.
    """

    mu: np.ndarray
    sigma: np.ndarray
    chol: CholeskyFactor
    sigma_inv: np.ndarray
    row_sums: np.ndarray

    @property
    def dim(self):
        return self.mu.shape[0]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def validate_problem(mu, sigma):
    """Check ``mu``/``sigma`` and return a :class:`Problem`.

    Raises
    ------
    DimensionMismatch
        Shapes disagree or ``N < 1``.
    NotSymmetric
        ``sigma`` is not symmetric to relative tolerance ``1e-12``.
    NotPositiveDefinite
        A Cholesky pivot is not strictly positive.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if mu.ndim != 1 or mu.shape[0] < 1:
        raise DimensionMismatch(f"mu must be a nonempty vector, got shape {mu.shape}")
    n = mu.shape[0]
    if sigma.shape != (n, n):
        raise DimensionMismatch(f"sigma has shape {sigma.shape}, expected ({n}, {n})")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
        raise DomainError("mu and sigma must be finite")
    scale = float(np.max(np.abs(sigma)))
    asym = float(np.max(np.abs(sigma - sigma.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"sigma is not symmetric (max |S - S^T| = {asym:.3g})")

    chol = cholesky(sigma)
    sigma_inv = solve_spd(chol, np.eye(n))
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
    return Problem(
        mu=_readonly(mu),
        sigma=_readonly(sigma),
        chol=CholeskyFactor(_readonly(chol.lower)),
        sigma_inv=_readonly(sigma_inv),
        row_sums=_readonly(row_sums_inverse(chol)),
    )


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of the dominant-component check.

    Attributes
    ----------
    holds : bool
        Whether some row ``i`` has ``Sigma_ii < Sigma_ij`` for every ``j != i``.
    index : int or None
        The dominant component (0-based) when ``holds``.
    margins : ndarray
        ``min_{j != i} (Sigma_ij - Sigma_ii)`` for every candidate ``i``
        (``+inf`` when ``N = 1``).
    others : tuple of int
        Non-dominant indices, in increasing order; ``a`` and ``c`` follow it.
    a, c : ndarray
        ``a_k = Sigma_ki / Sigma_ii - 1`` and
        ``c_k = exp(mu_k - (Sigma_ki / Sigma_ii) mu_i)`` for ``k`` in ``others``.
    """

    holds: bool
    index: int | None
    margins: np.ndarray
    others: tuple = ()
    a: np.ndarray = None
    c: np.ndarray = None

    def i0(self, gamma):
        """Index ``k`` maximising ``c_k gamma^{a_k}``; smallest index on ties.

        Returns ``None`` when there are no other components.
        """
        if not self.holds:
            raise AssumptionViolated("no dominant component")
        if not self.others:
            return None
        if gamma <= 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        scores = np.log(self.c) + self.a * math.log(gamma)
        return self.others[int(np.argmax(scores))]

    def a_of(self, k):
        return float(self.a[self.others.index(k)])


def check_assumption_a(p):
    """Look for a strictly dominant row of the covariance matrix."""
    s = p.sigma
    n = p.dim
    tol = DOMINANCE_RTOL * float(np.max(np.abs(s)))
    margins = np.full(n, np.inf)
    for i in range(n):
        off = np.delete(s[i], i)
        if off.size:
            margins[i] = float(np.min(off - s[i, i]))
    winners = np.flatnonzero(margins > tol)
    if winners.size == 0:
        return DominanceReport(holds=False, index=None, margins=margins)
    # Positive definiteness rules out two strictly dominant rows.
    i = int(winners[0])
    others = tuple(k for k in range(n) if k != i)
    ratio = s[list(others), i] / s[i, i]
    a = ratio - 1.0
    c = np.exp(p.mu[list(others)] - ratio * p.mu[i])
    return DominanceReport(holds=True, index=i, margins=margins, others=others, a=a, c=c)


def _require(report):
    if not report.holds:
        raise AssumptionViolated(
            "no component i with Sigma_ii < Sigma_ij for all j != i"
        )
    return report.index


def log_alpha_asymptotic(p, report, gamma):
    """Log of the dominant-component tail equivalent of the left-tail probability."""
    i = _require(report)
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    log_gamma = math.log(gamma)
    if log_gamma >= 0:
        raise DomainError(f"the tail equivalent needs gamma < 1, got {gamma}")
    var = p.sigma[i, i]
    return (
        0.5 * math.log(var)
        - _LOG_SQRT_2PI
        - math.log(-log_gamma)
        - (log_gamma - p.mu[i]) ** 2 / (2.0 * var)
    )


def alpha_asymptotic(p, report, gamma):
    """Tail equivalent ``sqrt(S_ii) / (sqrt(2 pi) log(1/g)) exp(-(log g - mu_i)^2 / (2 S_ii))``.

    Only meaningful as ``gamma -> 0``; ``gamma >= 1`` is rejected.
    """
    return math.exp(log_alpha_asymptotic(p, report, gamma))
