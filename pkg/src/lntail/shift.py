"""Mean-shift tilts for importance sampling.

The general tilt goes through the minimiser of ``w^T Sigma w`` over the
probability simplex; the dominant-component tilt is its closed form when one
row of ``Sigma`` dominates.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from .errors import AssumptionViolated, DimensionTooLarge, DomainError, NotPositiveDefinite
from .numerics import cholesky, quad_form, solve_spd

MAX_QP_DIM = 24

GENERAL = "general"
DOMINANT = "dominant"


@dataclass(frozen=True)
class SimplexQpSolution:
    w_bar: np.ndarray
    value: float
    support: tuple

    @property
    def n_bar(self):
        return len(self.support)


@dataclass(frozen=True)
class ReducedSystem:
    support: tuple
    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    sigma_bar_inv: np.ndarray
    a_bar: np.ndarray


@dataclass(frozen=True)
class ShiftPlan:
    """Tilt ``lam`` applied to the mean, with ``quad = lam^T Sigma^{-1} lam``.

    ``index`` is the dominant component in ``"dominant"`` mode, else ``None``.
    """

    lam: np.ndarray
    quad: float
    mode: str
    gamma: float
    log_gamma: float
    index: int | None = None


def _log_threshold(gamma):
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return math.log(gamma)


def solve_simplex_qp(sigma):
    """Minimise ``w^T Sigma w`` over the probability simplex by support enumeration.

    For every nonempty support ``S`` the equality-constrained optimum is
    ``w_S = Sigma_S^{-1} 1 / (1^T Sigma_S^{-1} 1)`` with value
    ``1 / (1^T Sigma_S^{-1} 1)``. The optimum's own support always yields a
    feasible candidate, so the best feasible candidate is the global
    minimiser. Ties go to the smaller support.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    if n > MAX_QP_DIM:
        raise DimensionTooLarge(
            f"support enumeration is limited to N <= {MAX_QP_DIM} (got {n}); "
            "use a grid or iterative QP solver instead"
        )
    cholesky(sigma)  # raises NotPositiveDefinite

    best = None
    for size in range(1, n + 1):
        for support in combinations(range(n), size):
            idx = list(support)
            x = solve_spd(sigma[np.ix_(idx, idx)], np.ones(size))
            total = float(x.sum())
            if not total > 0:
                continue
            w = x / total
            if np.any(w < 0):
                continue
            value = 1.0 / total
            if best is None or value < best[0] * (1 - 1e-13):
                best = (value, support, w)

    value, support, w = best
    w_bar = np.zeros(n)
    w_bar[list(support)] = w
    nonzero = tuple(int(k) for k in np.flatnonzero(w_bar > 0))
    return SimplexQpSolution(w_bar=w_bar, value=float(w_bar @ sigma @ w_bar), support=nonzero)


def reduce(p, sol):
    """Restrict ``mu`` and ``Sigma`` to the QP support and invert the block."""
    idx = list(sol.support)
    if not idx:
        raise ValueError("empty support")
    sigma_bar = p.sigma[np.ix_(idx, idx)]
    try:
        chol = cholesky(sigma_bar)
    except NotPositiveDefinite as exc:  # pragma: no cover - principal block of a PD matrix
        raise AssertionError("principal submatrix of a PD matrix failed to factor") from exc
    sigma_bar_inv = solve_spd(chol, np.eye(len(idx)))
    return ReducedSystem(
        support=tuple(idx),
        mu_bar=p.mu[idx].copy(),
        sigma_bar=sigma_bar.copy(),
        sigma_bar_inv=sigma_bar_inv,
        a_bar=solve_spd(chol, np.ones(len(idx))),
    )


def mean_shift_general(p, red, gamma):
    """General tilt built from the reduced system.

    ``lam_k = sum_{i,j} Sigma_{k,I(i)} Sbar^{-1}_{ij}
    (log gamma - log(sum(Abar) / Abar_j) - mubar_j)``.
    """
    log_gamma = _log_threshold(gamma)
    a_bar = red.a_bar
    target = log_gamma - np.log(a_bar.sum() / a_bar) - red.mu_bar
    lam = p.sigma[:, list(red.support)] @ (red.sigma_bar_inv @ target)
    return ShiftPlan(lam=lam, quad=quad_form(p, lam), mode=GENERAL,
                     gamma=float(gamma), log_gamma=log_gamma)


def mean_shift_dominant(p, report, gamma):
    """Tilt for a dominant component ``i``.

    ``lam_i = log gamma - mu_i`` and ``lam_k = (Sigma_ki / Sigma_ii) lam_i``,
    giving ``quad = lam_i^2 / Sigma_ii``.
    """
    if not report.holds:
        raise AssumptionViolated("dominant tilt requires a dominant component")
    log_gamma = _log_threshold(gamma)
    i = report.index
    d = log_gamma - p.mu[i]
    lam = p.sigma[:, i] / p.sigma[i, i] * d
    lam[i] = d
    return ShiftPlan(lam=lam, quad=d * d / p.sigma[i, i], mode=DOMINANT,
                     gamma=float(gamma), log_gamma=log_gamma, index=i)


def plan_shift(p, report, gamma):
    """Dominant tilt when available, general tilt otherwise."""
    if report.holds:
        return mean_shift_dominant(p, report, gamma)
    return mean_shift_general(p, reduce(p, solve_simplex_qp(p.sigma)), gamma)
