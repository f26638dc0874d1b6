"""
General tilt via the simplex QP
===============================

When no row of the covariance dominates, the tilt comes from minimising
w^T Sigma w over the probability simplex. Here is the QP on a few matrices and
an IS estimate with the resulting shift.
"""

import math

import numpy as np

import lntail as lt

for sigma in (np.diag([1.0, 2.0]), np.eye(3), np.array(lt.BENCH_SIGMA)):
    sol = lt.solve_simplex_qp(sigma)
    print("w_bar =", np.round(sol.w_bar, 6), " value =", round(sol.value, 6), " support =", sol.support)

###############################################################################
# Identity covariance: no dominant component, so only naive MC and IS apply.

p = lt.validate_problem([-2.0, -2.0, -2.0], np.eye(3))
report = lt.check_assumption_a(p)
print("dominant component present:", report.holds)
for lg in (-1.0, -2.0, -3.0):
    g = math.exp(lg)
    plan = lt.plan_shift(p, report, g)
    n = lt.naive_mc(p, g, 10 ** 5, lt.RngStream(4, 0))
    t = lt.is_mean_shift(p, plan, g, 10 ** 5, lt.RngStream(4, 1))
    print(f"log g={lg:4.1f}  mode={plan.mode}  naive={n.value:.4e}  is={t.value:.4e}  ci={t.ci95}")
