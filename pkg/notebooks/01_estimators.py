"""
Three estimators of a left tail
===============================

Naive Monte Carlo, mean-shift importance sampling and importance sampling
with the dominant-component control variate, side by side on the 4-d
example problem.
"""

import math

import numpy as np

import lntail as lt

p = lt.validate_problem(lt.BENCH_MU, lt.BENCH_SIGMA)
report = lt.check_assumption_a(p)
print("dominant component:", report.index, " a =", report.a, " c =", report.c)

# At log g = 1.67 the probability is about 1e-2, so naive MC still works.
g = math.exp(1.67)
plan = lt.plan_shift(p, report, g)
print("shift:", plan.lam, " quad:", plan.quad)

naive = lt.naive_mc(p, g, 10 ** 6, lt.RngStream(1, 1))
is_ = lt.is_mean_shift(p, plan, g, 10 ** 4, lt.RngStream(1, 2))
cv = lt.is_cv(p, plan, report, g, 10 ** 4, lt.RngStream(1, 3), beta_mode="fixed")
for e in (naive, is_, cv):
    print(f"{e.estimator:>16}  m={e.m:>8}  value={e.value:.5e}  ci={e.ci95[0]:.5e}..{e.ci95[1]:.5e}")

###############################################################################
# Deeper in the tail naive MC returns 0; the tilted estimators keep going.

for lg in (-1.0, -3.0, -6.0):
    g = math.exp(lg)
    plan = lt.plan_shift(p, report, g)
    n = lt.naive_mc(p, g, 10 ** 5, lt.RngStream(2, 0))
    t = lt.is_mean_shift(p, plan, g, 10 ** 5, lt.RngStream(2, 1))
    s = lt.is_cv(p, plan, report, g, 10 ** 5, lt.RngStream(2, 2), beta_mode="estimated")
    print(f"log g={lg:5.1f}  naive={n.value:.3e}  is={t.value:.4e} (cv2 {lt.squared_cv(t):.2f})"
          f"  is-cv*={s.value:.4e} (cv2 {lt.squared_cv(s):.3f}, beta {s.beta_used:.3f})"
          f"  asymptotic={lt.alpha_asymptotic(p, report, g):.4e}")
