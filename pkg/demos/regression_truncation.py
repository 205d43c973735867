"""Choosing the truncation level of the regression queries.

The queries ``y^2 (Z^2 - 1)`` are truncated so that they are bounded.  The
second Hermite coefficient ``a2(t)`` of the tail part measures how much of
the signal the truncation throws away; the level ``R = 2 t*`` with
``a2(t*) = 1/2`` keeps the population gap above ``s beta^2``.

Run with ``python3 demos/regression_truncation.py``.
"""
import math

import numpy as np

from sqlab.detectors_reg import a2, reg_coordinate_queries, reg_exhaustive_queries, truncation_level
from sqlab.models import matched_null, reg_alternative

for t in (0.0, 0.5, 1.0, 2.0, 2.74, 4.0):
    print(f"a2({t:4.2f}) = {a2(t):.6f}")

d, s, n = 30, 3, 1000
R = truncation_level(0.5, n)
print(f"\ntruncation level R = {R:.6f}")

v = np.r_[np.ones(s), np.zeros(d - s)]
ex = reg_exhaustive_queries(d, s, R=R, n=n)
co = reg_coordinate_queries(d, R=R, n=n)
k = int(np.flatnonzero((ex.V == v).all(axis=1))[0])
for gamma in (0.5, 1.0, 2.0, 4.0):
    beta = math.sqrt(gamma / s)
    alt = reg_alternative(v, beta)
    nul = matched_null(alt)
    g_ex = ex.population_means(alt, idx=[k])[0] - ex.population_means(nul, idx=[k])[0]
    g_co = co.population_means(alt, idx=[0])[0] - co.population_means(nul, idx=[0])[0]
    print(f"gamma {gamma:3.1f}: exhaustive gap {g_ex:.4f} (target {s * beta**2:.4f}), "
          f"coordinate gap {g_co:.4f} (target {beta**2:.4f})")
