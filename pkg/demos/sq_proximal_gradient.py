"""Sparse linear regression where the data are only seen through queries.

Each proximal gradient step asks ``d`` statistical queries, one per
coordinate of the gradient of the squared loss, then soft-thresholds.  A
short refit on the selected support removes the shrinkage bias.

Run with ``python3 demos/sq_proximal_gradient.py``.
"""
import numpy as np

from sqlab.experiments import ExperimentConfig, demo_sq_sgd

cfg = ExperimentConfig.from_dict(dict(d=50, s=3, n=2000, seed=0))
res = demo_sq_sgd(cfg)

print("true support:     ", np.flatnonzero(res.theta_star))
print("estimated support:", np.flatnonzero(res.theta_hat))
print(f"error after soft-thresholding only: {res.lasso_error:.4f}")
print(f"error after the refit:              {res.error:.4f}")
print(f"queries issued: {res.queries}")
for it, phase, obj, k in res.trace[:5] + res.trace[-3:]:
    print(f"  iter {it:3d} {phase:5s} objective {obj:.6f} support {k}")
