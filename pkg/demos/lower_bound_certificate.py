"""Why a budgeted query algorithm can miss a sparse signal.

The adversarial oracle answers every query with its null expectation
whenever that answer is within tolerance of the truth.  If no query in the
algorithm's budget separates an alternative from the null by more than the
tolerance, the transcripts under the two hypotheses are bit-for-bit equal,
so any test built on them has risk one.

Run with ``python3 demos/lower_bound_certificate.py``.
"""
from sqlab.experiments import ExperimentConfig, run_coverage, run_sweep

cfg = ExperimentConfig.from_dict(dict(d=30, s=3, n=2000, xi=0.05, detector="diagonal"))
cert, t0, t1, beta = run_coverage(cfg, return_transcripts=True)
print(f"signal beta = {beta:.4f} (half the smallest per-query tolerance)")
print(f"alternatives distinguished by some query: {cert.union_size} of {cert.gs_size}")
print(f"witness: {cert.witness}")
print(f"transcripts identical: {cert.transcripts_identical} ({len(t0)} responses each)")

row = run_sweep(cfg.replace(oracle="adversarial", gamma_grid=[cfg.s * beta**2], trials=50,
                            calibration_trials=200))[0]
print(f"empirical risk against the adversarial oracle: {row.risk}")

# a much stronger signal is seen by every query
strong, _ = run_coverage(cfg.replace(n=10**6, beta=20.0))
print(f"with beta = 20 and n = 1e6: union {strong.union_size} of {strong.gs_size}, witness {strong.witness}")
