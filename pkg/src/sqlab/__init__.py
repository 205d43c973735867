"""Statistical query simulation toolkit for sparse mixture detection.

Modules
-------
core            bounded queries, tolerance, transcripts, budgeted runner
models          mixture and regression instances, samplers, exact moments
oracles         honest, population and adversarial oracles; coverage certificates
detectors_gmm   mixture detection tests, covering nets, calibration, reductions
detectors_reg   regression-mixture detection tests and truncation levels
analysis        chi-square cross-moments, overlap tables, Hermite series, Le Cam
experiments     sweeps, coverage, calibration, self-checks, proximal-gradient demo
cli             command-line front end
"""
__version__ = "0.1.0"
