"""Acceptance criteria A1-A8, one PASS/FAIL line each (shown in the terminal summary)."""
import math
import time

import numpy as np

from sqlab.analysis import (
    chi2_cross_gmm_known,
    chi2_cross_gmm_unknown,
    chi2_cross_reg,
    cj_table,
    cj_table_bruteforce,
    growth_check,
    hermite_coeffs,
    hermite_cross_moment,
    mc_cross_gmm_known,
    mc_cross_gmm_unknown,
    mc_cross_reg,
    reg_lr_fourth_moment_finite,
)
from sqlab.core import OracleConfig, finite_capacity, tolerance
from sqlab.detectors_gmm import diagonal_queries, exhaustive_queries
from sqlab.detectors_reg import a2, a2_quadrature, reg_coordinate_queries, reg_exhaustive_queries, truncation_level
from sqlab.experiments import ExperimentConfig, demo_sq_sgd, run_coverage, run_sweep
from sqlab.models import gmm_alternative, matched_null, random_gs, reg_alternative, sample, trial_rng


def _random_pair(rng, d):
    """Two sign-support vectors with the same sparsity and nonzero overlap."""
    while True:
        s = int(rng.integers(1, 4))
        v1, v2 = (random_gs(d, s, rng) for _ in range(2))
        if v1 @ v2 != 0:
            return s, v1, v2


def test_a1_cross_moments_vs_monte_carlo(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    d, n_mc = 6, 10**6
    worst = {}
    for kind in ("gmm-known", "gmm-unknown", "regression"):
        zs = []
        for k in range(20):
            s, v1, v2 = _random_pair(rng, d)
            if kind == "gmm-known":
                beta, nu = rng.uniform(0.2, 0.7), rng.uniform(0.2, 0.8)
                exact = chi2_cross_gmm_known(v1, v2, beta, nu)
                m, se = mc_cross_gmm_known(v1, v2, beta, nu, n_mc, seed=k)
            elif kind == "gmm-unknown":
                # singularity guard: s beta^2 < 1 keeps the covariance positive definite
                beta = rng.uniform(0.1, 0.5) / math.sqrt(s)
                exact = chi2_cross_gmm_unknown(v1, v2, beta)
                m, se = mc_cross_gmm_unknown(v1, v2, beta, n_mc, seed=k)
            else:
                sigma = rng.uniform(0.8, 1.5)
                while True:
                    beta = sigma * rng.uniform(0.05, 0.4)
                    if reg_lr_fourth_moment_finite(beta, sigma, s):
                        break
                exact = chi2_cross_reg(v1, v2, beta, sigma)
                m, se = mc_cross_reg(v1, v2, beta, sigma, n_mc, seed=k)
            zs.append(abs(exact - m) / se)
        worst[kind] = max(zs)
    pinned = chi2_cross_reg(np.r_[1.0, 1.0, 0.0], np.r_[1.0, 1.0, 0.0], 0.5, 1.0)
    elapsed = time.perf_counter() - t0
    ok = all(z <= 5 for z in worst.values()) and abs(pinned - 1.125) <= 1e-12 and elapsed <= 120
    detail = ", ".join(f"{k} max {z:.2f} SE" for k, z in worst.items())
    acceptance_report("A1", ok, f"{detail}; pinned {pinned!r}; {elapsed:.1f} s")


def test_a2_combinatorics(acceptance_report):
    t0 = time.perf_counter()
    bad = [(d, s) for d in range(1, 15) for s in range(1, 4) if s <= d
           and cj_table(d, s).sizes != cj_table_bruteforce(d, s)]
    pinned = cj_table(4, 2).sizes == (2, 16, 6) and cj_table(12, 2).sizes == (2, 80, 182)
    g12, g4 = growth_check(cj_table(12, 2)), growth_check(cj_table(4, 2))
    elapsed = time.perf_counter() - t0
    ok = not bad and pinned and g12.holds and not g4.holds and elapsed <= 30
    acceptance_report("A2", ok, f"mismatches {bad}, pinned {pinned}, growth d=12 {g12.holds}, "
                                f"d=4 {g4.holds} (ratio {g4.ratios[1]}); {elapsed:.1f} s")


def test_a3_hermite_and_truncation(acceptance_report):
    t0 = time.perf_counter()
    exact0 = a2(0.0) == 2.0
    ts = np.linspace(0, 10, 101)
    err = max(abs(a2(t) - a2_quadrature(t)) for t in ts)
    fa = hermite_coeffs(lambda w: w * w, 8)
    gb = hermite_coeffs(lambda z: z * z - 1, 8)
    herr = max(abs(hermite_cross_moment(fa, gb, z) - 2 * z * z) for z in np.linspace(-1, 1, 21))
    t_star = truncation_level(0.5, n=1000) / 2
    elapsed = time.perf_counter() - t0
    ok = exact0 and err <= 1e-8 and herr <= 1e-8 and 2.7 < t_star < 2.8 and elapsed <= 10
    acceptance_report("A3", ok, f"a2(0) exact {exact0}, quadrature error {err:.2e}, Hermite error {herr:.2e}, "
                                f"t* = {t_star:.6f}; {elapsed:.1f} s")


def test_a4_coverage_certificate(acceptance_report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(dict(d=30, s=3, n=2000, xi=0.05, detector="diagonal", seed=0))
    cert, beta = run_coverage(cfg)
    gamma = cfg.s * beta**2
    sweep = cfg.replace(oracle="adversarial", gamma_grid=[gamma], trials=200)
    row = run_sweep(sweep)[0]
    elapsed = time.perf_counter() - t0
    ok = (cert.witness is not None and cert.transcripts_identical and row.risk == 1.0 and elapsed <= 60)
    acceptance_report("A4", ok, f"beta {beta:.5g}, union {cert.union_size}/{cert.gs_size}, "
                                f"witness {cert.witness[:4] if cert.witness else None}..., identical "
                                f"{cert.transcripts_identical}, adversarial risk {row.risk!r}; {elapsed:.1f} s")


def _first_power(rows, level=0.8):
    for r in rows:
        if 1 - r.type2 >= level:
            return r.gamma
    return math.inf


def _violations(rows):
    power = [1 - r.type2 for r in rows]
    return sum(b < a for a, b in zip(power, power[1:]))


def _phase_transition(cfg, fast, slow):
    out = {}
    for det in (fast, slow):
        out[det] = run_sweep(cfg.replace(detector=det))
    sizes = {det: max(r.type1 for r in rows) for det, rows in out.items()}
    first = {det: _first_power(rows) for det, rows in out.items()}
    viol = {det: _violations(rows) for det, rows in out.items()}
    ok = (all(v <= 0.08 for v in sizes.values()) and first[fast] <= first[slow] and math.isfinite(first[fast])
          and all(v <= 1 for v in viol.values()))
    detail = "; ".join(f"{det}: max size {sizes[det]:.3f}, first gamma with power >= 0.8 {first[det]:.3g}, "
                       f"power {[round(1 - r.type2, 3) for r in out[det]]}" for det in (fast, slow))
    return ok, detail


def test_a5_gmm_phase_transition(acceptance_report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(dict(model="gmm", d=30, s=3, n=1000, nu=0.5, xi=0.05, trials=200,
                                          calibration_trials=2000, gamma_grid=list(np.geomspace(0.2, 6, 8)),
                                          seed=0, threads=4, timing=False))
    ok, detail = _phase_transition(cfg, "exhaustive", "diagonal")
    elapsed = time.perf_counter() - t0
    acceptance_report("A5", ok and elapsed <= 600, f"{detail}; {elapsed:.1f} s")


def test_a6_regression_phase_transition(acceptance_report):
    t0 = time.perf_counter()
    grid = list(np.geomspace(0.1, 3, 8))
    cfg = ExperimentConfig.from_dict(dict(model="reg", detector="coordinate", d=30, s=3, n=1000, sigma=1.0,
                                          xi=0.05, trials=200, calibration_trials=2000, gamma_grid=grid,
                                          seed=0, threads=4, timing=False))
    ok, detail = _phase_transition(cfg, "exhaustive", "coordinate")
    R = cfg.truncation_R()
    beta = math.sqrt(grid[-1] / cfg.s)
    v = np.r_[np.ones(3), np.zeros(27)]
    alt = reg_alternative(v, beta)
    nul = matched_null(alt)
    ex = reg_exhaustive_queries(30, 3, R=R, n=1000)
    k = int(np.flatnonzero((ex.V == v).all(axis=1))[0])
    gap_ex = float(ex.population_means(alt, idx=[k])[0] - ex.population_means(nul, idx=[k])[0])
    co = reg_coordinate_queries(30, R=R, n=1000)
    gap_co = float(co.population_means(alt, idx=[0])[0] - co.population_means(nul, idx=[0])[0])
    gaps_ok = gap_ex >= 3 * beta**2 and gap_co >= beta**2
    elapsed = time.perf_counter() - t0
    acceptance_report("A6", ok and gaps_ok and elapsed <= 600,
                      f"{detail}; R {R:.4f}, gaps {gap_ex:.4f} >= {3 * beta**2:.4f} and "
                      f"{gap_co:.4f} >= {beta**2:.4f}; {elapsed:.1f} s")


def test_a7_honest_oracle_guarantee(acceptance_report):
    t0 = time.perf_counter()
    d, s, n, xi, reps = 20, 2, 2000, 0.05, 500
    ex = exhaustive_queries(d, s, n=n)
    dg_ = diagonal_queries(d, n=n)
    cfg = OracleConfig(xi=xi, n=n, T=ex.size + dg_.size, capacity=finite_capacity(ex.size + dg_.size))
    inst = gmm_alternative(np.r_[1.0, -1.0, np.zeros(d - 2)], 0.8)
    fails = 0
    for fam in (ex, dg_):
        fam._E = fam.population_means(inst)
        fam._tau = tolerance(cfg, fam.bound, fam._E)
    for r in range(reps):
        X = sample(inst, n, trial_rng(7, r))
        bad = any(np.any(np.abs(fam.empirical_means(X) - fam._E) > fam._tau) for fam in (ex, dg_))
        fails += bad
    limit = 2 * xi + 3 * math.sqrt(2 * xi / reps)
    elapsed = time.perf_counter() - t0
    acceptance_report("A7", fails / reps <= limit and elapsed <= 120,
                      f"{fails}/{reps} replications with a deviation above tolerance (limit {limit:.4f}); "
                      f"{elapsed:.1f} s")


def test_a8_sq_proximal_gradient(acceptance_report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(dict(d=50, s=3, n=2000, seed=0))
    res = demo_sq_sgd(cfg)
    obj = [row[2] for row in res.trace]
    mono = all(b <= a for a, b in zip(obj[2:], obj[3:]))
    to_ls = float(np.linalg.norm(res.theta_hat - res.theta_ls_oracle))
    elapsed = time.perf_counter() - t0
    ok = res.error <= 0.1 and mono and elapsed <= 30
    acceptance_report("A8", ok, f"error {res.error:.4f} (least squares on support {to_ls:.2e} away, lasso "
                                f"only {res.lasso_error:.4f}), trace nonincreasing after iteration 3: {mono}, "
                                f"{res.queries} queries; {elapsed:.1f} s")
