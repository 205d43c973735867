"""Tests for the regression detectors and the truncation calibration."""
import json
import math

import numpy as np
import pytest
from scipy import optimize, stats

from sqlab.core import OracleConfig, run_algorithm
from sqlab.detectors_gmm import IncompleteTranscriptError, calibrate_threshold, null_statistics
from sqlab.detectors_reg import (
    BracketError,
    RegTestSpec,
    a2,
    a2_quadrature,
    reg_coordinate_queries,
    reg_coordinate_test,
    reg_coordinate_threshold,
    reg_estimator_to_detector,
    reg_exhaustive_queries,
    reg_exhaustive_test,
    reg_exhaustive_threshold,
    truncation_level,
    truncation_tail_bounds,
)
from sqlab.models import gs_matrix, matched_null, reg_alternative, reg_null, sample, trial_rng
from sqlab.oracles import HonestOracle


def test_a2_pinned_values():
    assert a2(0.0) == 2.0
    ref = 2 * (3 * stats.norm.pdf(1.0) + 2 * stats.norm.sf(1.0))
    assert a2(1.0) == pytest.approx(ref, rel=1e-14)
    assert a2(1.0) == pytest.approx(2.08645, abs=1e-5)
    assert 0 < a2(8.0) <= 1e-10
    with pytest.raises(ValueError):
        a2(-0.1)


def test_a2_matches_quadrature_on_log_grid():
    ts = np.r_[0.0, np.geomspace(1e-3, 10, 40)]
    err = max(abs(a2(t) - a2_quadrature(t)) for t in ts)
    assert err <= 1e-10


def test_a2_rises_then_falls():
    t = np.linspace(0, 1, 50)
    assert np.all(np.diff(a2(t)) > 0)
    t = np.linspace(1, 10, 200)
    assert np.all(np.diff(a2(t)) < 0)


def test_truncation_level_bracket():
    t_ref = optimize.brentq(lambda t: a2_quadrature(t) - 0.5, 1.0, 10.0, xtol=1e-12)
    assert 2.7 < t_ref < 2.8
    R = truncation_level(0.5, n=1000)
    assert R == pytest.approx(2 * t_ref, abs=1e-7)
    assert 5.4 < R < 5.6


def test_truncation_level_target_limits():
    with pytest.raises(ValueError):
        truncation_level(2.0)
    with pytest.raises(ValueError):
        truncation_level(0.0)
    # near the upper end the crossing sits a little above t = 1, not at 0
    t_ref = optimize.brentq(lambda t: a2(t) - 1.99, 1.0, 3.0, xtol=1e-12)
    assert 1.0 < t_ref < 1.5
    R = truncation_level(1.99, n=10**6)
    tail = next(r for r in np.arange(0.5, 20, 0.5) if max(truncation_tail_bounds(r, 10**6, 1.0)) <= 1e-6)
    assert R == pytest.approx(max(2 * t_ref, tail), abs=1e-7)
    with pytest.raises(BracketError):
        truncation_level(0.5, a2_fn=lambda t: 0.0)


def test_truncation_level_tail_part_nonincreasing_in_n():
    """The tail condition R^2 >= 4 + 2 log(C sigma0^4) / log n relaxes as n grows."""
    levels = [truncation_level(1.9, n=n, sigma=3.0) for n in (10, 100, 10**4, 10**8)]
    assert all(b <= a for a, b in zip(levels, levels[1:]))
    assert levels[0] > levels[-1] >= 2 * optimize.brentq(lambda t: a2(t) - 1.9, 1.0, 3.0) - 1e-7


def test_tail_bounds_formula():
    b0, b1 = truncation_tail_bounds(4.0, 100, 2.0)
    assert b0 == pytest.approx(math.sqrt(12 * 4.0 * 100.0**-8))
    assert b1 == pytest.approx(math.sqrt(2 * math.sqrt(105 * 60) * 4.0 * 100.0**-8))


def test_threshold_golden_values():
    assert reg_exhaustive_threshold(4, 1.0, 0.05, 1000, 30, 3) == pytest.approx(
        4 * math.log(1000) * math.sqrt((3 * math.log(60) + math.log(20)) / 1000))
    assert reg_coordinate_threshold(4, 2.0, 0.05, 1000, 30) == pytest.approx(
        16 * math.log(1000) * math.sqrt(math.log(600) / 1000))


def test_family_sizes_and_bound():
    fam = reg_exhaustive_queries(10, 2, R=5.0, n=1000)
    assert fam.size == 4 * 45
    assert fam.bound == pytest.approx(25 * (25 * math.log(1000) - 1))
    assert reg_coordinate_queries(10, sigma=2.0, n=1000).size == 10


def test_fast_means_match_direct_evaluation():
    d, s, n = 8, 2, 600
    fam = reg_exhaustive_queries(d, s, R=1.3, n=n)
    D = sample(reg_alternative(np.r_[1.0, -1.0, np.zeros(d - 2)], 0.6), n, 0)
    D[:, 1:] *= 1.5
    assert np.allclose(fam.empirical_means(D), fam.evaluate(D).mean(axis=0), atol=1e-12)


def test_population_values_null_and_untruncated_alternative():
    d, s, beta = 6, 2, 0.5
    v = np.r_[1.0, 1.0, np.zeros(d - 2)]
    alt = reg_alternative(v, beta)
    ex = reg_exhaustive_queries(d, s, n=1000)
    co = reg_coordinate_queries(d, n=1000)
    assert np.allclose(ex.population_means(matched_null(alt)), 0.0, atol=1e-12)
    assert np.allclose(co.population_means(matched_null(alt)), 0.0, atol=1e-12)
    k = int(np.flatnonzero((gs_matrix(d, s) == v).all(axis=1))[0])
    assert ex.population_means(alt, idx=[k], untruncated=True)[0] == pytest.approx(2 * s * beta**2, rel=1e-8)
    assert co.population_means(alt, idx=[0], untruncated=True)[0] == pytest.approx(2 * beta**2, rel=1e-8)
    assert co.population_means(alt, idx=[3], untruncated=True)[0] == pytest.approx(0.0, abs=1e-10)


def test_population_matches_monte_carlo():
    d = 4
    fam = reg_coordinate_queries(d, R=1.0, n=100)
    alt = reg_alternative(np.r_[1.0, -1.0, 0, 0], 0.7)
    D = sample(alt, 1_000_000, 3)
    vals = fam.evaluate(D)
    se = vals.std(axis=0) / math.sqrt(len(D))
    assert np.all(np.abs(fam.population_means(alt) - vals.mean(axis=0)) <= 5 * se)


@pytest.mark.parametrize("gamma", [0.5, 2.0, 4.0])
def test_gap_with_calibrated_truncation(gamma):
    d, s, n = 30, 3, 1000
    R = truncation_level(0.5, n)
    beta = math.sqrt(gamma / s)
    v = np.r_[np.ones(s), np.zeros(d - s)]
    alt = reg_alternative(v, beta)
    nul = matched_null(alt)
    ex = reg_exhaustive_queries(d, s, R=R, n=n)
    k = int(np.flatnonzero((ex.V == v).all(axis=1))[0])
    gap = ex.population_means(alt, idx=[k])[0] - ex.population_means(nul, idx=[k])[0]
    assert gap >= s * beta**2
    co = reg_coordinate_queries(d, R=R, n=n)
    gap = co.population_means(alt, idx=[0])[0] - co.population_means(nul, idx=[0])[0]
    assert gap >= beta**2


def test_hermite_sanity_monte_carlo():
    """E[W^2 (Z^2 - 1)] = 2 zeta^2 for standard Gaussians with correlation zeta."""
    rng = np.random.default_rng(5)
    zeta = 0.6
    Z = rng.standard_normal(10**6)
    W = zeta * Z + math.sqrt(1 - zeta**2) * rng.standard_normal(Z.size)
    vals = W * W * (Z * Z - 1)
    assert abs(vals.mean() - 2 * zeta**2) <= 5 * vals.std() / math.sqrt(Z.size)


def test_spec_json_and_tests():
    spec = RegTestSpec.formula("coordinate", 5.5, 0.05, 1000, 10, 2)
    assert spec.size == 10
    data = json.loads(spec.to_json())
    assert data["C_const"] == 4.0 and data["threshold_mode"] == "formula"
    assert reg_coordinate_test(np.zeros(10), spec) == 0
    assert reg_coordinate_test(np.r_[np.zeros(9), 10.0], spec) == 1
    ex = RegTestSpec.formula("exhaustive", 5.5, 0.05, 1000, 10, 2)
    assert ex.size == 180
    with pytest.raises(IncompleteTranscriptError):
        reg_exhaustive_test(np.zeros(10), ex)
    with pytest.raises(ValueError):
        RegTestSpec.formula("diagonal", 5.5, 0.05, 1000, 10, 2)


def test_size_and_power_with_calibrated_threshold():
    d, s, n, xi, gamma = 12, 2, 1000, 0.1, 3.0
    beta = math.sqrt(gamma / s)
    fam = reg_coordinate_queries(d, R=truncation_level(0.5, n), n=n)
    nul = reg_null(d, 1.0, s, beta)
    thr = calibrate_threshold(fam, nul, xi, 400, n, seed=0)
    size = np.mean(null_statistics(fam, nul, 300, n, seed=1) >= thr)
    assert size <= xi + 3 * math.sqrt(xi * (1 - xi) / 300)
    alt = reg_alternative(np.r_[1.0, -1.0, np.zeros(d - 2)], beta)
    power = np.mean([fam.empirical_means(sample(alt, n, trial_rng(2, k))).max() >= thr for k in range(100)])
    assert power >= 0.9


def _const(value):
    def algo():
        return value
        yield  # pragma: no cover
    return algo


def _decide(algo):
    return run_algorithm(algo, HonestOracle(np.zeros((1, 2))), OracleConfig(0.1, 1, 1)).result


def test_reg_estimator_to_detector():
    beta = np.r_[0.6, -0.8, 0.0]
    gamma = float(beta @ beta)
    assert _decide(reg_estimator_to_detector(_const(beta), gamma)) == 1
    assert _decide(reg_estimator_to_detector(_const(np.zeros(3)), gamma)) == 0
    # ||b - beta||^2 <= gamma / 64 still rejects
    off = beta + np.r_[0.0, 0.0, math.sqrt(gamma / 64)]
    off_neg = beta * (1 - 1 / 8)
    assert _decide(reg_estimator_to_detector(_const(off), gamma)) == 1
    assert _decide(reg_estimator_to_detector(_const(off_neg), gamma)) == 1
    assert _decide(reg_estimator_to_detector(_const(beta), 1.0, sigma=2.0)) == 0
