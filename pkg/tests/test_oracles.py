"""Tests for the oracles, distinguishable sets and coverage certificates."""
import json
import math

import numpy as np
import pytest

from sqlab.core import BoundedQuery, OracleConfig, batch_algorithm, run_algorithm, tolerance
from sqlab.detectors_gmm import diagonal_queries, exhaustive_queries
from sqlab.models import gmm_alternative, gmm_null, gs_matrix, sample
from sqlab.oracles import (
    AdversarialOracle,
    CoverageCertificate,
    HonestOracle,
    PopulationOracle,
    coverage_certificate,
    distinguishable_set,
    honest_respond,
)


def test_honest_oracle_is_sample_mean():
    X = np.arange(12.0).reshape(6, 2)
    q = BoundedQuery("m", 100.0, lambda X: X[:, 1])
    assert honest_respond(q, X) == pytest.approx(X[:, 1].mean())
    with pytest.raises(ValueError):
        honest_respond(q, np.zeros((0, 2)))


def test_honest_family_matches_member_queries():
    fam = diagonal_queries(5, n=200)
    X = sample(gmm_alternative(np.r_[1.0, -1.0, 0, 0, 0], 1.5), 200, 0)
    o = HonestOracle(X)
    assert np.allclose(o.respond_family(fam), [o.respond(q) for q in fam], atol=1e-13)


def test_population_oracle_perturbation_stays_within_tolerance():
    fam = diagonal_queries(6, n=500)
    inst = gmm_alternative(np.r_[1.0, 1.0, 0, 0, 0, 0], 1.0)
    cfg = OracleConfig(xi=0.1, n=500, T=6)
    exact = PopulationOracle(inst).respond_family(fam)
    pert = PopulationOracle(inst, cfg, scale=1.0, rng_seed=3).respond_family(fam)
    assert np.all(np.abs(pert - exact) <= tolerance(cfg, fam.bound, exact) + 1e-12)
    with pytest.raises(ValueError):
        PopulationOracle(inst, scale=0.5)


def test_adversarial_oracle_answers_null_when_valid():
    d, n = 6, 10**5
    fam = diagonal_queries(d, n=n)
    v = np.r_[1.0, 1.0, np.zeros(d - 2)]
    cfg = OracleConfig.for_family(0.05, n, d)
    weak = AdversarialOracle(gmm_alternative(v, 0.1), cfg, gmm_null(d))
    E0 = fam.population_means(gmm_null(d))
    assert np.array_equal(weak.respond_family(fam), E0)
    strong = AdversarialOracle(gmm_alternative(v, 5.0), cfg, gmm_null(d))
    r = strong.respond_family(fam)
    Ev = fam.population_means(gmm_alternative(v, 5.0))
    assert np.array_equal(r[:2], Ev[:2]) and np.array_equal(r[2:], E0[2:])
    q = fam.query(0)
    assert strong.respond(q) == pytest.approx(Ev[0])


def test_adversarial_custom_query_marks_approximate():
    cfg = OracleConfig(xi=0.1, n=100, T=1)
    o = AdversarialOracle(gmm_alternative(np.r_[1.0, 0.0], 0.1), cfg, gmm_null(2), n_mc=20_000)
    o.respond(BoundedQuery("c", 1.0, lambda X: np.tanh(X[:, 0])))
    assert o.approximate


def test_distinguishable_set_splits_by_gap_sign():
    d, n = 4, 10**5
    fam = exhaustive_queries(d, 1, n=n)
    cfg = OracleConfig.for_family(0.1, n, fam.size)
    q = fam.query(0)  # direction -e1
    ds = distinguishable_set(q, gs_matrix(d, 1), lambda v: gmm_alternative(v, 6.0), cfg, gmm_null(d))
    supports = sorted({int(np.flatnonzero(v.array())[0]) for v in ds.members})
    assert supports == [0]
    assert len(ds.c1) == 2 and not ds.c2


def test_coverage_certificate_weak_signal_has_witness():
    d, n = 8, 500
    fam = diagonal_queries(d, n=n)
    cfg = OracleConfig.for_family(0.05, n, d)
    cert, t0, t1 = coverage_certificate([fam], gs_matrix(d, 2), lambda v: gmm_alternative(v, 0.5), cfg,
                                        gmm_null(d), return_transcripts=True)
    assert cert.union_size == 0 and cert.witness == [-1, -1, 0, 0, 0, 0, 0, 0]
    assert cert.transcripts_identical and t0.identical_to(t1)
    assert set(json.loads(cert.to_json())) == {"queries", "union_size", "gs_size", "witness",
                                               "transcripts_identical"}


def test_coverage_certificate_strong_signal_no_witness():
    d, n = 6, 10**5
    fam = diagonal_queries(d, n=n)
    cfg = OracleConfig.for_family(0.05, n, d)
    cert = coverage_certificate([fam], gs_matrix(d, 2), lambda v: gmm_alternative(v, 8.0), cfg, gmm_null(d))
    assert cert.union_size == cert.gs_size and cert.witness is None and not cert.transcripts_identical


def test_coverage_zero_query_algorithm_has_witness():
    d = 4
    cfg = OracleConfig(xi=0.1, n=10, T=0)
    cert = coverage_certificate([], gs_matrix(d, 1), lambda v: gmm_alternative(v, 1.0), cfg, gmm_null(d))
    assert cert.witness == [-1, 0, 0, 0] and cert.transcripts_identical


def test_certificate_invariants():
    with pytest.raises(ValueError):
        CoverageCertificate([], 3, 3, [1, 0], False)
    with pytest.raises(ValueError):
        CoverageCertificate([], 2, 3, None, False)
    with pytest.raises(ValueError):
        CoverageCertificate([], 3, 3, None, True)


def test_identical_transcripts_force_equal_decisions():
    """Any transcript-based test decides identically under P0 and an uncovered alternative."""
    d, n = 8, 500
    fam = diagonal_queries(d, n=n)
    cfg = OracleConfig.for_family(0.05, n, d)
    v = np.r_[1.0, 1.0, np.zeros(d - 2)]

    def algo():
        z = yield fam
        return int(np.max(z) > 1.0)

    r0 = run_algorithm(algo, AdversarialOracle(gmm_null(d), cfg, gmm_null(d)), cfg).result
    r1 = run_algorithm(algo, AdversarialOracle(gmm_alternative(v, 0.5), cfg, gmm_null(d)), cfg).result
    assert r0 == r1
