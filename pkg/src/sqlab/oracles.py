"""Oracles answering statistical queries, and the lower-bound machinery.

* :class:`HonestOracle` answers sample means over a fixed dataset.
* :class:`PopulationOracle` answers population means, optionally perturbed
  inside the tolerance band.
* :class:`AdversarialOracle` answers the null mean whenever that answer is
  valid for the true distribution, and the true mean otherwise.

Distinguishable sets collect the alternatives a query can tell apart from
the null; a coverage certificate checks whether a family of queries leaves
some alternative uncovered and replays the algorithm against that witness.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import BoundedQuery, OracleConfig, QueryFamily, Transcript, batch_algorithm, run_algorithm, tolerance
from .models import SignSupportVector, matched_null, population_expectation

__all__ = [
    "honest_respond",
    "HonestOracle",
    "PopulationOracle",
    "AdversarialOracle",
    "adversarial_respond",
    "DistinguishableSet",
    "distinguishable_set",
    "distinguishable_matrix",
    "CoverageCertificate",
    "coverage_certificate",
]


def honest_respond(query, dataset) -> float:
    """Sample mean of ``query`` over ``dataset``."""
    X = np.asarray(dataset, dtype=float)
    if X.size == 0 or X.shape[0] == 0:
        raise ValueError("empty dataset")
    return float(np.mean(query(X)))


class HonestOracle:
    """Answers every query with its sample mean over ``dataset``."""

    def __init__(self, dataset):
        X = np.atleast_2d(np.asarray(dataset, dtype=float))
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        self.dataset = X

    def respond(self, query) -> float:
        return honest_respond(query, self.dataset)

    def respond_family(self, family: QueryFamily) -> np.ndarray:
        return np.asarray(family.empirical_means(self.dataset), dtype=float)


def _pop_family(family, instance, n_mc, seed):
    if isinstance(family, QueryFamily):
        return np.asarray(family.population_means(instance), dtype=float)
    return np.array([population_expectation(q, instance, n_mc, seed) for q in family])


class PopulationOracle:
    """Answers ``E[q] + u tau_q`` with ``u`` uniform on ``[-scale, scale]``.

    ``scale = 0`` gives exact population means.  ``scale <= 1`` keeps every
    answer valid.
    """

    def __init__(self, instance, config: OracleConfig | None = None, scale: float = 0.0,
                 rng_seed=None, n_mc: int = 10**6):
        if not 0.0 <= scale <= 1.0:
            raise ValueError("scale must lie in [0, 1]")
        if scale > 0 and config is None:
            raise ValueError("a perturbed oracle needs a config for the tolerance")
        self.instance = instance
        self.config = config
        self.scale = scale
        self.rng = np.random.default_rng(rng_seed)
        self.n_mc = n_mc

    def _perturb(self, E, M):
        if self.scale == 0:
            return E
        tau = tolerance(self.config, M, np.clip(E, -M, M))
        return E + self.scale * self.rng.uniform(-1, 1, size=np.shape(E)) * tau

    def respond(self, query) -> float:
        E = population_expectation(query, self.instance, self.n_mc)
        return float(self._perturb(E, query.bound))

    def respond_family(self, family) -> np.ndarray:
        E = _pop_family(family, self.instance, self.n_mc, 0)
        return np.asarray(self._perturb(E, family.bound), dtype=float)


class AdversarialOracle:
    """The lower-bound oracle.

    Under the null it answers ``E_0[q]``.  Under an alternative ``P`` it
    answers ``E_0[q]`` when ``|E_0[q] - E_P[q]| <= tau(config, M, E_P[q])``
    and ``E_P[q]`` otherwise.  Exact expectations are used for registered
    families; custom queries fall back to Monte Carlo and mark the oracle
    ``approximate``.
    """

    def __init__(self, true_instance, config: OracleConfig, null_instance=None, n_mc: int = 10**6):
        self.true_instance = true_instance
        self.null_instance = matched_null(true_instance) if null_instance is None else null_instance
        self.config = config
        self.n_mc = n_mc
        self.approximate = False
        self._is_null = true_instance is self.null_instance or getattr(true_instance, "is_null", False)

    def _answer(self, E0, Ev, M):
        tau = tolerance(self.config, M, np.clip(Ev, -M, M))
        return np.where(np.abs(E0 - Ev) <= tau, E0, Ev)

    def respond(self, query: BoundedQuery) -> float:
        if query.population is None:
            self.approximate = True
        E0 = population_expectation(query, self.null_instance, self.n_mc)
        if self._is_null:
            return float(E0)
        Ev = population_expectation(query, self.true_instance, self.n_mc)
        return float(self._answer(E0, Ev, query.bound))

    def respond_family(self, family) -> np.ndarray:
        E0 = _pop_family(family, self.null_instance, self.n_mc, 0)
        if self._is_null:
            return E0
        Ev = _pop_family(family, self.true_instance, self.n_mc, 0)
        return np.asarray(self._answer(E0, Ev, family.bound), dtype=float)


def adversarial_respond(query, true_instance, config: OracleConfig, null_instance=None) -> float:
    """Single adversarial answer, see :class:`AdversarialOracle`."""
    return AdversarialOracle(true_instance, config, null_instance).respond(query)


@dataclass
class DistinguishableSet:
    """Alternatives separated from the null by a query, split by the sign of the gap."""

    query_id: str
    members: list
    c1: list
    c2: list


def _alt_list(alt_family):
    out = []
    for v in alt_family:
        out.append(v if isinstance(v, SignSupportVector) else SignSupportVector.from_array(v))
    return out


def distinguishable_set(query, alt_family, make_instance, config: OracleConfig,
                        null_instance=None) -> DistinguishableSet:
    """Alternatives ``v`` with ``|E_0[q] - E_v[q]| >= tau(config, M, E_v[q])``.

    Parameters
    ----------
    query : BoundedQuery
    alt_family : iterable
        Sign-support vectors indexing the alternatives.
    make_instance : callable
        Maps a sign-support vector (as a float array) to its instance.
    null_instance : optional
        Defaults to the matched null of the first alternative.
    """
    alts = _alt_list(alt_family)
    members, c1, c2 = [], [], []
    if not alts:
        return DistinguishableSet(query.id, members, c1, c2)
    if null_instance is None:
        null_instance = matched_null(make_instance(alts[0].array()))
    E0 = population_expectation(query, null_instance)
    for v in alts:
        Ev = population_expectation(query, make_instance(v.array()))
        tau = tolerance(config, query.bound, min(max(Ev, -query.bound), query.bound))
        if abs(E0 - Ev) >= tau:
            members.append(v)
            (c1 if Ev - E0 > 0 else c2).append(v)
    return DistinguishableSet(query.id, members, c1, c2)


def distinguishable_matrix(families, alt_matrix, make_instance, config: OracleConfig,
                           null_instance):
    """Boolean membership matrix ``[alternative, query]`` over several families.

    Also returns the null means and the per-alternative means (as a list of
    arrays, one per family) for reuse.
    """
    fams = [f if isinstance(f, QueryFamily) else [f] for f in families]
    E0 = [_pop_family(f, null_instance, 10**6, 0) for f in fams]
    rows = []
    for v in np.asarray(alt_matrix, dtype=float):
        inst = make_instance(v)
        hit = []
        for f, e0 in zip(fams, E0):
            ev = _pop_family(f, inst, 10**6, 0)
            M = f.bound if isinstance(f, QueryFamily) else f[0].bound
            tau = tolerance(config, M, np.clip(ev, -M, M))
            hit.append(np.abs(e0 - ev) >= tau)
        rows.append(np.concatenate(hit))
    return np.array(rows, dtype=bool).reshape(len(rows), -1), E0


@dataclass
class CoverageCertificate:
    """Outcome of a coverage check, serializable to JSON."""

    queries: list
    union_size: int
    gs_size: int
    witness: list | None
    transcripts_identical: bool
    approximate: bool = field(default=False, repr=False)

    def __post_init__(self):
        if (self.witness is not None) != (self.union_size < self.gs_size):
            raise ValueError("witness must be present iff the union is proper")
        if self.transcripts_identical and self.witness is None:
            raise ValueError("identical transcripts require a witness")

    def to_dict(self) -> dict:
        return {
            "queries": list(self.queries),
            "union_size": int(self.union_size),
            "gs_size": int(self.gs_size),
            "witness": None if self.witness is None else [int(e) for e in self.witness],
            "transcripts_identical": bool(self.transcripts_identical),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def coverage_certificate(algorithm_queries, alt_family, make_instance, config: OracleConfig,
                         null_instance=None, algorithm=None, return_transcripts=False):
    """Check whether the queries distinguish every alternative, and replay.

    Parameters
    ----------
    algorithm_queries : list
        Query families and/or single queries the algorithm may issue.
    alt_family : array or list
        The alternatives in enumeration order (lexicographic for G(s)).
    make_instance : callable
        Sign-support vector (float array) -> instance.
    algorithm : callable, optional
        The algorithm to replay; defaults to issuing ``algorithm_queries`` in
        order.

    Returns
    -------
    CoverageCertificate
        With the lexicographically first uncovered alternative as witness.
        If ``return_transcripts`` the two replay transcripts follow.
    """
    alts = np.array([v.array() if isinstance(v, SignSupportVector) else np.asarray(v, float)
                     for v in alt_family]) if not isinstance(alt_family, np.ndarray) else alt_family.astype(float)
    n_alt = len(alts)
    fams = list(algorithm_queries)
    ids = []
    for f in fams:
        ids.extend(f.ids if isinstance(f, QueryFamily) else [f.id])
    approximate = any(isinstance(f, BoundedQuery) and f.population is None for f in fams)
    if null_instance is None and n_alt:
        null_instance = matched_null(make_instance(alts[0]))
    if fams and n_alt:
        mat, _ = distinguishable_matrix(fams, alts, make_instance, config, null_instance)
        covered = mat.any(axis=1)
    else:
        covered = np.zeros(n_alt, dtype=bool)
    union = int(covered.sum())
    free = np.flatnonzero(~covered)
    witness = None
    identical = False
    tr0 = tr1 = None
    if free.size:
        w = alts[free[0]]
        witness = [int(e) for e in w]
        algo = algorithm if algorithm is not None else batch_algorithm(*fams)
        o0 = AdversarialOracle(null_instance, config, null_instance)
        o1 = AdversarialOracle(make_instance(w), config, null_instance)
        tr0 = run_algorithm(algo, o0, config)
        tr1 = run_algorithm(algo, o1, config)
        identical = tr0.identical_to(tr1)
        approximate = approximate or o0.approximate or o1.approximate
    cert = CoverageCertificate(ids, union, n_alt, witness, identical, approximate)
    if return_transcripts:
        return cert, tr0, tr1
    return cert
