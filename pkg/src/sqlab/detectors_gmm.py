"""Detection tests for sparse Gaussian mixtures as statistical query algorithms.

Families of projection queries ``q(x) = p(a) 1{|a| <= L}`` with
``a = w^T x / sqrt(c)`` cover all the mixture tests here: the exhaustive
sign-support test, diagonal thresholding, and both stages of the
covering-net tests for a general mean.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import BoundedQuery, QueryFamily, Transcript
from .models import (
    EnumerationCapError,
    GmmParams,
    enum_cap,
    gs_matrix,
    mixture_poly_moment,
    sample,
    trial_rng,
)

__all__ = [
    "DEFAULT_R",
    "IncompleteTranscriptError",
    "StageOrderError",
    "NetSizeError",
    "TruncationBiasError",
    "ProjectionFamily",
    "TestSpec",
    "exhaustive_queries",
    "diagonal_queries",
    "exhaustive_threshold",
    "diagonal_threshold",
    "net_threshold",
    "net_diagonal_threshold",
    "exhaustive_test",
    "diagonal_test",
    "max_statistic",
    "family_algorithm",
    "CoveringNet",
    "covering_net",
    "net_coverage_rate",
    "net_test_queries",
    "net_diagonal_queries",
    "net_algorithm",
    "net_test",
    "null_statistics",
    "calibrate_threshold",
    "truncation_bias",
    "check_truncation_bias",
    "estimator_to_detector",
    "support_to_detector",
    "clustering_to_detector",
]

DEFAULT_R = 6.0


class IncompleteTranscriptError(ValueError):
    """The transcript does not cover the whole query family."""


class StageOrderError(RuntimeError):
    """Second-stage queries built or answered before the first stage."""


class NetSizeError(RuntimeError):
    """A greedy net exceeded the ``(1 + 2/delta)^s`` size bound."""


class TruncationBiasError(ValueError):
    """Truncation changes a query mean by more than ``1/n``."""


def _sigma_parts(sigma, d):
    """Normalize a covariance argument into (kind, diag or matrix)."""
    if sigma is None:
        return "identity", None
    S = np.asarray(sigma, dtype=float)
    if S.ndim == 1:
        if S.size != d or np.any(S <= 0):
            raise ValueError("diagonal covariance must have d positive entries")
        return "diagonal", S
    if S.shape != (d, d):
        raise ValueError("covariance must be d x d")
    return "dense", S


class ProjectionFamily(QueryFamily):
    """Queries ``p_k(a_k) 1{|a_k| <= L}`` with ``a_k = w_k^T x / sqrt(c_k)``.

    Parameters
    ----------
    W : (K, d) array
        Projection directions.
    c : (K,) array
        Normalizers.
    L : float
        Truncation radius on the normalized projection.
    coeffs : tuple of three (K,) arrays or scalars
        ``(c2, c1, c0)`` of the quadratic ``p_k``.
    bound : float
        Query bound ``M``.
    row_bound : callable, optional
        ``row_bound(X)`` giving, per sample, an upper bound on
        ``max_k |a_k|``.  Samples under ``L`` never hit the truncation,
        which lets :meth:`empirical_means` use second-moment sufficient
        statistics.  Samples above are corrected exactly.
    """

    def __init__(self, W, c, L, coeffs, bound, tag, prefix, row_bound=None, meta=None):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        super().__init__(bound, W.shape[0])
        self.W = W
        self.c = np.broadcast_to(np.asarray(c, dtype=float), (self.size,)).copy()
        self.sqc = np.sqrt(self.c)
        self.L = float(L)
        self.coeffs = tuple(np.broadcast_to(np.asarray(a, dtype=float), (self.size,)).copy() for a in coeffs)
        self.tag = tag
        self.prefix = prefix
        self._row_bound = row_bound
        self.meta = {} if meta is None else dict(meta)

    @property
    def d(self):
        return self.W.shape[1]

    def _p(self, A, idx=slice(None)):
        c2, c1, c0 = (a[idx] for a in self.coeffs)
        return c2 * A * A + c1 * A + c0

    def query(self, k: int) -> BoundedQuery:
        w = self.W[k] / self.sqc[k]
        c2, c1, c0 = (float(a[k]) for a in self.coeffs)
        L = self.L

        def ev(X, w=w):
            a = X @ w
            return (c2 * a * a + c1 * a + c0) * (np.abs(a) <= L)

        return BoundedQuery(f"{self.prefix}[{k}]", self.bound, ev, self.tag,
                            population=lambda inst, k=k: float(self.population_means(inst, idx=[k])[0]))

    def projections(self, X) -> np.ndarray:
        return (np.atleast_2d(X) @ self.W.T) / self.sqc

    def evaluate(self, X) -> np.ndarray:
        A = self.projections(X)
        vals = self._p(A) * (np.abs(A) <= self.L)
        return np.clip(vals, -self.bound, self.bound)

    def row_bound(self, X) -> np.ndarray:
        if self._row_bound is not None:
            return self._row_bound(X)
        # Cauchy-Schwarz fallback, valid for any directions
        wn = np.sqrt(np.einsum("ij,ij->i", self.W, self.W)) / self.sqc
        return np.linalg.norm(X, axis=1) * wn.max()

    def empirical_means(self, X) -> np.ndarray:
        """Sample means of all members; exact, via sufficient statistics."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        c2, c1, c0 = self.coeffs
        out = np.zeros(self.size)
        if np.any(c2 != 0):
            G = X.T @ X / n
            out += c2 * np.einsum("ij,ij->i", self.W @ G, self.W) / self.c
        if np.any(c1 != 0):
            out += c1 * (self.W @ X.mean(axis=0)) / self.sqc
        out += c0
        risky = np.flatnonzero(self.row_bound(X) > self.L)
        for start in range(0, risky.size, 256):
            A = self.projections(X[risky[start:start + 256]])
            out -= np.sum(self._p(A) * (np.abs(A) > self.L), axis=0) / n
        # clipping never binds for the registered polynomials, but keep the contract
        return np.clip(out, -self.bound, self.bound)

    def population_means(self, instance, idx=None, untruncated=False) -> np.ndarray:
        """Exact means under a mixture instance (closed-form truncated moments)."""
        if not isinstance(instance, GmmParams):
            raise TypeError("projection queries need a Gaussian mixture instance")
        sel = slice(None) if idx is None else np.asarray(idx)
        W = self.W[sel]
        sqc = self.sqc[sel]
        comps = instance.components()
        weights = np.array([w for w, _ in comps])
        means = np.stack([(W @ m) / sqc for _, m in comps], axis=-1)
        sd = np.sqrt(instance.quad_form(W)) / sqc
        L = math.inf if untruncated else self.L
        coeffs = tuple(a[sel] for a in self.coeffs)
        return np.asarray(mixture_poly_moment(coeffs, weights, means, sd, L), dtype=float)


def _diag_topk_bound(sig_diag, k):
    """Per-row bound ``sqrt(sum of the k largest x_j^2 / sigma_j)``."""
    sig = np.ones(1) if sig_diag is None else sig_diag

    def rb(X):
        Q = X * X / sig
        if k >= Q.shape[1]:
            return np.sqrt(Q.sum(axis=1))
        part = np.partition(Q, Q.shape[1] - k, axis=1)[:, -k:]
        return np.sqrt(part.sum(axis=1))

    return rb


def _inv_apply(kind, S, V):
    if kind == "identity":
        return V.astype(float)
    if kind == "diagonal":
        return V / S
    return np.linalg.solve(S, V.T).T


def exhaustive_queries(d: int, s: int, sigma=None, R: float = DEFAULT_R, n: int = 1000) -> ProjectionFamily:
    """One query per ``v`` in G(s):
    ``(v^T S^{-1} x)^2 / (v^T S^{-1} v) 1{|v^T S^{-1} x| <= R sqrt(log n) sqrt(v^T S^{-1} v)}``.

    ``sigma`` is ``None`` (identity), a length-d vector (diagonal) or a
    ``d x d`` matrix.  The bound is ``R^2 log n``.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    kind, S = _sigma_parts(sigma, d)
    V = gs_matrix(d, s)
    W = _inv_apply(kind, S, V)
    c = np.einsum("ij,ij->i", W, V.astype(float))
    L = R * math.sqrt(math.log(n))
    rb = _diag_topk_bound(S, s) if kind != "dense" else None
    return ProjectionFamily(W, c, L, (1.0, 0.0, 0.0), L * L, "gmm-exhaustive", "gmm-exhaustive",
                            row_bound=rb, meta=dict(d=d, s=s, R=R, n=n, sigma_kind=kind))


def diagonal_queries(d: int, sigma_diag=None, R: float = DEFAULT_R, n: int = 1000) -> ProjectionFamily:
    """Queries ``x_j^2 / sigma_j 1{|x_j / sqrt(sigma_j)| <= R sqrt(log n)}``, ``j = 1..d``."""
    if R <= 0:
        raise ValueError("R must be positive")
    sig = np.ones(d) if sigma_diag is None else np.asarray(sigma_diag, dtype=float).ravel()
    if sig.size != d or np.any(sig <= 0):
        raise ValueError("need d positive variances")
    W = np.diag(1.0 / sig)
    L = R * math.sqrt(math.log(n))
    return ProjectionFamily(W, 1.0 / sig, L, (1.0, 0.0, 0.0), L * L, "gmm-diagonal", "gmm-diagonal",
                            row_bound=_diag_topk_bound(sig, 1), meta=dict(d=d, s=1, R=R, n=n))


# ---------------------------------------------------------------------------
# thresholds and tests

def exhaustive_threshold(R, xi, n, d, s) -> float:
    return 1.0 + 2.0 * R * R * math.log(n) * math.sqrt((s * math.log(2 * d) + math.log(1.0 / xi)) / n)


def diagonal_threshold(R, xi, n, d) -> float:
    return 1.0 + 2.0 * R * R * math.log(n) * math.sqrt(math.log(d / xi) / n)


def net_threshold(R, xi, n, d, s) -> float:
    return 1.0 + 16.0 * R * R * math.log(n) * math.sqrt(2.0 * (s * math.log(5 * d) + math.log(1.0 / xi)) / n)


def net_diagonal_threshold(R, xi, n, d) -> float:
    return 1.0 + 16.0 * R * R * math.log(n) * math.sqrt(math.log(2 * d / xi) / n)


@dataclass
class TestSpec:
    """A detector's decision rule.

    ``family`` is one of ``exhaustive``, ``diagonal``, ``net``,
    ``net-diagonal``; ``size`` is the number of responses the rule reads.
    """

    __test__ = False  # not a pytest class

    family: str
    threshold: float
    threshold_mode: str
    R: float
    xi: float
    n: int
    d: int
    s: int
    size: int
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.threshold_mode not in ("formula", "calibrated"):
            raise ValueError("threshold_mode must be formula or calibrated")

    @classmethod
    def formula(cls, family, R, xi, n, d, s, size):
        f = {
            "exhaustive": lambda: exhaustive_threshold(R, xi, n, d, s),
            "diagonal": lambda: diagonal_threshold(R, xi, n, d),
            "net": lambda: net_threshold(R, xi, n, d, s),
            "net-diagonal": lambda: net_diagonal_threshold(R, xi, n, d),
        }[family]
        return cls(family, f(), "formula", R, xi, n, d, s, size)

    def with_threshold(self, thr):
        return TestSpec(self.family, float(thr), "calibrated", self.R, self.xi, self.n, self.d,
                        self.s, self.size, dict(self.extras))

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _values(transcript):
    if isinstance(transcript, Transcript):
        return transcript.values()
    return np.asarray(transcript, dtype=float)


def max_statistic(transcript, size=None) -> float:
    vals = _values(transcript)
    if size is not None and vals.size != size:
        raise IncompleteTranscriptError(f"expected {size} responses, got {vals.size}")
    if vals.size == 0:
        raise IncompleteTranscriptError("empty transcript")
    return float(vals.max())


def exhaustive_test(transcript, spec: TestSpec) -> int:
    """``1{max_v z_v >= threshold}``."""
    return int(max_statistic(transcript, spec.size) >= spec.threshold)


def diagonal_test(transcript, spec: TestSpec) -> int:
    """``1{max_j z_j >= threshold}``."""
    return int(max_statistic(transcript, spec.size) >= spec.threshold)


def family_algorithm(family: QueryFamily, spec: TestSpec | None = None):
    """Algorithm issuing ``family`` once; returns the decision when ``spec`` is given."""
    def algo():
        z = yield family
        if spec is None:
            return z
        return int(np.max(z) >= spec.threshold)
    return algo


# ---------------------------------------------------------------------------
# covering nets

@dataclass
class CoveringNet:
    """A delta-cover of each rescaled sparse sphere ``{v^T S^{-1} v = 1, supp v = S}``.

    ``elements`` stacks all net vectors; ``support_index[k]`` gives the
    support (an index into ``supports``) of element ``k``.
    """

    delta: float
    sigma: np.ndarray | None
    d: int
    s: int
    supports: list
    elements: np.ndarray
    support_index: np.ndarray
    per_support: int

    def __len__(self):
        return self.elements.shape[0]

    def sigma_inv(self):
        if self.sigma is None:
            return np.eye(self.d)
        S = np.asarray(self.sigma, dtype=float)
        return np.diag(1.0 / S) if S.ndim == 1 else np.linalg.inv(S)


def _unit_sphere(m, s, rng):
    if s == 1:
        return np.array([[1.0], [-1.0]])
    G = rng.standard_normal((m, s))
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def _greedy_cover(P, radius, limit):
    """Farthest-point selection over probe set ``P`` until every probe is within ``radius``."""
    chosen = [0]
    dist = np.linalg.norm(P - P[0], axis=1)
    while dist.max() > radius:
        k = int(np.argmax(dist))
        chosen.append(k)
        if len(chosen) > limit:
            raise NetSizeError(f"greedy net exceeded the size bound {limit}")
        dist = np.minimum(dist, np.linalg.norm(P - P[k], axis=1))
    return P[chosen]


def covering_net(delta: float, sigma, d: int, s: int, rng_seed=0, shrink: float = 0.9) -> CoveringNet:
    """Greedy farthest-point delta-net of every rescaled sparse sphere.

    The sphere for support ``S`` is the image of the Euclidean unit sphere in
    ``R^s`` under ``u -> L^{-T} u`` with ``L L^T = (S^{-1})_{SS}``, an isometry
    for the ``S^{-1}`` metric.  One Euclidean net, built on
    ``200 (1 + 2/delta)^s`` random probes at radius ``shrink * delta``, is
    therefore mapped onto every support.

    Raises
    ------
    NetSizeError
        If the net would exceed ``(1 + 2/delta)^s`` points per support.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    kind, S = _sigma_parts(sigma, d)
    if kind == "dense" and d > 64:
        raise ValueError("dense covariance supported only for d <= 64")
    limit = (1.0 + 2.0 / delta) ** s
    n_supp = math.comb(d, s)
    rng = np.random.default_rng(rng_seed)
    probes = _unit_sphere(int(math.ceil(200 * limit)), s, rng)
    base = probes if s == 1 else _greedy_cover(probes, shrink * delta, int(math.floor(limit)))
    m = base.shape[0]
    if n_supp * m > enum_cap():
        raise EnumerationCapError(f"net of {n_supp * m} elements exceeds the enumeration cap")
    if kind == "identity":
        Sinv = None
    elif kind == "diagonal":
        Sinv = np.diag(1.0 / S)
    else:
        Sinv = np.linalg.inv(S)
    supports = []
    elems = np.zeros((n_supp * m, d))
    sidx = np.repeat(np.arange(n_supp), m)

    for t, supp in enumerate(itertools.combinations(range(d), s)):
        supp = list(supp)
        supports.append(tuple(supp))
        if Sinv is None:
            vS = base
        else:
            Lc = np.linalg.cholesky(Sinv[np.ix_(supp, supp)])
            vS = np.linalg.solve(Lc.T, base.T).T
        elems[t * m:(t + 1) * m][:, supp] = vS
    return CoveringNet(delta, None if S is None else S, d, s, supports, elems, sidx, m)


def net_coverage_rate(net: CoveringNet, n_probes: int = 2000, rng_seed=1) -> float:
    """Fraction of random sphere points within ``delta`` (in the ``S^{-1}`` metric) of the net.

    Probes are drawn on random supports, normalized directly with ``S^{-1}``.
    """
    rng = np.random.default_rng(rng_seed)
    Sinv = net.sigma_inv()
    hits = 0
    for _ in range(n_probes):
        t = int(rng.integers(len(net.supports)))
        supp = list(net.supports[t])
        u = np.zeros(net.d)
        u[supp] = rng.standard_normal(net.s)
        u /= math.sqrt(u @ Sinv @ u)
        E = net.elements[net.support_index == t]
        D = E - u
        dist2 = np.einsum("ij,jk,ik->i", D, Sinv, D)
        hits += dist2.min() <= net.delta**2
    return hits / n_probes


def _net_directions(net: CoveringNet):
    if net.sigma is None:
        return net.elements.copy()
    S = np.asarray(net.sigma)
    return net.elements / S if S.ndim == 1 else np.linalg.solve(S, net.elements.T).T


def net_test_queries(net: CoveringNet, R: float = DEFAULT_R, n: int = 1000):
    """Two-stage family for the covering-net test.

    Returns ``(stage1, make_stage2)``.  Stage one asks
    ``a_v 1{|a_v| <= L}`` with ``a_v = v^T S^{-1} x`` and ``L = R sqrt(log n)``;
    ``make_stage2(z)`` builds ``(a_v - z_v)^2 1{|a_v| <= L}`` from the
    realized stage-one responses ``z``.
    """
    W = _net_directions(net)
    return _two_stage(W, R, n, "gmm-net", dict(d=net.d, s=net.s, R=R, n=n))


def net_diagonal_queries(d: int, sigma_diag=None, R: float = DEFAULT_R, n: int = 1000):
    """Two-stage coordinate family: ``x_j / sqrt(sigma_j)`` in place of ``a_v``."""
    sig = np.ones(d) if sigma_diag is None else np.asarray(sigma_diag, dtype=float).ravel()
    W = np.diag(1.0 / np.sqrt(sig))
    return _two_stage(W, R, n, "gmm-net-diagonal", dict(d=d, s=1, R=R, n=n))


def _two_stage(W, R, n, prefix, meta):
    L = R * math.sqrt(math.log(n))
    K = W.shape[0]
    stage1 = ProjectionFamily(W, 1.0, L, (0.0, 1.0, 0.0), L, "gmm-net-stage1", prefix + "-stage1", meta=meta)

    def make_stage2(z):
        if z is None:
            raise StageOrderError("stage-two queries need the stage-one responses")
        z = np.asarray(z, dtype=float).ravel()
        if z.size != K:
            raise StageOrderError(f"expected {K} stage-one responses, got {z.size}")
        return ProjectionFamily(W, 1.0, L, (1.0, -2.0 * z, z * z), 4.0 * L * L, "gmm-net-stage2",
                                prefix + "-stage2", meta=dict(meta, z=None))

    return stage1, make_stage2


def net_algorithm(stage1, make_stage2, spec: TestSpec | None = None):
    """Adaptive two-stage algorithm; returns the decision when ``spec`` is given."""
    def algo():
        z1 = yield stage1
        z2 = yield make_stage2(z1)
        if spec is None:
            return z2
        return int(np.max(z2) >= spec.threshold)
    return algo


def net_test(transcript: Transcript, spec: TestSpec) -> int:
    """``1{max_v zbar_v >= threshold}`` over the stage-two responses."""
    if len(transcript) != spec.size:
        raise IncompleteTranscriptError(f"expected {spec.size} responses, got {len(transcript)}")
    half = spec.size // 2
    ids = transcript.ids
    if not (all("-stage1[" in i for i in ids[:half]) and all("-stage2[" in i for i in ids[half:])):
        raise StageOrderError("stage-one responses must precede stage-two responses")
    return int(transcript.values()[half:].max() >= spec.threshold)


# ---------------------------------------------------------------------------
# calibration

def _statistic_fn(statistic):
    if isinstance(statistic, QueryFamily):
        return lambda X: float(np.max(statistic.empirical_means(X)))
    if callable(statistic):
        return statistic
    raise TypeError("statistic must be a query family or a callable on datasets")


def null_statistics(statistic, null_instance, trials: int, n: int, seed=0, keys=(), threads: int = 1) -> np.ndarray:
    """Test statistic on ``trials`` fresh null datasets (honest oracle).

    Trial ``k`` draws its data from :func:`sqlab.models.trial_rng` ``(seed, *keys, k)``.
    """
    f = _statistic_fn(statistic)
    run = lambda k: f(sample(null_instance, n, trial_rng(seed, *keys, k)))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            return np.array(list(ex.map(run, range(trials))))
    return np.array([run(k) for k in range(trials)])


def calibrate_threshold(statistic, null_instance, xi: float, trials: int, n: int = 1000, seed=0,
                        keys=(), threads: int = 1) -> float:
    """Empirical ``(1 - xi)``-quantile of the null statistic.

    ``statistic`` is a query family (the statistic is the maximal honest
    response) or a callable mapping a dataset to a real.  The quantile is
    the order statistic at or above the ``1 - xi`` level.
    """
    if trials < 100:
        raise ValueError("calibration needs at least 100 trials")
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    stats = null_statistics(statistic, null_instance, trials, n, seed, keys, threads)
    return float(np.quantile(stats, 1.0 - xi, method="higher"))


# ---------------------------------------------------------------------------
# truncation bias

def truncation_bias(family: ProjectionFamily, instance, idx=None) -> np.ndarray:
    """``|E[q] - E[q*]|`` with ``q*`` the untruncated polynomial."""
    a = family.population_means(instance, idx=idx)
    b = family.population_means(instance, idx=idx, untruncated=True)
    return np.abs(a - b)


def check_truncation_bias(family: ProjectionFamily, instances, n: int, idx=None) -> float:
    """Largest bias over ``instances``; raises if it exceeds ``1/n``."""
    worst = max(float(truncation_bias(family, inst, idx).max()) for inst in instances)
    if worst > 1.0 / n:
        raise TruncationBiasError(f"truncation bias {worst:.3g} exceeds 1/n = {1.0 / n:.3g}")
    return worst


# ---------------------------------------------------------------------------
# reductions from estimation, support recovery and clustering

def estimator_to_detector(estimator, gamma_n: float, sigma=None):
    """Detector ``1{dmu_hat^T S^{-1} dmu_hat >= gamma_n / 3}``.

    ``estimator`` is an algorithm whose return value is the estimated mean
    difference.
    """
    def algo():
        dm = np.asarray((yield from estimator()), dtype=float)
        kind, S = _sigma_parts(sigma, dm.size)
        q = float(_inv_apply(kind, S, dm[None])[0] @ dm)
        return int(q >= gamma_n / 3.0)
    return algo


def support_to_detector(selector, reference_support):
    """Detector ``1{S_hat == reference_support}``; the reference is empty under the null."""
    ref = frozenset(int(i) for i in reference_support)

    def algo():
        S_hat = yield from selector()
        return int(frozenset(int(i) for i in S_hat) == ref)
    return algo


def clustering_to_detector(assigner, R: float, n: int, v0, mu, xi: float, d: int,
                           sigma=None, C: float = 4.0):
    """Detector built from a clustering rule ``F`` with one extra query.

    The extra query is ``g(x) 1{F(x) = 1} 1{|g(x)| <= R sqrt(log n)}`` with
    ``g(x) = v0^T S^{-1} (x - mu)``.  The decision is
    ``1{|zbar| > C sqrt(log n log(d / xi) / n)}``.
    """
    v0 = np.asarray(v0, dtype=float)
    mu = np.asarray(mu, dtype=float)
    kind, S = _sigma_parts(sigma, v0.size)
    w = _inv_apply(kind, S, v0[None])[0]
    L = R * math.sqrt(math.log(n))
    thr = C * math.sqrt(math.log(n) * math.log(d / xi) / n)

    def algo():
        F = yield from assigner()

        def ev(X):
            g = (X - mu) @ w
            return g * (np.asarray(F(X)) == 1) * (np.abs(g) <= L)

        zbar = yield BoundedQuery("cluster-extra", L, ev, "custom")
        return int(abs(zbar) > thr)

    algo.threshold = thr
    return algo
