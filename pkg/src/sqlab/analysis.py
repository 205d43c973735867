"""Chi-square cross-moments, Le Cam bounds, G(s) overlap combinatorics and
Hermite expansions.

Each closed form is paired with an independent numerical route: Monte Carlo
over likelihood-ratio products for the cross-moments, brute-force
enumeration for the overlap table, quadrature for Hermite coefficients.

Cross-moments are ``E_0[(dP_{v1}/dP_0)(dP_{v2}/dP_0)]`` for the instances
built in :mod:`sqlab.models`:

* known covariance: ``nu N(-beta (1 - nu) v, I) + (1 - nu) N(beta nu v, I)``
  against ``N(0, I)``;
* unknown covariance: ``1/2 N(-beta v, I - beta^2 v v^T) + 1/2 N(beta v, .)``
  against ``N(0, I)``;
* regression: ``Y = eta beta v^T X + eps`` against ``Y ~ N(0, sigma^2 + s beta^2)``
  independent of ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import hermite_e
from scipy import integrate, stats

from .models import gs_matrix, gs_size

__all__ = [
    "SingularityError",
    "QuadratureOrderError",
    "CrossMomentResult",
    "chi2_cross_gmm_known",
    "chi2_cross_gmm_unknown",
    "chi2_cross_reg",
    "cross_moment",
    "mc_cross_gmm_known",
    "mc_cross_gmm_unknown",
    "mc_cross_reg",
    "reg_lr_fourth_moment_finite",
    "CjTable",
    "cj_table",
    "cj_table_bruteforce",
    "GrowthReport",
    "growth_check",
    "normalized_hermite",
    "hermite_coeffs",
    "hermite_cross_moment",
    "lecam_risk_lower_bound",
    "mixture_chi2",
    "mixture_chi2_grouped",
    "query_chi2_lower_bound",
]


class SingularityError(ValueError):
    """Parameters outside the domain where the cross-moment is finite."""


class QuadratureOrderError(RuntimeError):
    """Hermite coefficients miss too much of the function's second moment."""


def _overlap(v1, v2) -> int:
    a = np.asarray(v1, dtype=float).ravel()
    b = np.asarray(v2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("vectors must have the same dimension")
    return int(round(float(a @ b)))


def _sparsity(v) -> int:
    return int(np.count_nonzero(np.asarray(v)))


# ---------------------------------------------------------------------------
# closed forms

def chi2_cross_gmm_known(v1, v2, beta: float, nu: float = 0.5, form: str = "exp") -> float:
    """Cross-moment for the known-covariance mixture.

    ``E_U[exp(beta^2 U <v1, v2>)]`` with ``U`` taking ``(1 - nu)^2``,
    ``-nu (1 - nu)``, ``nu^2`` with probabilities ``nu^2``, ``2 nu (1 - nu)``,
    ``(1 - nu)^2``.

    ``form="cosh"`` replaces ``exp`` by ``cosh``.  The two agree at
    ``nu = 1/2``, where ``U`` is symmetric, and differ otherwise.
    """
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    k = _overlap(v1, v2)
    U = np.array([(1 - nu) ** 2, -nu * (1 - nu), nu**2])
    P = np.array([nu**2, 2 * nu * (1 - nu), (1 - nu) ** 2])
    if form == "exp":
        f = np.exp(beta * beta * U * k)
    elif form == "cosh":
        f = np.cosh(beta * beta * U * k)
    else:
        raise ValueError("form must be exp or cosh")
    return float(P @ f)


def _unknown_term(w, b2):
    r = 1.0 - b2 * b2 * w * w
    return r ** -0.5 * math.exp(-b2 * b2 * w * w / r) * math.cosh(b2 * w / r)


def chi2_cross_gmm_unknown(v1, v2, beta: float, w_law: str = "overlap") -> float:
    """Cross-moment for the unknown-covariance mixture.

    ``f(W) = (1 - beta^4 W^2)^{-1/2} exp(-beta^4 W^2 / (1 - beta^4 W^2))
    cosh(beta^2 W / (1 - beta^4 W^2))`` evaluated at ``W = <v1, v2>``.

    ``w_law="binomial"`` instead averages ``f`` over ``W`` a sum of
    ``|<v1, v2>|`` Rademacher signs.  It coincides with the default for
    ``|<v1, v2>| <= 1`` and disagrees with the likelihood-ratio oracle for
    larger overlaps; it is kept for comparison.

    Raises
    ------
    SingularityError
        If ``beta^4 W^2 >= 1`` for a reachable ``W``.
    """
    k = abs(_overlap(v1, v2))
    b2 = beta * beta
    if b2 * b2 * k * k >= 1:
        raise SingularityError("beta^4 <v1, v2>^2 must be below 1")
    if w_law == "overlap":
        return float(_unknown_term(k, b2))
    if w_law == "binomial":
        return float(sum(math.comb(k, j) * _unknown_term(k - 2 * j, b2) for j in range(k + 1)) / 2.0**k)
    raise ValueError("w_law must be overlap or binomial")


def chi2_cross_reg(v1, v2, beta: float, sigma: float = 1.0, s: int | None = None, nfold: int | None = None) -> float:
    """Cross-moment for the regression mixture, ``(1 - beta^4 k^2 / (sigma^2 + s beta^2)^2)^{-1}``.

    ``k = <v1, v2>``.  With ``nfold = n`` the ``n``-sample value, the same
    base to the power ``n``.
    """
    k = _overlap(v1, v2)
    s = _sparsity(v1) if s is None else s
    s0 = sigma * sigma + s * beta * beta
    if beta * beta * abs(k) >= s0:
        raise SingularityError("need beta^2 |<v1, v2>| < sigma^2 + s beta^2")
    base = 1.0 / (1.0 - (beta**4 * k * k) / (s0 * s0))
    return float(base if nfold is None else base ** int(nfold))


@dataclass
class CrossMomentResult:
    value: float
    kind: str
    inputs: dict = field(default_factory=dict)


def cross_moment(kind: str, v1, v2, **kw) -> CrossMomentResult:
    """Dispatch on ``kind`` in ``gmm-known``, ``gmm-unknown``, ``regression``."""
    fn = {"gmm-known": chi2_cross_gmm_known, "gmm-unknown": chi2_cross_gmm_unknown,
          "regression": chi2_cross_reg}[kind]
    inputs = dict(kw, v1=[int(e) for e in np.ravel(v1)], v2=[int(e) for e in np.ravel(v2)])
    return CrossMomentResult(fn(v1, v2, **kw), kind, inputs)


# ---------------------------------------------------------------------------
# Monte Carlo likelihood-ratio oracles

def _mc(logratio_pair, sampler, n_mc, seed, chunk=200_000):
    rng = np.random.default_rng(seed)
    tot = tot2 = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        Z = sampler(rng, m)
        la, lb = logratio_pair(Z)
        p = np.exp(la + lb)
        tot += p.sum()
        tot2 += (p * p).sum()
        done += m
    mean = tot / n_mc
    return mean, math.sqrt(max(tot2 / n_mc - mean * mean, 0.0) / n_mc)


def _mixture_logpdf(X, comps):
    logs = [math.log(w) + stats.multivariate_normal(mean=m, cov=c).logpdf(X) for w, m, c in comps]
    return np.logaddexp.reduce(np.stack(logs), axis=0)


def mc_cross_gmm_known(v1, v2, beta, nu=0.5, n_mc=10**6, seed=0):
    """Monte Carlo ``(mean, se)`` of the likelihood-ratio product under ``N(0, I)``."""
    v1, v2 = (np.asarray(v, dtype=float).ravel() for v in (v1, v2))
    d = v1.size
    I = np.eye(d)
    null = stats.multivariate_normal(mean=np.zeros(d), cov=I)

    def lr(X):
        l0 = null.logpdf(X)
        return tuple(_mixture_logpdf(X, [(nu, -beta * (1 - nu) * v, I), (1 - nu, beta * nu * v, I)]) - l0
                     for v in (v1, v2))

    return _mc(lr, lambda rng, m: rng.standard_normal((m, d)), n_mc, seed)


def mc_cross_gmm_unknown(v1, v2, beta, n_mc=10**6, seed=0):
    v1, v2 = (np.asarray(v, dtype=float).ravel() for v in (v1, v2))
    d = v1.size
    null = stats.multivariate_normal(mean=np.zeros(d), cov=np.eye(d))

    def lr(X):
        l0 = null.logpdf(X)
        out = []
        for v in (v1, v2):
            S = np.eye(d) - beta * beta * np.outer(v, v)
            out.append(_mixture_logpdf(X, [(0.5, -beta * v, S), (0.5, beta * v, S)]) - l0)
        return tuple(out)

    return _mc(lr, lambda rng, m: rng.standard_normal((m, d)), n_mc, seed)


def reg_lr_fourth_moment_finite(beta: float, sigma: float, s: int) -> bool:
    """Whether the regression likelihood ratio has a finite fourth moment under the null.

    Only then does the Monte Carlo oracle's standard error mean anything.
    With ``t = s beta^2`` and ``sigma0^2 = sigma^2 + t``, the ``y``-integral of
    ``phi_sigma(y - m)^4 / phi_sigma0(y)^3`` is finite iff
    ``a = 2 / sigma^2 - 3 / (2 sigma0^2) > 0`` and grows like ``exp(c m^2)``
    with ``c = 4 / (sigma^4 a) - 2 / sigma^2``; averaging over
    ``m ~ N(0, t)`` needs ``2 c t < 1``.
    """
    t = s * beta * beta
    s2 = sigma * sigma
    a = 2.0 / s2 - 1.5 / (s2 + t)
    if a <= 0:
        return False
    c = 4.0 / (s2 * s2 * a) - 2.0 / s2
    return 2.0 * c * t < 1.0


def mc_cross_reg(v1, v2, beta, sigma=1.0, n_mc=10**6, seed=0):
    """Monte Carlo oracle for :func:`chi2_cross_reg` (one sample).

    See :func:`reg_lr_fourth_moment_finite` for when the standard error is
    trustworthy.
    """
    v1, v2 = (np.asarray(v, dtype=float).ravel() for v in (v1, v2))
    d = v1.size
    s = _sparsity(v1)
    sd0 = math.sqrt(sigma * sigma + s * beta * beta)

    def sampler(rng, m):
        return np.column_stack([sd0 * rng.standard_normal(m), rng.standard_normal((m, d))])

    def lr(D):
        y, X = D[:, 0], D[:, 1:]
        l0 = stats.norm.logpdf(y, scale=sd0)
        out = []
        for v in (v1, v2):
            mu = beta * (X @ v)
            l1 = np.logaddexp(stats.norm.logpdf(y, loc=mu, scale=sigma),
                              stats.norm.logpdf(y, loc=-mu, scale=sigma)) - math.log(2.0)
            out.append(l1 - l0)
        return tuple(out)

    return _mc(lr, sampler, n_mc, seed)


# ---------------------------------------------------------------------------
# overlap combinatorics

@dataclass
class CjTable:
    """Sizes of ``C_j(v) = {v' in G(s) : |<v, v'>| = s - j}``, ``j = 0..s``.

    ``N[(a, b)]`` counts ``v'`` agreeing with ``v`` in sign on ``a``
    coordinates of its support and disagreeing on ``b``; ``M[k]`` sums
    ``N`` over ``a - b = k``.
    """

    d: int
    s: int
    sizes: tuple
    N: dict
    M: dict

    @property
    def total(self) -> int:
        return sum(self.sizes)


def cj_table(d: int, s: int) -> CjTable:
    """Exact (integer) overlap table from the counting formula."""
    if not 0 <= s <= d:
        raise ValueError("need 0 <= s <= d")
    N = {}
    for a in range(s + 1):
        for b in range(s - a + 1):
            N[(a, b)] = math.comb(s, a) * math.comb(s - a, b) * math.comb(d - s, s - a - b) * 2 ** (s - a - b)
    M = {k: 0 for k in range(-s, s + 1)}
    for (a, b), c in N.items():
        M[a - b] += c
    sizes = tuple(M[0] if j == s else M[s - j] + M[j - s] for j in range(s + 1))
    return CjTable(d, s, sizes, N, M)


def cj_table_bruteforce(d: int, s: int, ref=None) -> tuple:
    """Sizes by enumerating G(s) against ``ref`` (default: first element)."""
    G = gs_matrix(d, s).astype(np.int64)
    v = G[0] if ref is None else np.asarray(ref, dtype=np.int64)
    ov = np.abs(G @ v)
    return tuple(int(np.sum(ov == s - j)) for j in range(s + 1))


@dataclass
class GrowthReport:
    holds: bool
    ratios: tuple
    bound: float


def growth_check(table: CjTable) -> GrowthReport:
    """Check ``|C_{j+1}| / |C_j| >= d / (2 s^2)`` for ``j = 0..s-1``."""
    bound = table.d / (2.0 * table.s**2) if table.s else math.inf
    ratios = tuple(table.sizes[j + 1] / table.sizes[j] if table.sizes[j] else math.inf
                   for j in range(table.s))
    return GrowthReport(all(r >= bound for r in ratios), ratios, bound)


# ---------------------------------------------------------------------------
# Hermite expansions

def normalized_hermite(k: int, x):
    """Orthonormal (probabilists') Hermite polynomial ``He_k(x) / sqrt(k!)``."""
    c = np.zeros(k + 1)
    c[k] = 1.0
    return hermite_e.hermeval(np.asarray(x, dtype=float), c) / math.sqrt(math.factorial(k))


def hermite_coeffs(function, K: int, order: int | None = None, method: str = "gauss",
                   points=None, tail_tol: float | None = None) -> np.ndarray:
    """Coefficients ``a_k = E[f(Z) H_k(Z)]``, ``k = 0..K``, for ``Z ~ N(0, 1)``.

    ``method="gauss"`` uses Gauss-Hermite quadrature of ``order`` nodes
    (at least ``4K``); ``method="quad"`` uses adaptive quadrature with
    optional breakpoints ``points`` (for discontinuous ``f``).

    With ``tail_tol`` set, raises :class:`QuadratureOrderError` when the
    coefficients capture less than ``1 - tail_tol`` of ``E[f(Z)^2]``.
    """
    if method == "gauss":
        order = max(4 * K, 64) if order is None else order
        if order < 4 * K:
            raise QuadratureOrderError("Gauss-Hermite order must be at least 4K")
        x, w = hermite_e.hermegauss(order)
        w = w / math.sqrt(2 * math.pi)
        fx = np.asarray(function(x), dtype=float)
        coeffs = np.array([np.sum(w * fx * normalized_hermite(k, x)) for k in range(K + 1)])
        energy = float(np.sum(w * fx * fx))
    elif method == "quad":
        brk = sorted(points or [])

        def integ(g):
            edges = [-np.inf] + brk + [np.inf]
            return sum(integrate.quad(lambda t: g(t) * math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi),
                                      a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                       for a, b in zip(edges[:-1], edges[1:]))

        f1 = lambda t: float(np.asarray(function(np.array([t])))[0])
        coeffs = np.array([integ(lambda t, k=k: f1(t) * float(normalized_hermite(k, t))) for k in range(K + 1)])
        energy = integ(lambda t: f1(t) ** 2)
    else:
        raise ValueError("method must be gauss or quad")
    if tail_tol is not None and energy > 0:
        missing = energy - float(coeffs @ coeffs)
        if missing > tail_tol * energy:
            raise QuadratureOrderError(f"coefficients miss {missing / energy:.3g} of the energy")
    return coeffs


def hermite_cross_moment(f_coeffs, g_coeffs, zeta: float) -> float:
    """``E[f(W) g(Z)] = sum_k a_k b_k zeta^k`` for standard Gaussians with correlation ``zeta``."""
    if abs(zeta) > 1:
        raise ValueError("|zeta| must be at most 1")
    a = np.asarray(f_coeffs, dtype=float)
    b = np.asarray(g_coeffs, dtype=float)
    K = min(a.size, b.size)
    return float(np.sum(a[:K] * b[:K] * zeta ** np.arange(K)))


# ---------------------------------------------------------------------------
# Le Cam

def lecam_risk_lower_bound(chi2: float) -> float:
    """``max(0, 1 - sqrt(chi2) / 2)``: lower bound on the risk of any test."""
    if chi2 < 0:
        raise ValueError("chi2 must be nonnegative")
    return max(0.0, 1.0 - 0.5 * math.sqrt(chi2))


def mixture_chi2(members, cross_moment_fn) -> float:
    """Chi-square divergence of the uniform mixture over ``members`` from the null.

    ``|C|^{-2} sum_{v, v'} cross(v, v') - 1`` by the naive double sum.
    """
    members = list(members)
    if not members:
        raise ValueError("members must be nonempty")
    tot = math.fsum(cross_moment_fn(a, b) for a in members for b in members)
    return tot / len(members) ** 2 - 1.0


def mixture_chi2_grouped(d: int, s: int, cross_by_overlap) -> float:
    """Mixture chi-square over all of G(s), grouping pairs by overlap.

    ``cross_by_overlap(k)`` is the cross-moment of any pair with
    ``<v, v'> = k``.  Each ``v`` has ``M[k]`` partners at overlap ``k``.
    """
    table = cj_table(d, s)
    tot = math.fsum(m * cross_by_overlap(k) for k, m in table.M.items() if m)
    return tot / gs_size(d, s) - 1.0


def query_chi2_lower_bound(T: int, xi: float, n: int) -> float:
    """``2 log(T / xi) / (3 n)``, the chi-square level a query must reach to be answered
    distinguishably by an oracle with ``T`` rounds and tail ``xi``."""
    if T < 1 or not 0 < xi < 1 or n < 1:
        raise ValueError("need T >= 1, xi in (0, 1) and n >= 1")
    return 2.0 * math.log(T / xi) / (3.0 * n)
