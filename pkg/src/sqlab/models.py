"""Sparse Gaussian mixture and mixture-of-regressions models.

Parameter containers, samplers, sign-support enumeration and population
expectations of bounded queries.

Regression samples are packed as an ``(n, d + 1)`` array whose first
column is the response ``y`` and whose remaining columns are ``x``.

Seed splitting: a run seeded with ``seed`` gives trial ``k`` (and any
further keys) the stream ``default_rng(SeedSequence(seed, spawn_key=keys))``,
see :func:`trial_rng`.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

__all__ = [
    "DEFAULT_ENUM_CAP",
    "EnumerationCapError",
    "enum_cap",
    "SignSupportVector",
    "gs_size",
    "gs_matrix",
    "enumerate_gs",
    "random_gs",
    "GmmParams",
    "RegParams",
    "LinearParams",
    "SignalStrength",
    "signal_strength",
    "gmm_null",
    "gmm_alternative",
    "gmm_unknown_cov_alternative",
    "reg_null",
    "reg_alternative",
    "matched_null",
    "trial_rng",
    "sample",
    "sample_gmm",
    "sample_reg",
    "sample_linear",
    "population_expectation",
    "normal_partial_moments",
    "truncated_poly_moment",
    "mixture_poly_moment",
    "clipped_normal_mean",
    "reg_query_expectation",
]

DEFAULT_ENUM_CAP = 10**6


class EnumerationCapError(ValueError):
    """Raised when an enumeration would exceed the configured cap."""


def enum_cap() -> int:
    """Enumeration cap, overridable with the ``SQLAB_ENUM_CAP`` variable."""
    raw = os.environ.get("SQLAB_ENUM_CAP")
    return int(float(raw)) if raw else DEFAULT_ENUM_CAP


# ---------------------------------------------------------------------------
# sign-support vectors

@dataclass(frozen=True)
class SignSupportVector:
    """A vector in {-1, 0, 1}^d with exactly ``s`` nonzero entries."""

    entries: tuple

    def __post_init__(self):
        ent = tuple(int(e) for e in self.entries)
        if any(e not in (-1, 0, 1) for e in ent):
            raise ValueError("entries must lie in {-1, 0, 1}")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def from_array(cls, a):
        return cls(tuple(int(e) for e in np.asarray(a).ravel()))

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> tuple:
        return tuple(i for i, e in enumerate(self.entries) if e != 0)

    @property
    def s(self) -> int:
        return len(self.support)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def inner(self, other) -> int:
        return int(sum(a * b for a, b in zip(self.entries, other.entries)))

    def to_list(self) -> list:
        return list(self.entries)


def gs_size(d: int, s: int) -> int:
    """``|G(s)| = 2^s C(d, s)``."""
    return 2**s * math.comb(d, s)


def gs_matrix(d: int, s: int, cap: int | None = None) -> np.ndarray:
    """All of G(s) as an ``int8`` array, one row per vector, in lexicographic order.

    Entries are ordered -1 < 0 < 1.

    Raises
    ------
    EnumerationCapError
        If ``2^s C(d, s)`` exceeds the cap.
    """
    if not (0 <= s <= d):
        raise ValueError("need 0 <= s <= d")
    cap = enum_cap() if cap is None else cap
    size = gs_size(d, s)
    if size > cap:
        raise EnumerationCapError(f"|G(s)| = {size} exceeds the enumeration cap {cap}")
    signs = np.array(list(itertools.product((-1, 1), repeat=s)), dtype=np.int8).reshape(-1, s)
    out = np.zeros((size, d), dtype=np.int8)
    r = 0
    for supp in itertools.combinations(range(d), s):
        k = len(signs)
        out[r:r + k][:, list(supp)] = signs
        r += k
    order = np.lexsort(out.T[::-1])
    return out[order]


def enumerate_gs(d: int, s: int, cap: int | None = None) -> list:
    """G(s) as a lexicographically ordered list of :class:`SignSupportVector`."""
    return [SignSupportVector(tuple(row.tolist())) for row in gs_matrix(d, s, cap)]


def random_gs(d: int, s: int, rng) -> np.ndarray:
    """Draw one element of G(s) uniformly at random (as a float array)."""
    rng = np.random.default_rng(rng)
    v = np.zeros(d)
    supp = rng.choice(d, size=s, replace=False)
    v[supp] = rng.choice((-1.0, 1.0), size=s)
    return v


def _as_vec(v) -> np.ndarray:
    if isinstance(v, SignSupportVector):
        return v.array()
    return np.asarray(v, dtype=float).ravel()


# ---------------------------------------------------------------------------
# parameter containers

_SIGMA_KINDS = ("identity", "diagonal", "dense")
_DENSE_MAX_D = 64


@dataclass(eq=False)
class GmmParams:
    """Two-component Gaussian mixture ``nu N(mu1, Sigma) + (1 - nu) N(mu2, Sigma)``.

    A null instance has ``mu1 == mu2``.  ``sigma_kind`` is one of
    ``identity``, ``diagonal`` or ``dense``; dense covariances are limited to
    ``d <= 64``.  Optional ``eig_bounds=(lo, hi)`` enforces the eigenvalue
    range of Sigma.
    """

    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray | None = None
    nu: float = 0.5
    sigma_kind: str = "identity"
    eig_bounds: tuple | None = None
    _chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.mu1 = np.asarray(self.mu1, dtype=float).ravel()
        self.mu2 = np.asarray(self.mu2, dtype=float).ravel()
        d = self.mu1.size
        if self.mu2.size != d:
            raise ValueError("mu1 and mu2 must have the same dimension")
        if not (0.0 < self.nu < 1.0):
            raise ValueError("nu must lie in (0, 1)")
        if self.sigma_kind not in _SIGMA_KINDS:
            raise ValueError(f"unknown sigma kind {self.sigma_kind!r}")
        if self.sigma_kind == "identity":
            if self.sigma is not None and not np.allclose(self.sigma, np.eye(d)):
                raise ValueError("identity kind with a non-identity matrix")
            self.sigma = None
            eig = np.ones(1)
        elif self.sigma_kind == "diagonal":
            sd = np.asarray(self.sigma, dtype=float)
            sd = np.diag(sd).copy() if sd.ndim == 2 else sd.ravel().copy()
            if sd.size != d or np.any(sd <= 0) or not np.all(np.isfinite(sd)):
                raise ValueError("diagonal Sigma must be positive with d entries")
            self.sigma = sd
            eig = sd
        else:
            S = np.asarray(self.sigma, dtype=float)
            if S.shape != (d, d):
                raise ValueError("dense Sigma must be d x d")
            if d > _DENSE_MAX_D:
                raise ValueError(f"dense Sigma supported only for d <= {_DENSE_MAX_D}")
            if not np.allclose(S, S.T, atol=1e-12):
                raise ValueError("Sigma must be symmetric")
            try:
                self._chol = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                raise ValueError("Sigma is not positive definite") from None
            self.sigma = S
            eig = np.linalg.eigvalsh(S)
        if self.eig_bounds is not None:
            lo, hi = self.eig_bounds
            if eig.min() < lo or eig.max() > hi:
                raise ValueError("Sigma eigenvalues outside the configured bounds")

    @property
    def d(self) -> int:
        return self.mu1.size

    @property
    def delta_mu(self) -> np.ndarray:
        return self.mu2 - self.mu1

    @property
    def s(self) -> int:
        return int(np.count_nonzero(self.delta_mu))

    @property
    def is_null(self) -> bool:
        return self.s == 0

    @property
    def mean(self) -> np.ndarray:
        return self.nu * self.mu1 + (1 - self.nu) * self.mu2

    def sigma_matrix(self) -> np.ndarray:
        if self.sigma_kind == "identity":
            return np.eye(self.d)
        if self.sigma_kind == "diagonal":
            return np.diag(self.sigma)
        return self.sigma

    def sigma_diag(self) -> np.ndarray:
        if self.sigma_kind == "identity":
            return np.ones(self.d)
        if self.sigma_kind == "diagonal":
            return self.sigma
        return np.diag(self.sigma).copy()

    def sigma_inv_apply(self, V) -> np.ndarray:
        """Return ``V Sigma^{-1}`` for row vectors ``V``."""
        V = np.asarray(V, dtype=float)
        if self.sigma_kind == "identity":
            return V.copy()
        if self.sigma_kind == "diagonal":
            return V / self.sigma
        from scipy.linalg import cho_solve
        return cho_solve((self._chol, True), V.T).T

    def quad_form(self, W) -> np.ndarray:
        """``w^T Sigma w`` for each row ``w`` of ``W``."""
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if self.sigma_kind == "identity":
            return np.einsum("ij,ij->i", W, W)
        if self.sigma_kind == "diagonal":
            return np.einsum("ij,ij,j->i", W, W, self.sigma)
        return np.einsum("ij,jk,ik->i", W, self.sigma, W)

    def components(self):
        """List of ``(weight, mean)`` pairs, collapsed to one under the null."""
        if self.is_null:
            return [(1.0, self.mu1)]
        return [(self.nu, self.mu1), (1.0 - self.nu, self.mu2)]


@dataclass(eq=False)
class RegParams:
    """Symmetric mixture of sparse regressions.

    Alternative: ``Y = eta beta v^T X + eps`` with ``eta`` Rademacher,
    ``X ~ N(0, I)``, ``eps ~ N(0, sigma^2)``.  Null: ``Y ~ N(0, sigma0^2)``
    independent of ``X``, with ``sigma0^2 = null_sigma0_sq``.
    """

    beta_scale: float
    direction: np.ndarray
    sigma: float = 1.0
    null: bool = False
    null_sigma0_sq: float | None = None

    def __post_init__(self):
        self.direction = _as_vec(self.direction)
        if self.beta_scale < 0 or self.sigma <= 0:
            raise ValueError("need beta >= 0 and sigma > 0")
        if self.null_sigma0_sq is None:
            self.null_sigma0_sq = self.sigma**2 + self.beta_scale**2 * float(self.direction @ self.direction)
        if self.null_sigma0_sq <= 0:
            raise ValueError("sigma0^2 must be positive")

    @property
    def d(self) -> int:
        return self.direction.size

    @property
    def s(self) -> int:
        return int(np.count_nonzero(self.direction))

    @property
    def is_null(self) -> bool:
        return self.null or self.beta_scale == 0.0

    @property
    def beta_vector(self) -> np.ndarray:
        return self.beta_scale * self.direction

    @property
    def y_variance(self) -> float:
        if self.null:
            return float(self.null_sigma0_sq)
        return self.sigma**2 + float(self.beta_vector @ self.beta_vector)


@dataclass(eq=False)
class LinearParams:
    """Plain sparse linear model ``Y = theta^T X + eps``, ``X ~ N(0, I)``."""

    theta: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).ravel()

    @property
    def d(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class SignalStrength:
    value: float
    kind: str


def signal_strength(instance, kind=None) -> SignalStrength:
    """Signal strength of an instance.

    ``gmm-known-cov``: ``dmu^T Sigma^{-1} dmu``; ``gmm-unknown-cov``:
    ``||dmu||^4 / dmu^T Sigma dmu``; ``regression``: ``||beta||^2 / sigma^2``.
    """
    if isinstance(instance, RegParams):
        if kind not in (None, "regression"):
            raise ValueError("regression instances only have the regression kind")
        val = 0.0 if instance.is_null else float(instance.beta_vector @ instance.beta_vector) / instance.sigma**2
        return SignalStrength(val, "regression")
    if not isinstance(instance, GmmParams):
        raise TypeError("unsupported instance")
    kind = kind or "gmm-known-cov"
    dm = instance.delta_mu
    if instance.is_null:
        return SignalStrength(0.0, kind)
    if kind == "gmm-known-cov":
        return SignalStrength(float(instance.sigma_inv_apply(dm[None])[0] @ dm), kind)
    if kind == "gmm-unknown-cov":
        n2 = float(dm @ dm)
        return SignalStrength(n2 * n2 / float(instance.quad_form(dm[None])[0]), kind)
    raise ValueError(f"unknown signal kind {kind!r}")


def gmm_null(d: int, sigma=None, sigma_kind="identity", mu=None) -> GmmParams:
    mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float)
    return GmmParams(mu, mu.copy(), sigma, 0.5, sigma_kind)


def gmm_alternative(v, beta: float, nu: float = 0.5, sigma=None, sigma_kind="identity",
                    center=None) -> GmmParams:
    """The mean-zero instance ``mu1 = -beta (1 - nu) v``, ``mu2 = beta nu v``.

    Then ``dmu = beta v`` and with Sigma = I the signal is ``s beta^2``.
    """
    v = _as_vec(v)
    c = 0.0 if center is None else np.asarray(center, dtype=float)
    return GmmParams(c - beta * (1 - nu) * v, c + beta * nu * v, sigma, nu, sigma_kind)


def gmm_unknown_cov_alternative(v, beta: float) -> GmmParams:
    """``1/2 N(-beta v, S) + 1/2 N(beta v, S)`` with ``S = I - beta^2 v v^T``.

    Its marginal covariance is the identity.  Requires ``s beta^2 < 1``.
    """
    v = _as_vec(v)
    if beta**2 * float(v @ v) >= 1:
        raise ValueError("need s beta^2 < 1 for a valid covariance")
    S = np.eye(v.size) - beta**2 * np.outer(v, v)
    return GmmParams(-beta * v, beta * v, S, 0.5, "dense")


def reg_alternative(v, beta: float, sigma: float = 1.0) -> RegParams:
    return RegParams(beta, _as_vec(v), sigma)


def reg_null(d: int, sigma: float = 1.0, s: int = 0, beta: float = 0.0) -> RegParams:
    """Null with ``sigma0^2 = sigma^2 + s beta^2`` (matched to an alternative)."""
    return RegParams(0.0, np.zeros(d), sigma, null=True, null_sigma0_sq=sigma**2 + s * beta**2)


def matched_null(instance):
    """Null instance sharing the alternative's first two marginal moments where
    the model family allows it: ``N(mixture mean, Sigma)`` for mixtures and
    ``Y ~ N(0, sigma^2 + ||beta||^2)`` for regressions."""
    if isinstance(instance, GmmParams):
        if instance.is_null:
            return instance
        S = None if instance.sigma_kind == "identity" else instance.sigma
        return gmm_null(instance.d, S, instance.sigma_kind, instance.mean)
    if isinstance(instance, RegParams):
        if instance.is_null:
            return instance
        return RegParams(0.0, np.zeros(instance.d), instance.sigma, null=True,
                         null_sigma0_sq=instance.y_variance)
    raise TypeError("unsupported instance")


# ---------------------------------------------------------------------------
# sampling

def trial_rng(seed, *keys) -> np.random.Generator:
    """Independent stream for ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def _rng(rng_seed):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def sample_gmm(params: GmmParams, n: int, rng_seed=None) -> np.ndarray:
    """Draw ``n`` points from the mixture (or the null Gaussian)."""
    rng = _rng(rng_seed)
    d = params.d
    Z = rng.standard_normal((n, d))
    if params.sigma_kind == "diagonal":
        Z *= np.sqrt(params.sigma)
    elif params.sigma_kind == "dense":
        Z = Z @ params._chol.T
    if params.is_null:
        return Z + params.mu1
    first = rng.random(n) < params.nu
    return Z + np.where(first[:, None], params.mu1, params.mu2)


def sample_reg(params: RegParams, n: int, rng_seed=None) -> np.ndarray:
    """Draw ``n`` packed pairs ``[y, x]`` from the regression model."""
    rng = _rng(rng_seed)
    X = rng.standard_normal((n, params.d))
    if params.is_null:
        y = math.sqrt(params.null_sigma0_sq) * rng.standard_normal(n)
    else:
        eta = rng.choice((-1.0, 1.0), size=n)
        y = eta * (X @ params.beta_vector) + params.sigma * rng.standard_normal(n)
    return np.column_stack([y, X])


def sample_linear(params: LinearParams, n: int, rng_seed=None) -> np.ndarray:
    rng = _rng(rng_seed)
    X = rng.standard_normal((n, params.d))
    y = X @ params.theta + params.sigma * rng.standard_normal(n)
    return np.column_stack([y, X])


def sample(instance, n: int, rng_seed=None) -> np.ndarray:
    if isinstance(instance, GmmParams):
        return sample_gmm(instance, n, rng_seed)
    if isinstance(instance, RegParams):
        return sample_reg(instance, n, rng_seed)
    if isinstance(instance, LinearParams):
        return sample_linear(instance, n, rng_seed)
    raise TypeError("unsupported instance")


# ---------------------------------------------------------------------------
# one-dimensional Gaussian moments

_SQRT2PI = math.sqrt(2 * math.pi)


def _phi(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * x * x) / _SQRT2PI


def _xphi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    fin = np.isfinite(x)
    out[fin] = x[fin] * _phi(x[fin])
    return out


def normal_partial_moments(lo, hi):
    """``(m0, m1, m2)`` with ``mk = int_lo^hi u^k phi(u) du``; arrays broadcast."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    # difference of tails on the side that avoids cancellation
    upper = lo > 0
    m0 = np.where(upper, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    m1 = _phi(lo) - _phi(hi)
    m2 = m0 + _xphi(lo) - _xphi(hi)
    return m0, m1, m2


def truncated_poly_moment(coeffs, mean, sd, L, method="closed"):
    """``E[p(A) 1{|A| <= L}]`` for ``A ~ N(mean, sd^2)`` and quadratic ``p``.

    ``coeffs = (c2, c1, c0)`` means ``p(a) = c2 a^2 + c1 a + c0``.  ``L`` may
    be ``inf``.  ``method="quad"`` uses adaptive quadrature instead of the
    closed form.
    """
    c2, c1, c0 = (np.asarray(c, dtype=float) for c in coeffs)
    if method == "quad":
        args = np.broadcast_arrays(c2, c1, c0, np.asarray(mean, float), np.asarray(sd, float), np.asarray(L, float))
        out = np.empty(args[0].shape)
        for idx in np.ndindex(out.shape):
            a2, a1, a0, m, s, l = (a[idx] for a in args)
            lo, hi = (-l - m) / s, (l - m) / s
            f = lambda u: (a2 * (m + s * u) ** 2 + a1 * (m + s * u) + a0) * math.exp(-0.5 * u * u) / _SQRT2PI
            lo, hi = max(lo, -40.0), min(hi, 40.0)
            val = 0.0 if hi <= lo else integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200,
                                                      points=[0.0] if lo < 0 < hi else None)[0]
            out[idx] = val
        return out if out.ndim else float(out)
    m = np.asarray(mean, dtype=float)
    s = np.asarray(sd, dtype=float)
    L = np.asarray(L, dtype=float)
    lo, hi = (-L - m) / s, (L - m) / s
    m0, m1, m2 = normal_partial_moments(lo, hi)
    ea2 = m * m * m0 + 2 * m * s * m1 + s * s * m2
    ea1 = m * m0 + s * m1
    out = c2 * ea2 + c1 * ea1 + c0 * m0
    return out if np.ndim(out) else float(out)


def mixture_poly_moment(coeffs, weights, means, sd, L):
    """Mixture version of :func:`truncated_poly_moment`.

    ``means`` has a trailing component axis matching ``weights``; ``coeffs``,
    ``sd`` and ``L`` broadcast against the leading axes.
    """
    means = np.asarray(means, dtype=float)
    w = np.asarray(weights, dtype=float)
    c = [np.asarray(ci, dtype=float)[..., None] for ci in coeffs]
    out = truncated_poly_moment(c, means, np.asarray(sd, float)[..., None], np.asarray(L, float)[..., None])
    return np.sum(np.asarray(out) * w, axis=-1)


def clipped_normal_mean(mean, sd, M):
    """``E[clip(Y, -M, M)]`` for ``Y ~ N(mean, sd^2)``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (-M - mean) / sd
        b = (M - mean) / sd
    m0, m1, _ = normal_partial_moments(a, b)
    inner = mean * m0 + sd * m1
    out = inner - M * special.ndtr(a) + M * special.ndtr(-b)
    out = np.where(sd > 0, out, np.clip(mean, -M, M))
    return out if np.ndim(out) else float(out)


def _trunc_second_moment(m, tau, c):
    """``E[Y^2 1{|Y| <= c}]`` for ``Y ~ N(m, tau^2)`` (``c`` may be inf)."""
    return truncated_poly_moment((1.0, 0.0, 0.0), m, tau, c)


def reg_query_expectation(instance: RegParams, u, y_cut: float, z_cut: float,
                          untruncated: bool = False) -> float:
    """``E[Y^2 1{|Y| <= y_cut} (Z^2 - 1) 1{|Z| <= z_cut}]`` with ``Z = u^T X / ||u||``.

    Under the alternative ``(Y, Z)`` is, up to the sign of ``Y`` which the
    even integrand ignores, bivariate normal: ``Y | Z ~ N(b Z, tau^2)`` with
    ``b = beta <v, u> / ||u||``.  The outer integral over ``Z`` is done by
    adaptive quadrature.
    """
    u = _as_vec(u)
    nu_ = math.sqrt(float(u @ u))
    if untruncated:
        y_cut = z_cut = math.inf
    if instance.is_null:
        hy = _trunc_second_moment(0.0, math.sqrt(instance.y_variance), y_cut)
        m0, _, m2 = normal_partial_moments(-z_cut, z_cut)
        return float(hy * (m2 - m0))
    b = instance.beta_scale * float(instance.direction @ u) / nu_
    tau2 = instance.y_variance - b * b
    tau = math.sqrt(max(tau2, 0.0))
    if math.isinf(y_cut) and math.isinf(z_cut):
        return 2.0 * b * b
    if math.isinf(y_cut):
        # E[(b^2 Z^2 + tau^2)(Z^2 - 1) 1{|Z| <= r}]
        m0, _, m2 = normal_partial_moments(-z_cut, z_cut)
        m4 = 3 * m0 - (z_cut**3 + 3 * z_cut) * 2 * _phi(z_cut) if np.isfinite(z_cut) else 3.0
        return float(b * b * (m4 - m2) + tau2 * (m2 - m0))

    def f(z):
        return (z * z - 1.0) * _trunc_second_moment(b * z, tau, y_cut) * math.exp(-0.5 * z * z) / _SQRT2PI

    r = min(z_cut, 40.0)
    pts = [t for t in (-1.0, 0.0, 1.0) if -r < t < r]
    if b != 0:
        pts += [t for t in (y_cut / abs(b), -y_cut / abs(b)) if -r < t < r]
    val = integrate.quad(f, -r, r, epsabs=1e-12, epsrel=1e-12, limit=400, points=sorted(pts))[0]
    return float(val)


def _gradient_expectation(instance: LinearParams, theta, j: int, M: float) -> float:
    """``E[clip(-(Y - theta^T X) X_j, -M, M)]`` under the linear model."""
    delta = instance.theta - np.asarray(theta, dtype=float)
    dj = delta[j]
    rest = float(delta @ delta - dj * dj) + instance.sigma**2
    if not math.isfinite(M):
        return -dj

    def f(x):
        # given X_j = x: residual ~ N(dj x, rest), query = -x * residual
        return clipped_normal_mean(-dj * x * x, abs(x) * math.sqrt(rest), M) * math.exp(-0.5 * x * x) / _SQRT2PI

    return float(integrate.quad(f, -40, 40, epsabs=1e-12, epsrel=1e-12, limit=400, points=[0.0])[0])


def population_expectation(query, instance, n_mc: int = 10**6, rng_seed=0, return_se=False):
    """Population mean ``E[q(X)]`` of a bounded query under an instance.

    Registered families carry an exact evaluator (closed form, or
    one-dimensional quadrature for truncations).  Custom queries are
    estimated by Monte Carlo with ``n_mc`` samples; ``return_se=True``
    also returns the standard error (zero for exact evaluations).
    """
    if getattr(query, "population", None) is not None:
        val = float(query.population(instance))
        return (val, 0.0) if return_se else val
    rng = _rng(rng_seed)
    chunk = 200_000
    tot = tot2 = 0.0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        vals = query(sample(instance, m, rng))
        tot += float(vals.sum())
        tot2 += float((vals * vals).sum())
        done += m
    mean = tot / n_mc
    var = max(tot2 / n_mc - mean * mean, 0.0)
    se = math.sqrt(var / n_mc)
    return (mean, se) if return_se else mean
