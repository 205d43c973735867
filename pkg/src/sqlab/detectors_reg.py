"""Detection tests for mixtures of sparse regressions.

Samples are packed ``[y, x]`` rows (see :mod:`sqlab.models`).  The queries
are truncated second-moment contrasts
``y^2 (Z^2 - 1) 1{|y| <= sigma R} 1{|Z| <= R sqrt(log n)}`` with ``Z`` a
unit-norm projection of ``x``: ``Z = v^T x / sqrt(s)`` for the exhaustive
family and ``Z = x_j`` for the coordinate family.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .core import BoundedQuery, QueryFamily, Transcript
from .detectors_gmm import IncompleteTranscriptError, max_statistic
from .models import RegParams, gs_matrix, reg_query_expectation

__all__ = [
    "BracketError",
    "RegProjectionFamily",
    "RegTestSpec",
    "reg_exhaustive_queries",
    "reg_coordinate_queries",
    "reg_exhaustive_threshold",
    "reg_coordinate_threshold",
    "reg_exhaustive_test",
    "reg_coordinate_test",
    "a2",
    "a2_quadrature",
    "truncation_tail_bounds",
    "truncation_level",
    "reg_estimator_to_detector",
]

_SQRT2PI = math.sqrt(2 * math.pi)


class BracketError(ValueError):
    """Bisection bracket without a sign change."""


class RegProjectionFamily(QueryFamily):
    """Queries ``y^2 (Z_k^2 - 1) 1{|y| <= y_cut} 1{|Z_k| <= z_cut}``, ``Z_k = v_k^T x / ||v_k||``.

    Population means depend on an instance only through the overlap
    ``<direction, v_k>``; they are computed once per distinct overlap.
    """

    def __init__(self, V, y_cut, z_cut, bound, tag, prefix, s, meta=None):
        V = np.atleast_2d(np.asarray(V, dtype=float))
        super().__init__(bound, V.shape[0])
        self.V = V
        self.norm = np.sqrt(np.einsum("ij,ij->i", V, V))
        self.y_cut = float(y_cut)
        self.z_cut = float(z_cut)
        self.tag = tag
        self.prefix = prefix
        self._s = int(s)
        self.meta = {} if meta is None else dict(meta)

    @property
    def d(self):
        return self.V.shape[1]

    def query(self, k: int) -> BoundedQuery:
        u = self.V[k] / self.norm[k]
        yc, zc = self.y_cut, self.z_cut

        def ev(D, u=u):
            y = D[:, 0]
            z = D[:, 1:] @ u
            return y * y * (np.abs(y) <= yc) * (z * z - 1.0) * (np.abs(z) <= zc)

        return BoundedQuery(f"{self.prefix}[{k}]", self.bound, ev, self.tag,
                            population=lambda inst, k=k: float(self.population_means(inst, idx=[k])[0]))

    def projections(self, X):
        return (np.atleast_2d(X) @ self.V.T) / self.norm

    def evaluate(self, D) -> np.ndarray:
        D = np.atleast_2d(np.asarray(D, dtype=float))
        y = D[:, :1]
        Z = self.projections(D[:, 1:])
        vals = y * y * (np.abs(y) <= self.y_cut) * (Z * Z - 1.0) * (np.abs(Z) <= self.z_cut)
        return np.clip(vals, -self.bound, self.bound)

    def empirical_means(self, D) -> np.ndarray:
        """Sample means via the weighted Gram matrix, with exact tail corrections."""
        D = np.atleast_2d(np.asarray(D, dtype=float))
        n = D.shape[0]
        y, X = D[:, 0], D[:, 1:]
        w = y * y * (np.abs(y) <= self.y_cut)
        keep = w > 0
        Xk, wk = X[keep], w[keep]
        G = (Xk * wk[:, None]).T @ Xk / n
        out = np.einsum("ij,ij->i", self.V @ G, self.V) / self.norm**2 - wk.sum() / n
        # rows whose projections may exceed z_cut: |Z_k| <= sqrt(top-s sum of x_j^2)
        Q = Xk * Xk
        s = min(self._s, Q.shape[1])
        top = np.partition(Q, Q.shape[1] - s, axis=1)[:, -s:].sum(axis=1)
        risky = np.flatnonzero(np.sqrt(top) > self.z_cut)
        for start in range(0, risky.size, 256):
            r = risky[start:start + 256]
            Z = self.projections(Xk[r])
            out -= np.sum(wk[r, None] * (Z * Z - 1.0) * (np.abs(Z) > self.z_cut), axis=0) / n
        return np.clip(out, -self.bound, self.bound)

    def population_means(self, instance, idx=None, untruncated=False) -> np.ndarray:
        if not isinstance(instance, RegParams):
            raise TypeError("regression queries need a regression instance")
        V = self.V if idx is None else self.V[np.asarray(idx)]
        norm = self.norm if idx is None else self.norm[np.asarray(idx)]
        if instance.is_null:
            val = reg_query_expectation(instance, V[0], self.y_cut, self.z_cut, untruncated)
            return np.full(V.shape[0], val)
        # b depends on |<direction, v>| / ||v|| only (the integrand is even in b)
        key = np.round(np.abs(V @ instance.direction) / norm, 12)
        out = np.empty(V.shape[0])
        for val in np.unique(key):
            sel = key == val
            u = V[np.flatnonzero(sel)[0]]
            out[sel] = reg_query_expectation(instance, u, self.y_cut, self.z_cut, untruncated)
        return out


def _check(R, sigma):
    if R <= 0 or sigma <= 0:
        raise ValueError("R and sigma must be positive")


def _reg_bound(sigma, R, n):
    # y^2 <= sigma^2 R^2 and |Z^2 - 1| <= max(R^2 log n - 1, 1)
    return sigma * sigma * R * R * max(R * R * math.log(n) - 1.0, 1.0)


def reg_exhaustive_queries(d: int, s: int, sigma: float = 1.0, R: float = 6.0, n: int = 1000) -> RegProjectionFamily:
    """One query per ``v`` in G(s):
    ``y^2 (s^{-1} (x^T v)^2 - 1) 1{|y| <= sigma R} 1{|v^T x| <= R sqrt(s log n)}``.

    The bound is ``sigma^2 R^2 (R^2 log n - 1)``.
    """
    _check(R, sigma)
    V = gs_matrix(d, s)
    L = R * math.sqrt(math.log(n))
    return RegProjectionFamily(V, sigma * R, L, _reg_bound(sigma, R, n), "reg-exhaustive", "reg-exhaustive", s,
                               meta=dict(d=d, s=s, sigma=sigma, R=R, n=n))


def reg_coordinate_queries(d: int, sigma: float = 1.0, R: float = 6.0, n: int = 1000) -> RegProjectionFamily:
    """Queries ``y^2 (x_j^2 - 1) 1{|y| <= sigma R} 1{|x_j| <= R sqrt(log n)}``, ``j = 1..d``."""
    _check(R, sigma)
    L = R * math.sqrt(math.log(n))
    return RegProjectionFamily(np.eye(d), sigma * R, L, _reg_bound(sigma, R, n), "reg-coordinate", "reg-coordinate", 1,
                               meta=dict(d=d, s=1, sigma=sigma, R=R, n=n))


def reg_exhaustive_threshold(C, sigma, xi, n, d, s) -> float:
    return C * sigma**2 * math.log(n) * math.sqrt((s * math.log(2 * d) + math.log(1.0 / xi)) / n)


def reg_coordinate_threshold(C, sigma, xi, n, d) -> float:
    return C * sigma**2 * math.log(n) * math.sqrt(math.log(d / xi) / n)


@dataclass
class RegTestSpec:
    """Decision rule of a regression detector.

    ``family`` is ``exhaustive`` or ``coordinate``.  ``sigma`` is the noise
    level the test assumes (used in the truncation and the formula
    threshold), not necessarily the true one.
    """

    family: str
    R: float
    C_const: float
    threshold_mode: str
    xi: float
    n: int
    d: int
    s: int
    sigma: float
    threshold: float
    size: int
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in ("exhaustive", "coordinate"):
            raise ValueError("family must be exhaustive or coordinate")
        if self.threshold_mode not in ("formula", "calibrated"):
            raise ValueError("threshold_mode must be formula or calibrated")

    @classmethod
    def formula(cls, family, R, xi, n, d, s, sigma=1.0, C_const=4.0):
        if family == "exhaustive":
            thr = reg_exhaustive_threshold(C_const, sigma, xi, n, d, s)
            size = 2**s * math.comb(d, s)
        else:
            thr = reg_coordinate_threshold(C_const, sigma, xi, n, d)
            size = d
        return cls(family, R, C_const, "formula", xi, n, d, s, sigma, thr, size)

    def with_threshold(self, thr):
        return RegTestSpec(self.family, self.R, self.C_const, "calibrated", self.xi, self.n, self.d, self.s,
                           self.sigma, float(thr), self.size, dict(self.extras))

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def reg_exhaustive_test(transcript, spec: RegTestSpec) -> int:
    """``1{sup_v z_v >= threshold}``."""
    return int(max_statistic(transcript, spec.size) >= spec.threshold)


def reg_coordinate_test(transcript, spec: RegTestSpec) -> int:
    """``1{max_j z_j >= threshold}``."""
    return int(max_statistic(transcript, spec.size) >= spec.threshold)


# ---------------------------------------------------------------------------
# truncation level

def a2(t):
    """``a2(t) = int_{|w| > t} w^2 (w^2 - 1) phi(w) dw = 2[(t^3 + 2t) phi(t) + 2 Q(t)]``.

    Increases on ``[0, 1]`` and decreases on ``[1, inf)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    phi = np.exp(-0.5 * t * t) / _SQRT2PI
    out = 2.0 * ((t**3 + 2.0 * t) * phi + 2.0 * special.ndtr(-t))
    return out if out.ndim else float(out)


def a2_quadrature(t: float) -> float:
    """Adaptive quadrature oracle for :func:`a2`."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    f = lambda w: w * w * (w * w - 1.0) * math.exp(-0.5 * w * w) / _SQRT2PI
    pts = [p for p in (1.0, 4.0, 8.0) if p > t]
    val = sum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
              for a, b in zip([t] + pts, pts + [np.inf]))
    return 2.0 * val


def truncation_tail_bounds(R: float, n: int, sigma0_sq: float):
    """Cauchy-Schwarz bounds on the truncation bias under the null and the alternative.

    ``sqrt(12 sigma0^4 n^{-R^2/2})`` and ``sqrt(2 sqrt(105 * 60) sigma0^4 n^{-R^2/2})``.
    """
    tail = n ** (-R * R / 2.0)
    return (math.sqrt(12.0 * sigma0_sq**2 * tail),
            math.sqrt(2.0 * math.sqrt(105.0 * 60.0) * sigma0_sq**2 * tail))


def truncation_level(target: float = 0.5, n: int = 1000, sigma: float = 1.0, signal_var: float = 0.0,
                     a2_fn=a2, tol: float = 1e-8) -> float:
    """Truncation constant ``R = max(2 t*, R_tail)``.

    ``t* = inf{t >= 1 : a2(t) <= target}`` by bisection on ``[1, 64]``;
    ``R_tail`` is the smallest half-integer for which both
    :func:`truncation_tail_bounds` are at most ``1/n``, evaluated at the
    response variance ``sigma0^2 = sigma^2 + signal_var``.

    Raises
    ------
    ValueError
        If ``target`` is outside ``(0, 2)``.
    BracketError
        If ``a2 - target`` does not change sign on ``[1, 64]``.
    """
    if not 0.0 < target < 2.0:
        raise ValueError("target must lie in the open interval (0, 2)")
    lo, hi = 1.0, 64.0
    flo, fhi = a2_fn(lo) - target, a2_fn(hi) - target
    if not (flo > 0 >= fhi):
        raise BracketError("a2 - target has no sign change on [1, 64]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if a2_fn(mid) - target > 0:
            lo = mid
        else:
            hi = mid
    t_star = hi
    s0 = sigma * sigma + signal_var
    R_tail = 0.5
    while max(truncation_tail_bounds(R_tail, n, s0)) > 1.0 / n:
        R_tail += 0.5
    return max(2.0 * t_star, R_tail)


def reg_estimator_to_detector(estimator, gamma_n: float, sigma: float = 1.0):
    """Detector ``1{||beta_hat||^2 / sigma^2 >= 5 gamma_n / 8}``.

    ``estimator`` is an algorithm returning ``beta_hat``.
    """
    def algo():
        b = np.asarray((yield from estimator()), dtype=float)
        return int(float(b @ b) / sigma**2 >= 5.0 * gamma_n / 8.0)
    return algo
