"""Experiment drivers: risk sweeps, coverage certificates, calibration, the
verification suite and the SQ proximal-gradient demo.

Everything is driven by one :class:`ExperimentConfig`, loaded from a JSON
document.  Runs are deterministic given the config and seed; trial ``k`` of
grid point ``g`` under hypothesis ``h`` (0 null, 1 alternative) draws its
data from ``trial_rng(seed, g, h, k)``.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, detectors_gmm as dg, detectors_reg as dr
from .core import (
    BoundedQuery,
    OracleConfig,
    QueryFamily,
    finite_capacity,
    run_algorithm,
    tolerance,
)
from .models import (
    GmmParams,
    LinearParams,
    _gradient_expectation,
    gmm_alternative,
    gmm_null,
    gs_matrix,
    gs_size,
    matched_null,
    random_gs,
    reg_alternative,
    reg_null,
    sample,
    trial_rng,
)
from .oracles import AdversarialOracle, HonestOracle, PopulationOracle, coverage_certificate

__all__ = [
    "ConfigError",
    "DivergenceError",
    "ExperimentConfig",
    "RiskRow",
    "CSV_COLUMNS",
    "Detector",
    "build_detector",
    "make_alternative",
    "run_sweep",
    "rows_to_csv",
    "coverage_beta",
    "run_coverage",
    "run_calibrate",
    "VerifyCheck",
    "run_verify",
    "GradientFamily",
    "DemoResult",
    "demo_sq_sgd",
]

CSV_COLUMNS = ("model", "detector", "oracle", "d", "s", "n", "nu", "sigma", "gamma", "xi",
               "threshold_mode", "trials", "seed", "type1", "type2", "risk", "wall_ms")


class ConfigError(ValueError):
    """Invalid experiment configuration (a usage error)."""


class DivergenceError(RuntimeError):
    """The demo objective increased for too many consecutive iterations."""


_DETECTORS = {"gmm": ("exhaustive", "diagonal", "net", "net-diagonal"), "reg": ("exhaustive", "coordinate")}


@dataclass
class ExperimentConfig:
    """Experiment parameters.

    ``sigma`` is ``"identity"``, a number (``c I`` for mixtures, the noise
    level for regressions) or a list of ``d`` variances (diagonal mixture
    covariance).  ``R`` overrides the truncation constant (default 6 for
    mixtures, :func:`sqlab.detectors_reg.truncation_level` for
    regressions).  ``timing=False`` writes ``wall_ms = 0`` so that CSV
    output is byte-reproducible.  ``signal_fraction`` sets the coverage
    signal ``nu (1 - nu) beta^2`` as a fraction of the smallest tolerance,
    unless ``beta`` is given.  Keys prefixed ``sgd_`` configure the
    proximal-gradient demo.
    """

    model: str = "gmm"
    d: int = 30
    s: int = 3
    n: int = 1000
    nu: float = 0.5
    sigma: object = "identity"
    gamma_grid: list = field(default_factory=lambda: [0.0, 1.0, 2.0])
    trials: int = 200
    seed: int = 0
    oracle: str = "honest"
    detector: str = "diagonal"
    threshold_mode: str = "calibrated"
    xi: float = 0.05
    R: float | None = None
    C_const: float = 4.0
    calibration_trials: int = 2000
    net_delta: float = 0.5
    signal_fraction: float = 0.5
    beta: float | None = None
    threads: int = 1
    timing: bool = True
    sgd_step: float = 0.5
    sgd_lambda: float | None = None
    sgd_iters: int = 100
    sgd_bound: float = 100.0
    sgd_refit: bool = True
    sgd_refit_iters: int = 60
    sgd_tol: float = 1e-6
    sgd_noise: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.model not in _DETECTORS:
            raise ConfigError("model must be gmm or reg")
        if self.detector not in _DETECTORS[self.model]:
            raise ConfigError(f"detector {self.detector!r} not available for model {self.model!r}")
        if self.oracle not in ("honest", "adversarial"):
            raise ConfigError("oracle must be honest or adversarial")
        if self.threshold_mode not in ("formula", "calibrated"):
            raise ConfigError("threshold_mode must be formula or calibrated")
        if not (1 <= self.s <= self.d) or self.n < 2:
            raise ConfigError("need 1 <= s <= d and n >= 2")
        g = [float(x) for x in self.gamma_grid]
        if not g or any(x < 0 for x in g) or any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError("gamma_grid must be nonempty, nonnegative and strictly increasing")
        self.gamma_grid = g
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 < self.xi < 1 or not 0 < self.nu < 1:
            raise ConfigError("xi and nu must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.model == "reg" and not isinstance(self.sigma, (int, float)):
            if self.sigma != "identity":
                raise ConfigError("regression sigma must be a positive number")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **kw) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**dataclasses.asdict(self), **kw})

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    # derived quantities

    @property
    def noise(self) -> float:
        return 1.0 if self.sigma == "identity" else float(self.sigma)

    def gmm_sigma(self):
        """``(sigma, kind)`` for mixture instances."""
        if self.sigma == "identity" or (isinstance(self.sigma, (int, float)) and self.sigma == 1):
            return None, "identity"
        if isinstance(self.sigma, (int, float)):
            if self.sigma <= 0:
                raise ConfigError("sigma must be positive")
            return np.full(self.d, float(self.sigma)), "diagonal"
        S = np.asarray(self.sigma, dtype=float)
        if S.ndim != 1 or S.size != self.d or np.any(S <= 0):
            raise ConfigError("sigma list must hold d positive variances")
        return S, "diagonal"

    def truncation_R(self) -> float:
        if self.R is not None:
            return float(self.R)
        if self.model == "gmm":
            return dg.DEFAULT_R
        return dr.truncation_level(0.5, self.n, self.noise)

    def sigma_label(self) -> str:
        return self.sigma if isinstance(self.sigma, str) else json.dumps(self.sigma, separators=(",", ":"))


# ---------------------------------------------------------------------------
# instances and detectors

def make_alternative(cfg: ExperimentConfig, v, gamma: float):
    """Instance with sign-support direction ``v`` at signal strength ``gamma``."""
    v = np.asarray(v, dtype=float)
    if cfg.model == "gmm":
        S, kind = cfg.gmm_sigma()
        inv = v * v if S is None else v * v / S
        beta = math.sqrt(gamma / inv.sum())
        return gmm_alternative(v, beta, cfg.nu, S, kind)
    return reg_alternative(v, cfg.noise * math.sqrt(gamma / cfg.s), cfg.noise)


def make_null(cfg: ExperimentConfig, gamma: float = 0.0):
    if cfg.model == "gmm":
        S, kind = cfg.gmm_sigma()
        return gmm_null(cfg.d, S, kind)
    beta = cfg.noise * math.sqrt(gamma / cfg.s)
    return reg_null(cfg.d, cfg.noise, cfg.s, beta)


@dataclass
class Detector:
    """A configured detector.

    ``algorithm(threshold)`` returns an SQ algorithm whose result is the
    decision; ``statistic(X)`` is the honest statistic used for calibration;
    ``budget`` is the number of queries issued; ``families`` lists the
    (first-stage) query families for coverage checks.
    """

    name: str
    budget: int
    statistic: object
    algorithm: object
    formula_threshold: float
    families: list
    capacity: float


def build_detector(cfg: ExperimentConfig) -> Detector:
    R = cfg.truncation_R()
    d, s, n, xi = cfg.d, cfg.s, cfg.n, cfg.xi
    if cfg.model == "gmm":
        S, _ = cfg.gmm_sigma()
        if cfg.detector in ("exhaustive", "diagonal"):
            fam = dg.exhaustive_queries(d, s, S, R, n) if cfg.detector == "exhaustive" else dg.diagonal_queries(d, S, R, n)
            spec = dg.TestSpec.formula(cfg.detector, R, xi, n, d, s, fam.size)
            return Detector(cfg.detector, fam.size, fam,
                            lambda thr: dg.family_algorithm(fam, spec.with_threshold(thr)),
                            spec.threshold, [fam], finite_capacity(fam.size))
        if cfg.detector == "net":
            net = dg.covering_net(cfg.net_delta, S, d, s, rng_seed=cfg.seed)
            st1, mk = dg.net_test_queries(net, R, n)
        else:
            st1, mk = dg.net_diagonal_queries(d, S, R, n)
        spec = dg.TestSpec.formula(cfg.detector, R, xi, n, d, s, 2 * st1.size)

        def stat(X):
            return float(np.max(mk(st1.empirical_means(X)).empirical_means(X)))

        return Detector(cfg.detector, 2 * st1.size, stat,
                        lambda thr: dg.net_algorithm(st1, mk, spec.with_threshold(thr)),
                        spec.threshold, [st1], finite_capacity(2 * st1.size))
    sig = cfg.noise
    fam = dr.reg_exhaustive_queries(d, s, sig, R, n) if cfg.detector == "exhaustive" else dr.reg_coordinate_queries(d, sig, R, n)
    spec = dr.RegTestSpec.formula(cfg.detector, R, xi, n, d, s, sig, cfg.C_const)
    return Detector(cfg.detector, fam.size, fam,
                    lambda thr: dg.family_algorithm(fam, spec.with_threshold(thr)),
                    spec.threshold, [fam], finite_capacity(fam.size))


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class RiskRow:
    model: str
    detector: str
    oracle: str
    d: int
    s: int
    n: int
    nu: float
    sigma: str
    gamma: float
    xi: float
    threshold_mode: str
    trials: int
    seed: int
    type1: float
    type2: float
    risk: float
    wall_ms: int
    threshold: float = field(default=math.nan, compare=False)
    budget_used: int = field(default=0, compare=False)

    def __post_init__(self):
        if not (0 <= self.type1 <= 1 and 0 <= self.type2 <= 1 and 0 <= self.risk <= 2):
            raise ValueError("rates out of range")

    def csv_values(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_values()])
    return buf.getvalue()


def _threshold(cfg, det, null_inst, keys):
    if cfg.threshold_mode == "formula":
        return det.formula_threshold
    return dg.calibrate_threshold(det.statistic, null_inst, cfg.xi, cfg.calibration_trials, cfg.n,
                                  seed=cfg.seed, keys=keys, threads=cfg.threads)


def _oracle_config(cfg, det):
    return OracleConfig(xi=cfg.xi, n=cfg.n, T=det.budget, capacity=det.capacity)


def run_sweep(cfg: ExperimentConfig, detector: Detector | None = None) -> list:
    """Empirical type I and type II error rates over the signal grid.

    For each ``gamma`` a direction is drawn uniformly from G(s), and the
    detector is run ``trials`` times under the null and the alternative,
    each trial on a fresh dataset (honest oracle) or against the
    adversarial oracle.
    """
    det = build_detector(cfg) if detector is None else detector
    ocfg = _oracle_config(cfg, det)
    rows = []
    thr_cache = {}
    for gi, gamma in enumerate(cfg.gamma_grid):
        t0 = time.perf_counter()
        v = random_gs(cfg.d, cfg.s, trial_rng(cfg.seed, 1_000_003, gi))
        alt = make_alternative(cfg, v, gamma) if gamma > 0 else make_null(cfg, 0.0)
        null = make_null(cfg, gamma)
        key = round(getattr(null, "null_sigma0_sq", 0.0), 12)
        if key not in thr_cache:
            thr_cache[key] = _threshold(cfg, det, null, (2_000_003, len(thr_cache)))
        thr = thr_cache[key]
        algo = det.algorithm(thr)
        decisions = []
        used = set()
        for h, inst in enumerate((null, alt)):
            if cfg.oracle == "adversarial":
                make_oracle = lambda k, inst=inst: AdversarialOracle(inst, ocfg, null)
            else:
                make_oracle = lambda k, inst=inst, h=h: HonestOracle(sample(inst, cfg.n, trial_rng(cfg.seed, gi, h, k)))

            def one(k, make_oracle=make_oracle):
                tr = run_algorithm(algo, make_oracle(k), ocfg)
                return int(tr.result), tr.budget_used

            if cfg.threads > 1:
                with ThreadPoolExecutor(cfg.threads) as ex:
                    out = list(ex.map(one, range(cfg.trials)))
            else:
                out = [one(k) for k in range(cfg.trials)]
            decisions.append(np.array([o[0] for o in out]))
            used.update(o[1] for o in out)
        type1 = float(decisions[0].mean())
        type2 = float(1.0 - decisions[1].mean())
        wall = int(round(1000 * (time.perf_counter() - t0))) if cfg.timing else 0
        rows.append(RiskRow(cfg.model, cfg.detector, cfg.oracle, cfg.d, cfg.s, cfg.n, cfg.nu, cfg.sigma_label(),
                            float(gamma), cfg.xi, cfg.threshold_mode, cfg.trials, cfg.seed, type1, type2,
                            type1 + type2, wall, float(thr), max(used)))
    return rows


# ---------------------------------------------------------------------------
# coverage

def coverage_beta(cfg: ExperimentConfig, det: Detector, iters: int = 100) -> float:
    """``beta`` with ``nu (1 - nu) beta^2`` equal to ``signal_fraction`` times the
    smallest tolerance of the detector's queries (evaluated at the means of a
    representative alternative), found by fixed-point iteration."""
    if cfg.beta is not None:
        return float(cfg.beta)
    ocfg = _oracle_config(cfg, det)
    fam = det.families[0]
    v = np.asarray(gs_matrix(cfg.s, cfg.s)[0], dtype=float)
    v = np.concatenate([v, np.zeros(cfg.d - cfg.s)])
    w = cfg.nu * (1 - cfg.nu)
    null = make_null(cfg)
    tau = float(np.min(tolerance(ocfg, fam.bound, np.clip(fam.population_means(null), -fam.bound, fam.bound))))
    beta = math.sqrt(cfg.signal_fraction * tau / w)
    for _ in range(iters):
        alt = _coverage_instance(cfg, v, beta)
        E = np.clip(fam.population_means(alt), -fam.bound, fam.bound)
        tau = min(tau, float(np.min(tolerance(ocfg, fam.bound, E))))
        nb = math.sqrt(cfg.signal_fraction * tau / w)
        if abs(nb - beta) < 1e-12 * beta:
            return nb
        beta = nb
    return beta


def _coverage_instance(cfg, v, beta):
    if cfg.model == "gmm":
        S, kind = cfg.gmm_sigma()
        return gmm_alternative(v, beta, cfg.nu, S, kind)
    return reg_alternative(v, beta, cfg.noise)


def run_coverage(cfg: ExperimentConfig, return_transcripts=False):
    """Coverage certificate of the configured detector's queries over G(s).

    The alternatives are the ``beta``-scaled sign-support instances with
    ``beta`` from :func:`coverage_beta`.  Exit status (see the CLI) is 0
    iff a witness with identical transcripts is found.
    """
    det = build_detector(cfg)
    beta = coverage_beta(cfg, det)
    ocfg = _oracle_config(cfg, det)
    null = matched_null(_coverage_instance(cfg, np.r_[np.ones(cfg.s), np.zeros(cfg.d - cfg.s)], beta))
    alts = gs_matrix(cfg.d, cfg.s)
    algo = det.algorithm(det.formula_threshold)
    res = coverage_certificate(det.families, alts, lambda v: _coverage_instance(cfg, v, beta), ocfg,
                               null_instance=null, algorithm=algo, return_transcripts=return_transcripts)
    return (res, beta) if not return_transcripts else (*res, beta)


def run_calibrate(cfg: ExperimentConfig) -> dict:
    det = build_detector(cfg)
    null = make_null(cfg, cfg.gamma_grid[0])
    thr = dg.calibrate_threshold(det.statistic, null, cfg.xi, cfg.calibration_trials, cfg.n,
                                 seed=cfg.seed, keys=(2_000_003, 0), threads=cfg.threads)
    return {"model": cfg.model, "detector": cfg.detector, "d": cfg.d, "s": cfg.s, "n": cfg.n, "xi": cfg.xi,
            "R": cfg.truncation_R(), "trials": cfg.calibration_trials, "seed": cfg.seed,
            "threshold": thr, "formula_threshold": det.formula_threshold}


# ---------------------------------------------------------------------------
# verification suite

@dataclass
class VerifyCheck:
    name: str
    tolerance: float
    passed: bool
    detail: str


def run_verify(a2_fn=None, seed: int = 0, n_mc: int = 200_000) -> list:
    """Run the numerical self-checks; returns a list of :class:`VerifyCheck`.

    ``a2_fn`` replaces the closed form of ``a2`` (a corrupted version must be
    caught by the quadrature comparison).
    """
    a2 = dr.a2 if a2_fn is None else a2_fn
    checks = []

    def add(name, tol, ok, detail):
        checks.append(VerifyCheck(name, tol, bool(ok), detail))

    ts = np.concatenate([[0.0], np.geomspace(1e-3, 10, 60)])
    err = max(abs(a2(t) - dr.a2_quadrature(t)) for t in ts)
    add("a2 closed form vs quadrature", 1e-8, err <= 1e-8, f"max error {err:.3g}")
    add("a2(0) = 2", 0.0, a2(0.0) == 2.0, f"a2(0) = {a2(0.0)!r}")
    try:
        R = dr.truncation_level(0.5, 1000, a2_fn=a2)
        add("truncation level bracket", 0.0, 5.4 < R < 5.6, f"2 t* = {R:.6f}")
    except (dr.BracketError, ValueError) as e:
        add("truncation level bracket", 0.0, False, str(e))
    bad = [(d, s) for d in range(1, 11) for s in range(1, min(d, 3) + 1)
           if analysis.cj_table(d, s).sizes != analysis.cj_table_bruteforce(d, s)]
    add("overlap table vs enumeration (d <= 10, s <= 3)", 0.0, not bad, f"mismatches {bad}")
    g12 = analysis.growth_check(analysis.cj_table(12, 2))
    add("growth bound at d=12, s=2", 0.0, g12.holds, f"ratios {g12.ratios}")
    v = np.r_[1.0, 1.0, np.zeros(4)]
    val = analysis.chi2_cross_reg(v, v, 0.5, 1.0, 2)
    add("regression cross-moment pinned value", 1e-12, abs(val - 1.125) <= 1e-12, f"{val!r}")
    for kind, exact, mc in (
        ("gmm-known", analysis.chi2_cross_gmm_known(v, v, 0.6, 0.3),
         analysis.mc_cross_gmm_known(v, v, 0.6, 0.3, n_mc, seed)),
        ("gmm-unknown", analysis.chi2_cross_gmm_unknown(v, v, 0.4),
         analysis.mc_cross_gmm_unknown(v, v, 0.4, n_mc, seed)),
        ("regression", analysis.chi2_cross_reg(v, v, 0.2, 1.0, 2), analysis.mc_cross_reg(v, v, 0.2, 1.0, n_mc, seed)),
    ):
        z = abs(exact - mc[0]) / mc[1]
        add(f"{kind} cross-moment vs Monte Carlo", 5.0, z <= 5, f"{z:.2f} standard errors")
    fa = analysis.hermite_coeffs(lambda w: w * w, 4)
    gb = analysis.hermite_coeffs(lambda z: z * z - 1, 4)
    e = abs(analysis.hermite_cross_moment(fa, gb, 0.7) - 2 * 0.49)
    add("Hermite series E[W^2 (Z^2 - 1)] = 2 zeta^2", 1e-8, e <= 1e-8, f"error {e:.3g}")
    tau = tolerance(OracleConfig(xi=math.exp(-1), n=100, T=1), 1.0, 1.0)
    add("tolerance golden value", 1e-15, abs(tau - 0.01) <= 1e-15, f"{tau!r}")
    q = analysis.query_chi2_lower_bound(100**2, 0.01, 10**4)
    add("query chi-square bound golden value", 1e-7, abs(q - 9.2103e-4) <= 1e-7, f"{q!r}")
    fam = dg.exhaustive_queries(8, 2, n=500)
    X = 2.5 * sample(gmm_null(8), 500, trial_rng(seed, 5))
    e = float(np.abs(fam.empirical_means(X) - fam.evaluate(X).mean(axis=0)).max())
    add("fast family means vs direct evaluation", 1e-10, e <= 1e-10, f"max error {e:.3g}")
    bias = float(dg.truncation_bias(dg.exhaustive_queries(30, 3, n=1000),
                                    gmm_alternative(np.r_[np.ones(3), np.zeros(27)], 1.0)).max())
    add("mixture truncation bias at R = 6", 1e-3, bias <= 1e-3, f"{bias:.3g}")
    net = dg.covering_net(0.5, None, 5, 2)
    rate = dg.net_coverage_rate(net, 1000, seed)
    add("covering net probe coverage", 0.999, rate >= 0.999, f"rate {rate}")
    return checks


# ---------------------------------------------------------------------------
# SQ proximal gradient

class GradientFamily(QueryFamily):
    """Coordinate gradients of the squared loss, ``-(y - theta^T x) x_j`` clipped to ``[-M, M]``."""

    tag = "sq-gradient"

    def __init__(self, theta, bound, step_id=0):
        self.theta = np.asarray(theta, dtype=float).copy()
        super().__init__(bound, self.theta.size)
        self.prefix = f"grad{step_id}"

    def query(self, k):
        th, M = self.theta, self.bound

        def ev(D, k=k):
            return -(D[:, 0] - D[:, 1:] @ th) * D[:, 1 + k]

        return BoundedQuery(f"{self.prefix}[{k}]", M, ev, "sq-gradient",
                            population=lambda inst, k=k: _gradient_expectation(inst, th, k, M))

    def evaluate(self, D):
        D = np.atleast_2d(D)
        r = D[:, 0] - D[:, 1:] @ self.theta
        return np.clip(-r[:, None] * D[:, 1:], -self.bound, self.bound)

    def population_means(self, instance):
        if not isinstance(instance, LinearParams):
            raise TypeError("gradient queries need a linear-model instance")
        return np.array([_gradient_expectation(instance, self.theta, j, self.bound) for j in range(self.size)])


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass
class DemoResult:
    theta_hat: np.ndarray
    theta_lasso: np.ndarray
    theta_star: np.ndarray
    theta_ls_oracle: np.ndarray
    trace: list
    queries: int

    @property
    def error(self) -> float:
        return float(np.linalg.norm(self.theta_hat - self.theta_star))

    @property
    def lasso_error(self) -> float:
        return float(np.linalg.norm(self.theta_lasso - self.theta_star))

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("iter", "phase", "objective", "support_size"))
        for row in self.trace:
            w.writerow([row[0], row[1], repr(row[2]), row[3]])
        return buf.getvalue()


def demo_instance(cfg: ExperimentConfig) -> LinearParams:
    rng = trial_rng(cfg.seed, 3_000_017)
    theta = np.zeros(cfg.d)
    supp = rng.choice(cfg.d, size=cfg.s, replace=False)
    theta[supp] = rng.choice((-1.0, 1.0), size=cfg.s)
    return LinearParams(theta, cfg.sgd_noise)


def demo_sq_sgd(cfg: ExperimentConfig, oracle=None, instance: LinearParams | None = None) -> DemoResult:
    """Proximal gradient on the squared loss, with gradients as SQ queries.

    ``theta <- S_{step lambda}(theta - step g)`` with ``g_j`` the oracle's
    answer to the ``j``-th gradient query.  With ``sgd_refit`` the support
    found is refit by plain gradient steps restricted to it (same queries,
    no shrinkage).  Each phase stops early once no coordinate moves by more
    than ``sgd_tol``.  The objective ``L_n(theta) + lambda ||theta||_1`` is
    recorded per iteration from the data (monitoring only, no queries), or
    from the population when ``oracle`` is given without data.

    Raises
    ------
    DivergenceError
        If the objective increases on 10 consecutive iterations.
    """
    inst = demo_instance(cfg) if instance is None else instance
    d, n = inst.d, cfg.n
    data = None
    if oracle is None:
        data = sample(inst, n, trial_rng(cfg.seed, 3_000_019))
        oracle = HonestOracle(data)
    lam = 3.0 * math.sqrt(math.log(d) / n) if cfg.sgd_lambda is None else float(cfg.sgd_lambda)
    eta = cfg.sgd_step

    def loss(th):
        if data is not None:
            r = data[:, 0] - data[:, 1:] @ th
            return 0.5 * float(r @ r) / n
        dlt = inst.theta - th
        return 0.5 * (float(dlt @ dlt) + inst.sigma**2)

    T = cfg.sgd_iters * d + (cfg.sgd_refit_iters * d if cfg.sgd_refit else 0)
    ocfg = OracleConfig(xi=cfg.xi, n=n, T=T)
    trace = []
    state = {"theta": np.zeros(d)}

    def algo():
        th = state["theta"]
        prev, ups = math.inf, 0
        for t in range(cfg.sgd_iters):
            g = yield GradientFamily(th, cfg.sgd_bound, t)
            new = soft_threshold(th - eta * np.asarray(g), eta * lam)
            done = float(np.max(np.abs(new - th))) <= cfg.sgd_tol
            th = new
            obj = loss(th) + lam * float(np.abs(th).sum())
            trace.append((t + 1, "prox", obj, int(np.count_nonzero(th))))
            ups = ups + 1 if obj > prev else 0
            if ups >= 10:
                raise DivergenceError("objective increased for 10 consecutive iterations")
            prev = obj
            if done:
                break
        lasso = th.copy()
        if cfg.sgd_refit:
            mask = (th != 0).astype(float)
            for t in range(cfg.sgd_refit_iters):
                g = yield GradientFamily(th, cfg.sgd_bound, cfg.sgd_iters + t)
                new = th - eta * mask * np.asarray(g)
                done = float(np.max(np.abs(new - th))) <= cfg.sgd_tol
                th = new
                trace.append((cfg.sgd_iters + t + 1, "refit", loss(th), int(np.count_nonzero(th))))
                if done:
                    break
        return lasso, th

    tr = run_algorithm(algo, oracle, ocfg)
    lasso, th = tr.result
    supp = np.flatnonzero(inst.theta)
    ls = np.zeros(d)
    if data is not None:
        Xs = data[:, 1:][:, supp]
        ls[supp] = np.linalg.lstsq(Xs, data[:, 0], rcond=None)[0]
    else:
        ls[supp] = inst.theta[supp]
    return DemoResult(th, lasso, inst.theta.copy(), ls, trace, tr.budget_used)
