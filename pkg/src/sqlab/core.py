"""Statistical query model primitives.

Bounded queries, oracle configurations, the tolerance rule, transcripts and
a budget-enforcing runner for (possibly adaptive) query algorithms.

An algorithm is a zero-argument callable returning a generator.  The
generator yields either a single :class:`BoundedQuery` (and is sent back a
float) or a :class:`QueryFamily` (and is sent back a float array with one
response per member, in family order).  Whatever the generator returns is
stored on the transcript as ``result``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "FAMILY_TAGS",
    "QueryBoundError",
    "BudgetExhausted",
    "BoundedQuery",
    "QueryFamily",
    "OracleConfig",
    "Transcript",
    "tolerance",
    "finite_capacity",
    "run_algorithm",
    "batch_algorithm",
]

FAMILY_TAGS = (
    "gmm-exhaustive",
    "gmm-diagonal",
    "gmm-net-stage1",
    "gmm-net-stage2",
    "reg-exhaustive",
    "reg-coordinate",
    "sq-gradient",
    "custom",
)


class QueryBoundError(ValueError):
    """Raised in strict mode when a query evaluates outside [-M, M]."""


class BudgetExhausted(RuntimeError):
    """Raised when an algorithm issues more than T queries.

    The partial transcript (first T answers) is attached as ``transcript``.
    """

    def __init__(self, msg, transcript=None):
        super().__init__(msg)
        self.transcript = transcript


def _check_tag(tag):
    if tag not in FAMILY_TAGS:
        raise ValueError(f"unknown family tag {tag!r}")


class BoundedQuery:
    """A named real function on the sample space with a declared bound.

    Parameters
    ----------
    id : str
        Unique identifier, recorded in transcripts.
    bound : float
        The bound ``M``.  Evaluations are clipped to ``[-M, M]`` unless
        ``strict`` is set, in which case a violation raises.
    eval : callable
        Vectorized map from an ``(n, p)`` array of sample points to ``n``
        reals.
    family_tag : str
        One of :data:`FAMILY_TAGS`.
    population : callable, optional
        ``population(instance) -> float`` giving the exact expectation.
        Registered families attach this; custom queries fall back to
        Monte Carlo in :func:`sqlab.models.population_expectation`.
    strict : bool
        Raise :class:`QueryBoundError` instead of clipping.
    """

    __slots__ = ("id", "bound", "_eval", "family_tag", "population", "strict")

    def __init__(self, id: str, bound: float, eval: Callable, family_tag="custom",
                 population=None, strict=False):
        if not bound > 0 or not math.isfinite(bound):
            raise ValueError("query bound must be a positive finite real")
        _check_tag(family_tag)
        self.id = str(id)
        self.bound = float(bound)
        self._eval = eval
        self.family_tag = family_tag
        self.population = population
        self.strict = bool(strict)

    def __call__(self, X) -> np.ndarray:
        vals = np.asarray(self._eval(np.atleast_2d(X)), dtype=float)
        M = self.bound
        if self.strict:
            if np.any(np.abs(vals) > M):
                raise QueryBoundError(f"query {self.id} exceeded its bound {M}")
            return vals
        return np.clip(vals, -M, M)

    def mean(self, X) -> float:
        return float(np.mean(self(X)))

    def __repr__(self):
        return f"BoundedQuery({self.id!r}, bound={self.bound:g}, tag={self.family_tag})"


class QueryFamily:
    """An ordered finite family of bounded queries sharing one bound.

    Subclasses provide vectorized evaluation.  The defaults fall back to
    the member queries one at a time.
    """

    tag = "custom"
    prefix = "q"

    def __init__(self, bound: float, size: int):
        self.bound = float(bound)
        self.size = int(size)

    def __len__(self):
        return self.size

    @property
    def ids(self) -> list:
        cached = self.__dict__.get("_ids")
        if cached is None or cached[0] != self.prefix:
            cached = (self.prefix, [f"{self.prefix}[{k}]" for k in range(self.size)])
            self.__dict__["_ids"] = cached
        return cached[1]

    def query(self, k: int) -> BoundedQuery:
        raise NotImplementedError

    def __iter__(self) -> Iterator[BoundedQuery]:
        for k in range(self.size):
            yield self.query(k)

    def evaluate(self, X) -> np.ndarray:
        """Return the ``(n, size)`` matrix of (clipped) query values."""
        return np.column_stack([q(X) for q in self])

    def empirical_means(self, X) -> np.ndarray:
        return self.evaluate(X).mean(axis=0)

    def population_means(self, instance) -> np.ndarray:
        return np.array([self.query(k).population(instance) for k in range(self.size)])


@dataclass(frozen=True)
class OracleConfig:
    """Parameters of the oracle: tail probability, sample size, budget, capacity.

    ``xi`` must lie in (0, 1); zero is rejected because ``log(1/xi)`` would
    be infinite.
    """

    xi: float
    n: int
    T: int
    capacity: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.xi < 1.0):
            raise ValueError("xi must lie in the open interval (0, 1)")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if int(self.T) != self.T or self.T < 0:
            raise ValueError("T must be a nonnegative integer")
        if not self.capacity >= 0:
            raise ValueError("capacity must be nonnegative")

    @classmethod
    def for_family(cls, xi, n, size, T=None):
        """Config whose capacity is ``log(size)`` of a finite query class."""
        return cls(xi=xi, n=n, T=size if T is None else T, capacity=finite_capacity(size))


def finite_capacity(class_size: int) -> float:
    """Capacity of a finite query class, ``log |Q|``."""
    if int(class_size) != class_size or class_size < 1:
        raise ValueError("class size must be a positive integer")
    return math.log(class_size)


def tolerance(config: OracleConfig, M, expectation):
    """Oracle tolerance for a query bounded by ``M`` with the given mean.

    ``max{(eta + log(1/xi)) M / n, sqrt(2 (eta + log(1/xi)) (M^2 - E^2) / n)}``
    with ``eta`` the class capacity.  Array ``expectation`` is accepted.

    Raises
    ------
    ValueError
        If ``|expectation| > M``.
    """
    E = np.asarray(expectation, dtype=float)
    M = float(M)
    if not M > 0:
        raise ValueError("M must be positive")
    if np.any(np.abs(E) > M):
        raise ValueError("|expectation| exceeds the query bound M")
    k = config.capacity + math.log(1.0 / config.xi)
    var = np.maximum(M * M - E * E, 0.0)
    out = np.maximum(k * M / config.n, np.sqrt(2.0 * k * var / config.n))
    return float(out) if out.ndim == 0 else out


class Transcript:
    """Ordered (query id, response) log of one algorithm run."""

    def __init__(self):
        self.ids: list = []
        self.responses: list = []
        self.result = None

    @property
    def entries(self) -> list:
        return list(zip(self.ids, self.responses))

    @property
    def budget_used(self) -> int:
        return len(self.ids)

    def __len__(self):
        return len(self.ids)

    def append(self, qid, value):
        self.ids.append(qid)
        self.responses.append(float(value))

    def extend(self, ids: Sequence, values):
        self.ids.extend(ids)
        self.responses.extend(np.asarray(values, dtype=float).tolist())

    def values(self) -> np.ndarray:
        return np.asarray(self.responses, dtype=float)

    def identical_to(self, other: "Transcript") -> bool:
        """Bitwise equality of ids and float64 responses."""
        if self.ids != other.ids:
            return False
        return self.values().tobytes() == other.values().tobytes()


def _respond_family(oracle, family):
    f = getattr(oracle, "respond_family", None)
    if f is not None:
        return np.asarray(f(family), dtype=float)
    return np.array([oracle.respond(q) for q in family])


def run_algorithm(algorithm, oracle, config: OracleConfig) -> Transcript:
    """Run ``algorithm`` against ``oracle`` enforcing the budget ``config.T``.

    Raises
    ------
    BudgetExhausted
        At the first query past the budget.  Earlier answers are kept.
    """
    tr = Transcript()
    gen = algorithm()
    try:
        item = next(gen)
    except StopIteration as stop:
        tr.result = stop.value
        return tr
    while True:
        room = config.T - tr.budget_used
        if isinstance(item, QueryFamily):
            resp = _respond_family(oracle, item)
            if item.size > room:
                tr.extend(item.ids[:room], resp[:room])
                gen.close()
                raise BudgetExhausted(f"budget T={config.T} exhausted", tr)
            tr.extend(item.ids, resp)
            send = resp
        elif isinstance(item, BoundedQuery):
            if room < 1:
                gen.close()
                raise BudgetExhausted(f"budget T={config.T} exhausted", tr)
            send = float(oracle.respond(item))
            tr.append(item.id, send)
        else:
            gen.close()
            raise TypeError(f"algorithm yielded {type(item).__name__}, not a query")
        try:
            item = gen.send(send)
        except StopIteration as stop:
            tr.result = stop.value
            return tr


def batch_algorithm(*families):
    """Non-adaptive algorithm issuing the given families/queries in order."""
    def algo():
        out = []
        for fam in families:
            out.append((yield fam))
        return out
    return algo
