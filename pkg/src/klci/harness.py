"""Monte Carlo experiments: coverage and width of interval policies.

Replication r draws its data from ``default_rng([seed, r, 0])`` and its
sampling costs from ``default_rng([seed, r, 1])``, so results do not depend
on execution order, and a unit-cost budget C reproduces the fixed-size
experiment with N = C exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import (
    BOUNDED,
    RegimeSpec,
    limiting_width_nonparam,
    limiting_width_param,
    shekhar_bound_gaussian,
)
from .errors import DomainError
from .exp_family import ExpFamilyModel, Family
from .klinf import EmpiricalDist, HeavyFamilySpec
from .policies import (
    METHODS,
    ConfidenceInterval,
    SidedRequest,
    ci_bernstein,
    ci_hoeffding,
    ci_mp_eb,
    ci_pi1,
    ci_pi1_b,
    ci_pi1_h,
    ci_pi1_hat,
    make_one_sided,
)

__all__ = [
    "BernoulliGen",
    "GaussianGen",
    "PoissonGen",
    "GammaGen",
    "ParetoGen",
    "UnitCost",
    "UniformCost",
    "ExponentialCost",
    "MethodSpec",
    "ExperimentConfig",
    "ResultRow",
    "CurvePoint",
    "sample_count_for_budget",
    "run_fixed_n",
    "run_budget",
    "run_experiment",
    "lower_bound_curve",
]


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value}")


# --- data generators -------------------------------------------------------


@dataclass(frozen=True)
class BernoulliGen:
    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    @property
    def mean(self) -> float:
        return self.p

    @property
    def std(self) -> float:
        return math.sqrt(self.p * (1.0 - self.p))

    @property
    def label(self) -> str:
        return f"bernoulli(p={self.p:g})"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) < self.p).astype(float)


@dataclass(frozen=True)
class GaussianGen:
    mu: float
    sigma: float

    def __post_init__(self):
        _positive("Gaussian sigma", self.sigma)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def std(self) -> float:
        return self.sigma

    @property
    def label(self) -> str:
        return f"gaussian(mu={self.mu:g};sigma={self.sigma:g})"

    def sample(self, rng, n):
        return rng.normal(self.mu, self.sigma, n)


@dataclass(frozen=True)
class PoissonGen:
    mu: float

    def __post_init__(self):
        _positive("Poisson mean", self.mu)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def std(self) -> float:
        return math.sqrt(self.mu)

    @property
    def label(self) -> str:
        return f"poisson(mu={self.mu:g})"

    def sample(self, rng, n):
        return rng.poisson(self.mu, n).astype(float)


@dataclass(frozen=True)
class GammaGen:
    shape: float
    mean_value: float

    def __post_init__(self):
        _positive("Gamma shape", self.shape)
        _positive("Gamma mean", self.mean_value)

    @property
    def mean(self) -> float:
        return self.mean_value

    @property
    def std(self) -> float:
        return self.mean_value / math.sqrt(self.shape)

    @property
    def label(self) -> str:
        return f"gamma(shape={self.shape:g};mean={self.mean_value:g})"

    def sample(self, rng, n):
        return rng.gamma(self.shape, self.mean_value / self.shape, n)


@dataclass(frozen=True)
class ParetoGen:
    """Pareto with scale x_m and tail index alpha, by inverse CDF."""

    x_m: float
    alpha: float

    def __post_init__(self):
        _positive("Pareto scale", self.x_m)
        if not (self.alpha > 1.0):
            raise DomainError(f"Pareto alpha must exceed 1 for a finite mean, got {self.alpha}")

    @property
    def mean(self) -> float:
        return self.alpha * self.x_m / (self.alpha - 1.0)

    @property
    def std(self) -> float:
        if self.alpha <= 2.0:
            return math.inf
        a = self.alpha
        return self.x_m / (a - 1.0) * math.sqrt(a / (a - 2.0))

    @property
    def label(self) -> str:
        return f"pareto(x_m={self.x_m:g};alpha={self.alpha:g})"

    def sample(self, rng, n):
        u = 1.0 - rng.random(n)  # in (0, 1]
        return self.x_m * u ** (-1.0 / self.alpha)


# --- cost models -----------------------------------------------------------


@dataclass(frozen=True)
class UnitCost:
    @property
    def mean_cost(self) -> float:
        return 1.0

    def sample(self, rng, size):
        return np.ones(size)


@dataclass(frozen=True)
class UniformCost:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b < math.inf):
            raise DomainError(f"uniform cost needs 0 <= a < b, got a={self.a}, b={self.b}")

    @property
    def mean_cost(self) -> float:
        return 0.5 * (self.a + self.b)

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class ExponentialCost:
    mean: float

    def __post_init__(self):
        _positive("exponential cost mean", self.mean)

    @property
    def mean_cost(self) -> float:
        return self.mean

    def sample(self, rng, size):
        return rng.exponential(self.mean, size)


def sample_count_for_budget(cost_stream: Sequence[float], C: float) -> int:
    """Largest n whose first n costs sum to at most C."""
    costs = np.asarray(cost_stream, dtype=float)
    return int(np.searchsorted(np.cumsum(costs), C, side="right"))


def _draw_tau(cost_model, rng, C: float) -> int:
    chunk = int(min(2.0 * C / cost_model.mean_cost + 64, 1e7))
    total = 0.0
    tau = 0
    while True:
        costs = cost_model.sample(rng, chunk)
        csum = total + np.cumsum(costs)
        k = int(np.searchsorted(csum, C, side="right"))
        tau += k
        if k < chunk:
            return tau
        total = float(csum[-1])


# --- methods and configuration --------------------------------------------


@dataclass(frozen=True)
class MethodSpec:
    """A policy tag with the parameters it needs.

    ``model`` is used by pi1/pi1hat, ``sigma`` by bernstein and ``heavy`` by
    pi1h.  ``side`` turns the interval into a one-sided one.
    """

    tag: str
    model: ExpFamilyModel | None = None
    sigma: float | None = None
    heavy: HeavyFamilySpec | None = None
    side: SidedRequest = SidedRequest.TWO_SIDED

    def __post_init__(self):
        if self.tag not in METHODS:
            raise DomainError(f"unknown method {self.tag!r}; choose from {', '.join(METHODS)}")
        object.__setattr__(self, "side", SidedRequest(self.side))
        if self.tag in ("pi1", "pi1hat") and self.model is None:
            raise DomainError(f"method {self.tag} needs a model")
        if self.tag == "bernstein" and self.sigma is None:
            raise DomainError("method bernstein needs sigma")
        if self.tag == "pi1h" and self.heavy is None:
            raise DomainError("method pi1h needs a heavy-tail spec")

    @property
    def label(self) -> str:
        if self.side is SidedRequest.TWO_SIDED:
            return self.tag
        return f"{self.tag}:{self.side.value}"

    def domain(self) -> tuple[float, float]:
        if self.tag in ("pi1", "pi1hat"):
            return self.model.mean_domain
        if self.tag == "pi1h":
            return -self.heavy.m_half, self.heavy.m_half
        return 0.0, 1.0

    def apply(self, samples: np.ndarray, nu: EmpiricalDist, delta: float) -> ConfidenceInterval:
        tag = self.tag
        if tag == "pi1":
            ci = ci_pi1(self.model, samples, delta)
        elif tag == "pi1hat":
            ci = ci_pi1_hat(self.model, samples, delta)
        elif tag == "pi1b":
            ci = ci_pi1_b(nu, delta)
        elif tag == "pi1h":
            ci = ci_pi1_h(nu, delta, self.heavy)
        elif tag == "hoeffding":
            ci = ci_hoeffding(samples, delta)
        elif tag == "bernstein":
            ci = ci_bernstein(samples, self.sigma, delta)
        else:
            ci = ci_mp_eb(samples, delta)
        return make_one_sided(ci, self.side, self.domain())


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a generator, methods, and a fixed size or a cost budget.

    Exactly one of ``n`` and ``budget`` is set.
    """

    generator: object
    methods: tuple[MethodSpec, ...]
    delta: float
    replications: int
    seed: int = 0
    n: int | None = None
    budget: float | None = None
    cost: object = field(default_factory=UnitCost)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise DomainError("no methods configured")
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError(f"replications must be a positive integer, got {self.replications}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if (self.n is None) == (self.budget is None):
            raise DomainError("set exactly one of a sample size n and a budget C")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.budget is not None:
            _positive("budget C", self.budget)

    @property
    def is_budget(self) -> bool:
        return self.budget is not None


@dataclass(frozen=True)
class ResultRow:
    method: str
    dist: str
    n_or_C: float
    delta: float
    reps: int
    avg_width: float
    width_stderr: float
    coverage: float
    avg_samples: float
    excluded: int
    wall_ms: float


# Discrete data often repeat the same empirical distribution; caching the
# interval per distinct sample avoids recomputing it.  Only small supports
# are cached since continuous data never repeat.
_CACHE_MAX_ATOMS = 64
_CACHE_MAX_ENTRIES = 200_000


class _Accumulator:
    def __init__(self):
        self.widths = []
        self.covered = 0
        self.excluded = 0
        self.seconds = 0.0
        self.cache = {}

    def row(self, method, config, samples_total) -> ResultRow:
        reps = config.replications
        k = len(self.widths)
        w = np.asarray(self.widths, dtype=float)
        if k == 0:
            avg, se, cov = math.nan, math.nan, math.nan
        else:
            avg = float(w.mean())
            if k == 1:
                se = 0.0
            elif np.all(np.isfinite(w)):
                se = float(w.std(ddof=1) / math.sqrt(k))
            else:
                se = math.nan
            cov = self.covered / k
        return ResultRow(
            method=method.label,
            dist=config.generator.label,
            n_or_C=float(config.budget if config.is_budget else config.n),
            delta=config.delta,
            reps=reps,
            avg_width=avg,
            width_stderr=se,
            coverage=cov,
            avg_samples=samples_total / reps,
            excluded=self.excluded,
            wall_ms=1000.0 * self.seconds,
        )


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run every replication of ``config`` and aggregate one row per method."""
    gen = config.generator
    truth = gen.mean
    accs = [_Accumulator() for _ in config.methods]
    samples_total = 0
    for r in range(config.replications):
        data_rng = np.random.default_rng([config.seed, r, 0])
        if config.is_budget:
            n = _draw_tau(config.cost, np.random.default_rng([config.seed, r, 1]), config.budget)
        else:
            n = config.n
        samples_total += n
        if n == 0:
            for acc in accs:
                acc.excluded += 1
            continue
        x = gen.sample(data_rng, n)
        nu = EmpiricalDist.from_samples(x)
        cacheable = len(nu) <= _CACHE_MAX_ATOMS
        for method, acc in zip(config.methods, accs):
            t0 = time.perf_counter()
            ci = acc.cache.get(nu.key) if cacheable else None
            if ci is None:
                try:
                    ci = method.apply(x, nu, config.delta)
                except (DomainError, ValueError):
                    ci = False
                if cacheable and len(acc.cache) < _CACHE_MAX_ENTRIES:
                    acc.cache[nu.key] = ci
            acc.seconds += time.perf_counter() - t0
            if ci is False:
                acc.excluded += 1
                continue
            acc.widths.append(ci.width)
            acc.covered += ci.contains(truth)
    return [acc.row(m, config, samples_total) for m, acc in zip(config.methods, accs)]


def run_fixed_n(config: ExperimentConfig) -> list[ResultRow]:
    if config.is_budget:
        raise DomainError("run_fixed_n needs a configuration with a fixed n")
    return run_experiment(config)


def run_budget(config: ExperimentConfig) -> list[ResultRow]:
    if not config.is_budget:
        raise DomainError("run_budget needs a configuration with a cost budget")
    return run_experiment(config)


# --- lower-bound curves ----------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    k: float
    mu_star_L: float
    mu_star_R: float
    width: float
    comparator: float | None


def lower_bound_curve(
    model_or_nu,
    k_grid: Sequence[float],
    cbar: float = 1.0,
    mu: float | None = None,
    family=BOUNDED,
) -> list[CurvePoint]:
    """Limiting width over a grid of k, with the Gaussian comparator when defined.

    ``model_or_nu`` is an :class:`ExpFamilyModel` (then ``mu`` is required)
    or an :class:`EmpiricalDist` standing in for a nonparametric truth, in
    which case ``family`` selects the bounded or heavy-tailed family.
    """
    ks = [float(k) for k in k_grid]
    if not ks or any(not (k > 0) for k in ks):
        raise DomainError("k grid must contain positive values")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("k grid must be strictly ascending")
    out = []
    for k in ks:
        spec = RegimeSpec(k, cbar)
        comp = None
        if isinstance(model_or_nu, ExpFamilyModel):
            if mu is None:
                raise DomainError("a parametric curve needs the mean mu")
            lw = limiting_width_param(model_or_nu, mu, spec)
            if model_or_nu.kind is Family.GAUSSIAN:
                comp = shekhar_bound_gaussian(model_or_nu.sigma, k / cbar)
        else:
            lw = limiting_width_nonparam(model_or_nu, spec, family)
        out.append(CurvePoint(k, lw.mu_star_L, lw.mu_star_R, lw.width, comp))
    return out
