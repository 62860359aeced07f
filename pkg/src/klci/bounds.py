"""Limiting-width lower bounds in the three learning regimes.

With N samples (or a cost budget C) growing like k log(1/delta) as
delta -> 0, no stable interval policy can beat the endpoints

    d(mu, mu_L*) = d(mu, mu_R*) = cbar / k

(KL_inf in place of d for nonparametric families).  k = 0 leaves the whole
mean domain undetermined and k = inf lets the width vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError
from .exp_family import ExpFamilyModel, Family
from .klinf import EmpiricalDist, HeavyFamilySpec, Side, _check_heavy, _heavy_raw, klinf_bounded_lower, klinf_bounded_upper
from .policies import Direction, invert_divergence

__all__ = [
    "Regime",
    "RegimeSpec",
    "LimitingWidth",
    "BOUNDED",
    "classify_regime",
    "limiting_width_param",
    "limiting_width_nonparam",
    "shekhar_bound_gaussian",
    "rate_constant",
    "k_hat",
]

BOUNDED = "bounded"

_BELOW_ONE = 1.0 - 2.0**-53
_ABOVE_ZERO = 2.0**-53


class Regime(str, Enum):
    NO_LEARNING = "no_learning"
    SUFFICIENT = "sufficient"
    COMPLETE = "complete"


@dataclass(frozen=True)
class RegimeSpec:
    """Scaling constant k of the sample size (or budget) in log(1/delta)."""

    k: float
    cbar: float = 1.0

    def __post_init__(self):
        if math.isnan(self.k) or self.k < 0:
            raise DomainError(f"k must be nonnegative, got {self.k}")
        if not (self.cbar > 0 and math.isfinite(self.cbar)):
            raise DomainError(f"cbar must be positive, got {self.cbar}")


@dataclass(frozen=True)
class LimitingWidth:
    regime: Regime
    mu_star_L: float
    mu_star_R: float

    @property
    def width(self) -> float:
        return self.mu_star_R - self.mu_star_L


def classify_regime(spec: RegimeSpec) -> Regime:
    if spec.k == 0:
        return Regime.NO_LEARNING
    if math.isinf(spec.k):
        return Regime.COMPLETE
    return Regime.SUFFICIENT


def limiting_width_param(model: ExpFamilyModel, mu: float, spec: RegimeSpec) -> LimitingWidth:
    """Endpoints solving d(mu, .) = cbar / k on both sides of mu."""
    if not model.in_domain(mu):
        raise DomainError(f"mean {mu} outside the domain of {model.label}")
    regime = classify_regime(spec)
    lo, hi = model.mean_domain
    if regime is Regime.NO_LEARNING:
        return LimitingWidth(regime, lo, hi)
    if regime is Regime.COMPLETE:
        return LimitingWidth(regime, mu, mu)
    level = spec.cbar / spec.k
    if model.kind is Family.GAUSSIAN:
        half = model.sigma * math.sqrt(2.0 * level)
        return LimitingWidth(regime, mu - half, mu + half)

    def f(q):
        return model.divergence(mu, q)

    right = invert_divergence(f, level, (mu, hi), Direction.RIGHT)
    left = invert_divergence(f, level, (mu, lo), Direction.LEFT)
    return LimitingWidth(regime, left, right)


def limiting_width_nonparam(nu: EmpiricalDist, spec: RegimeSpec, family) -> LimitingWidth:
    """Endpoints solving KL_inf(nu, ., family) = cbar / k.

    ``family`` is either the string ``"bounded"`` (support [0, 1]) or a
    :class:`HeavyFamilySpec`.
    """
    regime = classify_regime(spec)
    if isinstance(family, HeavyFamilySpec):
        _check_heavy(nu, nu.mean, family)
        lo, hi = -family.m_half, family.m_half
    elif family == BOUNDED:
        if nu.values[0] < 0.0 or nu.values[-1] > 1.0:
            raise DomainError("distribution is not supported on [0, 1]")
        lo, hi = 0.0, 1.0
    else:
        raise DomainError(f"unknown family {family!r}")
    m = nu.mean
    if regime is Regime.NO_LEARNING:
        return LimitingWidth(regime, lo, hi)
    if regime is Regime.COMPLETE:
        return LimitingWidth(regime, m, m)
    level = spec.cbar / spec.k

    if isinstance(family, HeavyFamilySpec):
        edge = family.m_half * (1.0 - 1e-12)

        def fu(q):
            return _heavy_raw(nu, q, family, Side.UPPER, math.nan)[0]

        def fl(q):
            return _heavy_raw(nu, q, family, Side.LOWER, math.nan)[0]

        right = invert_divergence(fu, level, (m, edge), Direction.RIGHT)
        left = invert_divergence(fl, level, (m, -edge), Direction.LEFT)
        right = hi if right == edge else right
        left = lo if left == -edge else left
        return LimitingWidth(regime, left, right)

    def fu(q):
        return klinf_bounded_upper(nu, q).value

    def fl(q):
        return klinf_bounded_lower(nu, q).value

    if m >= _BELOW_ONE:
        right = 1.0
    else:
        right = invert_divergence(fu, level, (max(m, _ABOVE_ZERO), _BELOW_ONE), Direction.RIGHT)
        right = 1.0 if right == _BELOW_ONE else right
    if m <= _ABOVE_ZERO:
        left = 0.0
    else:
        left = invert_divergence(fl, level, (min(m, _BELOW_ONE), _ABOVE_ZERO), Direction.LEFT)
        left = 0.0 if left == _ABOVE_ZERO else left
    return LimitingWidth(regime, left, right)


def shekhar_bound_gaussian(sigma: float, k: float) -> float:
    """Comparator lower bound sigma sqrt(2/k) for Gaussian means."""
    if not (sigma > 0) or not (k > 0):
        raise DomainError("sigma and k must be positive")
    return sigma * math.sqrt(2.0 / k)


def rate_constant(model: ExpFamilyModel, mu: float) -> float:
    """Best achievable limit of width^2 N / log(1/delta): 8 times the variance."""
    return 8.0 * model.variance(mu)


def k_hat(n: float, delta: float) -> float:
    """Finite-sample proxy N / log(1/delta) for the scaling constant k."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not (n > 0):
        raise DomainError(f"N must be positive, got {n}")
    return n / math.log(1.0 / delta)
