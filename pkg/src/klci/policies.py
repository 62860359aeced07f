"""Confidence interval policies.

KL-based policies report every q whose divergence from the estimate, scaled
by the sample count, stays below a threshold beta:

    [min{q : n d(mu_hat, q) <= beta}, max{q : n d(mu_hat, q) <= beta}].

``pi1`` uses beta = log(2/delta) for a fixed sample size, ``pi1hat`` the
anytime threshold for random sample counts, and ``pi1b``/``pi1h`` replace d
by KL_inf over the bounded and heavy-tailed families.  Hoeffding, Bernstein
and Maurer-Pontil empirical Bernstein intervals are provided as baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, EmptySampleError, SupportError
from .exp_family import ExpFamilyModel, Family
from .klinf import (
    EmpiricalDist,
    HeavyFamilySpec,
    Side,
    _check_heavy,
    _heavy_raw,
    klinf_bounded_lower,
    klinf_bounded_upper,
)
from .thresholds import beta_anytime, beta_bounded, beta_fixed, beta_heavy

__all__ = [
    "ConfidenceInterval",
    "Direction",
    "SidedRequest",
    "METHODS",
    "invert_divergence",
    "ci_pi1",
    "ci_pi1_hat",
    "ci_pi1_b",
    "ci_pi1_h",
    "ci_hoeffding",
    "ci_bernstein",
    "ci_mp_eb",
    "ci_one_sided",
    "make_one_sided",
]

METHODS = ("pi1", "pi1hat", "pi1b", "pi1h", "hoeffding", "bernstein", "mpeb")

# closest representable targets to the ends of [0, 1]
_BELOW_ONE = 1.0 - 2.0**-53
_ABOVE_ZERO = 2.0**-53
# finite stand-in for +inf so that brentq's interpolation stays defined
_BIG = 1e300


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class SidedRequest(str, Enum):
    TWO_SIDED = "two"
    LOWER_ONLY = "lower"
    UPPER_ONLY = "upper"


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    point_estimate: float
    method: str
    n_used: int
    beta_used: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, mu: float) -> bool:
        return self.lower <= mu <= self.upper


def invert_divergence(
    f: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    direction: Direction = Direction.RIGHT,
) -> float:
    """Point where a one-sided divergence profile reaches ``target``.

    ``f`` is zero at the inner end of ``bracket`` and increases toward the
    outer end.  The outer end is returned when f stays at or below the
    target over the whole bracket.  An infinite outer end is approached by
    geometric expansion.

    Parameters
    ----------
    f : callable
        Monotone nonnegative profile.
    target : float
        Positive level to reach.
    bracket : (inner, outer)
        Search interval; ``outer`` lies to the right of ``inner`` for
        ``Direction.RIGHT`` and to the left for ``Direction.LEFT``.
    """
    if not (target > 0.0):
        raise DomainError(f"target must be positive, got {target}")
    inner, outer = float(bracket[0]), float(bracket[1])
    sign = 1.0 if Direction(direction) is Direction.RIGHT else -1.0
    if sign * (outer - inner) < 0.0:
        raise BracketError("bracket points the wrong way for the requested direction")
    f_in = f(inner)
    if f_in > target:
        raise BracketError(f"profile is {f_in!r} > target at the inner end")
    if f_in == target or outer == inner:
        return inner
    if math.isinf(outer):
        step = max(1.0, abs(inner))
        near = inner
        while True:
            far = inner + sign * step
            if math.isinf(far):
                return outer
            if f(far) > target:
                outer = far
                break
            near = far
            step *= 2.0
        inner = near
    elif f(outer) <= target:
        return outer

    def g(q):
        v = f(q)
        return (v if v < _BIG else _BIG) - target

    lo, hi = (inner, outer) if sign > 0 else (outer, inner)
    return brentq(g, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=500)


def _as_array(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySampleError("no samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    return x


def _check_model_data(model: ExpFamilyModel, x: np.ndarray) -> float:
    kind = model.kind
    if kind is Family.BERNOULLI and (x.min() < 0.0 or x.max() > 1.0):
        raise DomainError("Bernoulli model needs samples in [0, 1]")
    if kind in (Family.POISSON, Family.GAMMA) and x.min() < 0.0:
        raise DomainError(f"{kind.value} model needs nonnegative samples")
    mu = float(x.mean())
    if kind is Family.BERNOULLI:
        mu = min(max(mu, 0.0), 1.0)
    if kind is Family.GAMMA and mu <= 0.0:
        raise DomainError("Gamma model needs a positive sample mean")
    return mu


def _kl_endpoints(model: ExpFamilyModel, mu: float, n: int, beta: float) -> tuple[float, float]:
    if model.kind is Family.GAUSSIAN:
        half = model.sigma * math.sqrt(2.0 * beta / n)
        return mu - half, mu + half
    lo, hi = model.mean_domain
    target = beta / n

    def f(q):
        return model.divergence(mu, q)

    upper = invert_divergence(f, target, (mu, hi), Direction.RIGHT)
    lower = invert_divergence(f, target, (mu, lo), Direction.LEFT)
    return lower, upper


def ci_pi1(model: ExpFamilyModel, samples, delta: float) -> ConfidenceInterval:
    """KL interval for a fixed sample size, beta = log(2/delta)."""
    x = _as_array(samples)
    mu = _check_model_data(model, x)
    beta = beta_fixed(delta)
    lower, upper = _kl_endpoints(model, mu, x.size, beta)
    return ConfidenceInterval(lower, upper, mu, "pi1", int(x.size), beta)


def ci_pi1_hat(model: ExpFamilyModel, samples, delta: float) -> ConfidenceInterval:
    """KL interval with the anytime threshold; valid for a random sample count."""
    x = _as_array(samples)
    mu = _check_model_data(model, x)
    beta = beta_anytime(x.size, delta)
    lower, upper = _kl_endpoints(model, mu, x.size, beta)
    return ConfidenceInterval(lower, upper, mu, "pi1hat", int(x.size), beta)


def _as_empirical(data) -> EmpiricalDist:
    if isinstance(data, EmpiricalDist):
        if data.n is None:
            raise EmptySampleError("empirical distribution carries no sample count")
        return data
    return EmpiricalDist.from_samples(_as_array(data))


def ci_pi1_b(data, delta: float) -> ConfidenceInterval:
    """KL_inf interval over distributions supported on [0, 1]."""
    nu = _as_empirical(data)
    if nu.values[0] < 0.0 or nu.values[-1] > 1.0:
        raise SupportError("samples must lie in [0, 1]")
    n = nu.n
    beta = beta_bounded(n, delta)
    m = min(max(nu.mean, 0.0), 1.0)

    def f_up(q):
        return n * klinf_bounded_upper(nu, q).value

    def f_lo(q):
        return n * klinf_bounded_lower(nu, q).value

    if m >= _BELOW_ONE:
        upper = 1.0
    else:
        upper = invert_divergence(f_up, beta, (max(m, _ABOVE_ZERO), _BELOW_ONE), Direction.RIGHT)
        if upper == _BELOW_ONE:
            upper = 1.0
    if m <= _ABOVE_ZERO:
        lower = 0.0
    else:
        lower = invert_divergence(f_lo, beta, (min(m, _BELOW_ONE), _ABOVE_ZERO), Direction.LEFT)
        if lower == _ABOVE_ZERO:
            lower = 0.0
    return ConfidenceInterval(lower, upper, nu.mean, "pi1b", n, beta)


def ci_pi1_h(data, delta: float, spec: HeavyFamilySpec) -> ConfidenceInterval:
    """KL_inf interval over distributions with E|X|^(1+eps) <= gamma."""
    nu = _as_empirical(data)
    m = nu.mean
    _check_heavy(nu, m, spec)
    n = nu.n
    beta = beta_heavy(n, delta)
    edge = spec.m_half * (1.0 - 1e-12)
    hint = {Side.UPPER: math.nan, Side.LOWER: math.nan}

    def profile(side):
        def f(q):
            value, r = _heavy_raw(nu, q, spec, side, hint[side])
            if r == r:
                hint[side] = r
            return n * value

        return f

    upper = invert_divergence(profile(Side.UPPER), beta, (m, edge), Direction.RIGHT)
    lower = invert_divergence(profile(Side.LOWER), beta, (m, -edge), Direction.LEFT)
    if upper == edge:
        upper = spec.m_half
    if lower == -edge:
        lower = -spec.m_half
    return ConfidenceInterval(lower, upper, m, "pi1h", n, beta)


def _unit_interval(samples) -> np.ndarray:
    x = _as_array(samples)
    if x.min() < 0.0 or x.max() > 1.0:
        raise SupportError("samples must lie in [0, 1]")
    return x


def _clipped(mu: float, width: float, method: str, n: int, beta: float) -> ConfidenceInterval:
    half = 0.5 * width
    return ConfidenceInterval(max(mu - half, 0.0), min(mu + half, 1.0), mu, method, n, beta)


def ci_hoeffding(samples, delta: float) -> ConfidenceInterval:
    """Hoeffding interval, width 2 sqrt(log(2/delta) / (2N))."""
    x = _unit_interval(samples)
    n = x.size
    b = beta_fixed(delta)
    return _clipped(float(x.mean()), 2.0 * math.sqrt(b / (2.0 * n)), "hoeffding", n, b)


def ci_bernstein(samples, sigma: float, delta: float) -> ConfidenceInterval:
    """Bernstein interval with known standard deviation ``sigma``."""
    x = _unit_interval(samples)
    if not (sigma >= 0.0) or math.isinf(sigma):
        raise DomainError(f"sigma must be finite and nonnegative, got {sigma}")
    n = x.size
    b = beta_fixed(delta)
    width = 2.0 * sigma * math.sqrt(2.0 * b / n) + 4.0 * b / (3.0 * n)
    return _clipped(float(x.mean()), width, "bernstein", n, b)


def ci_mp_eb(samples, delta: float) -> ConfidenceInterval:
    """Maurer-Pontil empirical Bernstein interval (unbiased sample variance)."""
    x = _unit_interval(samples)
    n = x.size
    if n < 2:
        raise EmptySampleError("empirical Bernstein needs at least two samples")
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    b = math.log(4.0 / delta)
    sd = float(x.std(ddof=1))
    width = 2.0 * sd * math.sqrt(2.0 * b / n) + 14.0 * b / (3.0 * (n - 1))
    return _clipped(float(x.mean()), width, "mpeb", n, b)


def make_one_sided(ci: ConfidenceInterval, side: SidedRequest, domain: tuple[float, float]) -> ConfidenceInterval:
    """Keep one endpoint of ``ci`` and open the other to the domain boundary."""
    side = SidedRequest(side)
    if side is SidedRequest.TWO_SIDED:
        return ci
    lo, hi = domain
    if side is SidedRequest.LOWER_ONLY:
        return ConfidenceInterval(ci.lower, hi, ci.point_estimate, ci.method, ci.n_used, ci.beta_used)
    return ConfidenceInterval(lo, ci.upper, ci.point_estimate, ci.method, ci.n_used, ci.beta_used)


def ci_one_sided(model: ExpFamilyModel, samples, delta: float, side: SidedRequest) -> ConfidenceInterval:
    """One-sided interval from the pi1 endpoint with unchanged beta = log(2/delta)."""
    return make_one_sided(ci_pi1(model, samples, delta), side, model.mean_domain)
