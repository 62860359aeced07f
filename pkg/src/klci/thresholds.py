"""Confidence thresholds beta for the KL-based interval policies.

* ``beta_fixed``     log(2/delta), for a sample size fixed in advance;
* ``beta_anytime``   mixture-martingale threshold valid uniformly in n,
                     used when the sample count is random;
* ``beta_bounded``   stitched threshold for KL_inf on [0, 1];
* ``beta_heavy``     stitched threshold for KL_inf under a moment bound.
"""

from __future__ import annotations

import math
from enum import Enum

from .errors import DomainError

__all__ = [
    "ThresholdKind",
    "beta_fixed",
    "psi",
    "psi_inverse",
    "psi_tilde",
    "calT",
    "beta_anytime",
    "beta_bounded",
    "beta_heavy",
    "beta",
]

ZETA2 = math.pi**2 / 6.0
_LOG_2ZETA2 = math.log(2.0 * ZETA2)


class ThresholdKind(str, Enum):
    FIXED_N = "fixed"
    ANYTIME_MIXTURE = "anytime"
    BOUNDED_STITCHED = "bounded"
    HEAVY_STITCHED = "heavy"


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def _check_n(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")


def beta_fixed(delta: float) -> float:
    _check_delta(delta)
    return math.log(2.0 / delta)


def psi(u: float) -> float:
    return u - math.log(u)


def psi_inverse(z: float) -> float:
    """The u >= 1 solving u - log(u) = z.

    Newton from u0 = z + log z, safeguarded by bisection on
    [1, z + 2 log z + 2].  Since psi is convex and increasing on u >= 1,
    Newton steps from the right decrease monotonically to the root.
    """
    if not (z >= 1.0) or math.isinf(z):
        raise DomainError(f"psi_inverse needs finite z >= 1, got {z}")
    if z == 1.0:
        return 1.0
    lz = math.log(z)
    lo, hi = 1.0, z + 2.0 * lz + 2.0
    u = z + lz
    for _ in range(100):
        f = u - math.log(u) - z
        if f > 0:
            hi = u
        else:
            lo = u
        if abs(f) <= 4e-16 * z:
            break
        step = f / (1.0 - 1.0 / u)
        un = u - step
        if not (lo < un < hi):
            un = 0.5 * (lo + hi)
        if un == u:
            break
        u = un
    return u


def psi_tilde(x: float, y: float = 1.5) -> float:
    """Piecewise function inside the anytime threshold, for 1 < y <= e.

    The exponential branch is taken for x >= psi(1/log y), which is where
    the two branches meet continuously.
    """
    ly = math.log(y)
    switch = psi(1.0 / ly)
    if x >= switch:
        u = psi_inverse(x)
        return math.exp(1.0 / u) * u
    return y * (x - math.log(ly))


def calT(x: float) -> float:
    """T(x) = 2 psi_tilde_{3/2}((x + log(2 zeta(2))) / 2)."""
    if not (x >= 0.0):
        raise DomainError(f"calT needs x >= 0, got {x}")
    return 2.0 * psi_tilde(0.5 * (x + _LOG_2ZETA2), 1.5)


def beta_anytime(n: int, delta: float) -> float:
    """3 log(1 + log n) + T(log(1/delta))."""
    _check_n(n)
    _check_delta(delta)
    return 3.0 * math.log1p(math.log(n)) + calT(-math.log(delta))


def beta_bounded(n: int, delta: float) -> float:
    """1 + log(2 (1 + n) / delta)."""
    _check_n(n)
    _check_delta(delta)
    return 1.0 + math.log(2.0 * (1.0 + n) / delta)


def beta_heavy(n: int, delta: float) -> float:
    """1 + log(2 (1 + n)^2 / delta)."""
    _check_n(n)
    _check_delta(delta)
    return 1.0 + math.log(2.0 / delta) + 2.0 * math.log1p(n)


def beta(kind: ThresholdKind, n: int, delta: float) -> float:
    """Dispatch on the threshold kind; ``n`` is ignored for FIXED_N."""
    kind = ThresholdKind(kind)
    if kind is ThresholdKind.FIXED_N:
        return beta_fixed(delta)
    if kind is ThresholdKind.ANYTIME_MIXTURE:
        return beta_anytime(n, delta)
    if kind is ThresholdKind.BOUNDED_STITCHED:
        return beta_bounded(n, delta)
    return beta_heavy(n, delta)
