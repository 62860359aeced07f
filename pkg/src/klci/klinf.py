"""KL_inf for the bounded family and the heavy-tailed moment family.

KL_inf(nu, P, x) is the smallest KL(nu, kappa) over kappa in P whose mean is
beyond x.  Both families admit a finite-dimensional concave dual:

* bounded support [0, 1]: one multiplier, sup over lambda in [0, 1/(1-x)]
  of E log(1 - lambda (X - x));
* E|X|^(1+eps) <= Gamma: two multipliers constrained to a convex set whose
  boundary is where the extra mass of the optimal kappa is placed.

The heavy-tailed lower side is solved as the upper side of the reflected
data X -> -X, x -> -x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import DomainError, MomentViolationError, SupportError

__all__ = [
    "Side",
    "EmpiricalDist",
    "HeavyFamilySpec",
    "DualSolution",
    "klinf_bounded_upper",
    "klinf_bounded_lower",
    "klinf_bounded",
    "heavy_dual_objective",
    "heavy_feasible",
    "klinf_heavy",
]


class Side(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class EmpiricalDist:
    """Finitely supported distribution with strictly increasing atoms.

    Equal values are merged into a single atom with the summed weight.

    Parameters
    ----------
    values : array_like
        Atom locations, in any order, possibly repeated.
    weights : array_like, optional
        Positive weights summing to one.  Uniform when omitted.
    n : int, optional
        Number of observations the distribution was built from.  Set by
        :meth:`from_samples`; the interval policies need it.
    """

    __slots__ = ("values", "weights", "mean", "n", "_key")

    def __init__(self, values, weights=None, n: int | None = None):
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise DomainError("an empirical distribution needs at least one atom")
        if not np.all(np.isfinite(v)):
            raise DomainError("atom values must be finite")
        if weights is None:
            w = np.full(v.size, 1.0 / v.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != v.shape:
                raise DomainError("values and weights differ in length")
            if not np.all(w > 0):
                raise DomainError("atom weights must be positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise DomainError(f"weights sum to {w.sum()!r}, expected 1")
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        uniq, start = np.unique(v, return_index=True)
        if uniq.size < v.size:
            w = np.add.reduceat(w, start)
            v = uniq
        w = w / w.sum()
        v.setflags(write=False)
        w.setflags(write=False)
        self.values = v
        self.weights = w
        self.mean = float(w @ v)
        self.n = n
        self._key = None

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "EmpiricalDist":
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("an empirical distribution needs at least one atom")
        if not np.all(np.isfinite(x)):
            raise DomainError("samples must be finite")
        uniq, counts = np.unique(x, return_counts=True)
        return cls(uniq, counts / x.size, n=int(x.size))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def moment(self, p: float) -> float:
        """E|X|^p."""
        return float(self.weights @ np.abs(self.values) ** p)

    @property
    def key(self) -> tuple:
        """Hashable summary identifying the distribution and sample count."""
        if self._key is None:
            self._key = (self.values.tobytes(), self.weights.tobytes(), self.n)
        return self._key

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"EmpiricalDist(atoms={len(self)}, mean={self.mean:.6g}, n={self.n})"


@dataclass(frozen=True)
class HeavyFamilySpec:
    """Distributions with E|X|^(1+eps) <= gamma."""

    eps: float
    gamma: float

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be positive, got {self.gamma}")

    @property
    def p(self) -> float:
        return 1.0 + self.eps

    @property
    def m_half(self) -> float:
        """Half-width of the interval of admissible means."""
        return self.gamma ** (1.0 / (1.0 + self.eps))


@dataclass(frozen=True)
class DualSolution:
    """Optimal value of a KL_inf dual and where it is attained."""

    value: float
    argmax: tuple[float, ...]
    converged: bool
    iterations: int


def _check_bounded(nu: EmpiricalDist, x: float) -> None:
    if nu.values[0] < 0.0 or nu.values[-1] > 1.0:
        raise SupportError("atoms must lie in [0, 1]")
    if not (0.0 < x < 1.0):
        raise DomainError(f"target {x} must lie in (0, 1)")


def klinf_bounded_upper(nu: EmpiricalDist, x: float) -> DualSolution:
    """Smallest KL(nu, kappa) over kappa on [0, 1] with mean >= x."""
    _check_bounded(nu, x)
    if nu.mean >= x:
        return DualSolution(0.0, (0.0,), True, 0)
    # lambda = s / (1 - x) maps the multiplier range onto s in [0, 1]
    c = (x - nu.values) / (1.0 - x)
    value, s, it, ok = kernels.logsum_max(c, nu.weights)
    return DualSolution(max(value, 0.0), (s / (1.0 - x),), ok, it)


def klinf_bounded_lower(nu: EmpiricalDist, x: float) -> DualSolution:
    """Smallest KL(nu, kappa) over kappa on [0, 1] with mean <= x."""
    _check_bounded(nu, x)
    if nu.mean <= x:
        return DualSolution(0.0, (0.0,), True, 0)
    c = (nu.values - x) / x
    value, s, it, ok = kernels.logsum_max(c, nu.weights)
    return DualSolution(max(value, 0.0), (s / x,), ok, it)


def klinf_bounded(nu: EmpiricalDist, x: float) -> float:
    """Two-sided KL_inf on [0, 1]: the side is chosen by the position of x."""
    if x >= nu.mean:
        return klinf_bounded_upper(nu, x).value
    return klinf_bounded_lower(nu, x).value


def _sign(side: Side) -> float:
    return 1.0 if Side(side) is Side.UPPER else -1.0


def heavy_dual_objective(
    nu: EmpiricalDist, lam, x: float, spec: HeavyFamilySpec, side: Side
) -> float:
    """E_nu log g(X, lambda, x); -inf when g <= 0 at some atom."""
    l1, l2 = float(lam[0]), float(lam[1])
    if l1 < 0 or l2 < 0:
        raise DomainError("dual multipliers must be nonnegative")
    sg = _sign(side)
    g = (
        1.0
        - sg * l1 * (nu.values - x)
        - l2 * (spec.gamma - np.abs(nu.values) ** spec.p)
    )
    if g.min() <= 0.0:
        return -math.inf
    return float(nu.weights @ np.log(g))


def heavy_feasible(
    lam, x: float, spec: HeavyFamilySpec, side: Side, tol: float = 1e-12
) -> bool:
    """Membership of lambda in the feasible dual set (up to ``tol``)."""
    l1, l2 = float(lam[0]), float(lam[1])
    if l1 < 0 or l2 < 0:
        return False
    eps = spec.eps
    if l1 == 0.0:
        penalty = 0.0
    elif l2 == 0.0:
        return False
    else:
        q = 1.0 + 1.0 / eps
        penalty = eps * l1**q / ((1.0 + eps) ** q * l2 ** (1.0 / eps))
    h = 1.0 + _sign(side) * l1 * x - l2 * spec.gamma - penalty
    return h >= -tol


def _check_heavy(nu: EmpiricalDist, x: float, spec: HeavyFamilySpec) -> None:
    if not (abs(x) < spec.m_half):
        raise DomainError(
            f"target {x} outside the admissible means (-{spec.m_half:.6g}, {spec.m_half:.6g})"
        )
    mom = nu.moment(spec.p)
    if mom > spec.gamma:
        raise MomentViolationError(
            f"empirical moment E|X|^{spec.p:g} = {mom:.6g} exceeds the bound {spec.gamma:g}"
        )


def klinf_heavy(
    nu: EmpiricalDist,
    x: float,
    spec: HeavyFamilySpec,
    side: Side,
    r_hint: float = math.nan,
) -> DualSolution:
    """KL_inf of ``nu`` over the heavy-tailed family on one side of x.

    ``r_hint`` is an optional warm start for the ratio lambda_1 / lambda_2,
    typically the ratio found at a nearby target.
    """
    _check_heavy(nu, x, spec)
    if Side(side) is Side.UPPER:
        vals, xx = nu.values, float(x)
    else:
        vals, xx = np.ascontiguousarray(-nu.values), -float(x)
    value, l1, l2, it, ok, _ = kernels.heavy_upper(
        vals, nu.weights, xx, spec.eps, spec.gamma, r_hint
    )
    return DualSolution(max(value, 0.0), (l1, l2), ok, it)


def _heavy_raw(nu: EmpiricalDist, x: float, spec: HeavyFamilySpec, side: Side, r_hint: float):
    """Unchecked solve returning (value, ratio) for the interval root finder."""
    if side is Side.UPPER:
        vals, xx = nu.values, x
    else:
        vals, xx = np.ascontiguousarray(-nu.values), -x
    value, _, _, _, _, r = kernels.heavy_upper(vals, nu.weights, xx, spec.eps, spec.gamma, r_hint)
    return max(value, 0.0), r
