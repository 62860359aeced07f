"""Single-parameter exponential families in mean coordinates.

Four concrete families are supported: Bernoulli, Poisson, Gaussian with
known variance and Gamma with known shape.  Every family exposes the
natural parameter map theta(mu), the log-partition b(theta), the variance
function and the KL divergence d(mu, mu') written directly in mean
coordinates, which avoids the cancellation of the generic Bregman form
when mu' is close to mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError

__all__ = [
    "DomainError",
    "Family",
    "ExpFamilyModel",
    "mean_to_natural",
    "divergence",
]


class Family(str, Enum):
    BERNOULLI = "bernoulli"
    POISSON = "poisson"
    GAUSSIAN = "gaussian"
    GAMMA = "gamma"


@dataclass(frozen=True)
class ExpFamilyModel:
    """A member of one of the supported exponential families.

    Parameters
    ----------
    kind : Family
        Which family.
    sigma : float
        Known standard deviation, used by the Gaussian family only.
    shape : float
        Known shape alpha, used by the Gamma family only.
    """

    kind: Family
    sigma: float = 1.0
    shape: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Family(self.kind))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise DomainError(f"shape must be positive and finite, got {self.shape}")

    @classmethod
    def bernoulli(cls) -> "ExpFamilyModel":
        return cls(Family.BERNOULLI)

    @classmethod
    def poisson(cls) -> "ExpFamilyModel":
        return cls(Family.POISSON)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "ExpFamilyModel":
        return cls(Family.GAUSSIAN, sigma=sigma)

    @classmethod
    def gamma(cls, shape: float) -> "ExpFamilyModel":
        return cls(Family.GAMMA, shape=shape)

    @property
    def mean_domain(self) -> tuple[float, float]:
        """Open interval of attainable means."""
        if self.kind is Family.BERNOULLI:
            return 0.0, 1.0
        if self.kind is Family.GAUSSIAN:
            return -math.inf, math.inf
        return 0.0, math.inf

    @property
    def label(self) -> str:
        if self.kind is Family.GAUSSIAN:
            return f"gaussian(sigma={self.sigma:g})"
        if self.kind is Family.GAMMA:
            return f"gamma(shape={self.shape:g})"
        return self.kind.value

    def in_domain(self, mu: float) -> bool:
        lo, hi = self.mean_domain
        return lo < mu < hi

    def in_closure(self, mu: float) -> bool:
        """Membership in the closed mean domain, restricted to finite values."""
        lo, hi = self.mean_domain
        return math.isfinite(mu) and lo <= mu <= hi

    def variance(self, mu: float) -> float:
        """Variance of the family member with mean ``mu``."""
        self._check_open(mu)
        if self.kind is Family.BERNOULLI:
            return mu * (1.0 - mu)
        if self.kind is Family.POISSON:
            return mu
        if self.kind is Family.GAUSSIAN:
            return self.sigma**2
        return mu * mu / self.shape

    def natural(self, mu: float) -> float:
        """Natural parameter theta with b'(theta) = mu."""
        self._check_open(mu)
        if self.kind is Family.BERNOULLI:
            return math.log(mu) - math.log1p(-mu)
        if self.kind is Family.POISSON:
            return math.log(mu)
        if self.kind is Family.GAUSSIAN:
            return mu / self.sigma**2
        return -self.shape / mu

    def log_partition(self, theta: float) -> float:
        """b(theta), up to the additive constant of the reference measure."""
        if self.kind is Family.BERNOULLI:
            # log(1 + e^theta) without overflow
            return max(theta, 0.0) + math.log1p(math.exp(-abs(theta)))
        if self.kind is Family.POISSON:
            return math.exp(theta)
        if self.kind is Family.GAUSSIAN:
            return 0.5 * self.sigma**2 * theta * theta
        if theta >= 0:
            raise DomainError("Gamma natural parameter must be negative")
        return -self.shape * math.log(-theta)

    def mean_of_natural(self, theta: float) -> float:
        """b'(theta)."""
        if self.kind is Family.BERNOULLI:
            return 1.0 / (1.0 + math.exp(-theta))
        if self.kind is Family.POISSON:
            return math.exp(theta)
        if self.kind is Family.GAUSSIAN:
            return self.sigma**2 * theta
        if theta >= 0:
            raise DomainError("Gamma natural parameter must be negative")
        return -self.shape / theta

    def divergence(self, mu: float, mu2: float) -> float:
        """KL divergence d(mu, mu2) between the members with means mu and mu2.

        Bernoulli and Poisson accept ``mu`` on the boundary of the mean
        domain through the 0 log 0 = 0 convention.  ``mu2`` may sit on the
        boundary, where the divergence is +inf unless it coincides with mu.
        """
        if not self.in_closure(mu) or (
            self.kind is Family.GAMMA and mu <= 0.0
        ):
            raise DomainError(f"mean {mu} outside the domain of {self.label}")
        if math.isnan(mu2):
            raise DomainError("second mean is NaN")
        lo, hi = self.mean_domain
        if not (lo <= mu2 <= hi):
            raise DomainError(f"mean {mu2} outside the domain of {self.label}")
        if mu == mu2:
            return 0.0
        kind = self.kind
        if kind is Family.GAUSSIAN:
            return (mu2 - mu) ** 2 / (2.0 * self.sigma**2)
        if kind is Family.BERNOULLI:
            return _xlogy_ratio(mu, mu2) + _xlogy_ratio(1.0 - mu, 1.0 - mu2)
        if math.isinf(mu2):
            return math.inf
        if kind is Family.POISSON:
            if mu2 == 0.0:
                return math.inf
            if mu == 0.0:
                return mu2
            return mu2 - mu + mu * math.log(mu / mu2)
        if mu2 == 0.0:
            return math.inf
        t = mu / mu2
        return self.shape * (t - 1.0 - math.log(t))

    def _check_open(self, mu: float) -> None:
        if not self.in_domain(mu):
            raise DomainError(f"mean {mu} outside the open domain of {self.label}")


def _xlogy_ratio(a: float, b: float) -> float:
    """a log(a / b) with 0 log(0 / b) = 0 and a log(a / 0) = inf."""
    if a == 0.0:
        return 0.0
    if b == 0.0:
        return math.inf
    return a * math.log(a / b)


def mean_to_natural(model: ExpFamilyModel, mu: float) -> float:
    """Natural parameter of the member of ``model`` with mean ``mu``."""
    return model.natural(mu)


def divergence(model: ExpFamilyModel, mu: float, mu2: float) -> float:
    """KL divergence d(mu, mu2) in mean coordinates."""
    return model.divergence(mu, mu2)
