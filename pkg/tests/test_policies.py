import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from klci import (
    BracketError,
    DomainError,
    EmpiricalDist,
    EmptySampleError,
    ExpFamilyModel,
    HeavyFamilySpec,
    MomentViolationError,
    Side,
    SupportError,
    klinf_bounded_lower,
    klinf_bounded_upper,
    klinf_heavy,
)
from klci.policies import (
    Direction,
    SidedRequest,
    ci_bernstein,
    ci_hoeffding,
    ci_mp_eb,
    ci_one_sided,
    ci_pi1,
    ci_pi1_b,
    ci_pi1_h,
    ci_pi1_hat,
    invert_divergence,
)
from klci.thresholds import beta_anytime, beta_bounded, beta_heavy, calT

from oracles import bernoulli_kl, bisect

BERN = ExpFamilyModel.bernoulli()
GAUSS = ExpFamilyModel.gaussian(1.0)
H4 = HeavyFamilySpec(1.0, 4.0)


def bernoulli_sample(k, n):
    return np.r_[np.ones(k), np.zeros(n - k)]


def bern_oracle_upper(p, target):
    return bisect(lambda q: bernoulli_kl(p, q) - target, p, 1.0 - 1e-15)


def bern_oracle_lower(p, target):
    return bisect(lambda q: target - bernoulli_kl(p, q), 1e-15, p)


# --- root finder --------------------------------------------------------------


def test_invert_square():
    q = invert_divergence(lambda q: (q - 0.6) ** 2, 0.0004, (0.6, 1.0), Direction.RIGHT)
    assert q == pytest.approx(0.62, abs=1e-12)
    q = invert_divergence(lambda q: (q - 0.6) ** 2, 0.0004, (0.6, 0.0), Direction.LEFT)
    assert q == pytest.approx(0.58, abs=1e-12)


def test_invert_bernoulli_example():
    target = math.log(200) / 2000
    q = invert_divergence(lambda q: BERN.divergence(0.6, q), target, (0.6, 1.0), Direction.RIGHT)
    assert q == pytest.approx(bern_oracle_upper(0.6, target), abs=1e-10)
    assert q == pytest.approx(0.635260, abs=1e-6)
    assert abs(BERN.divergence(0.6, q) - target) <= 1e-10


def test_invert_saturates():
    # target 10 is reached only ~7e-12 below 1, so the root is numerically 1
    q = invert_divergence(lambda q: BERN.divergence(0.6, q), 10.0, (0.6, 1.0), Direction.RIGHT)
    assert q >= 1.0 - 1e-10
    # a bounded profile that never reaches the target returns the outer end
    assert invert_divergence(lambda q: q - 0.6, 5.0, (0.6, 1.0), Direction.RIGHT) == 1.0


def test_invert_infinite_bracket():
    q = invert_divergence(lambda q: 0.5 * q * q, 50.0, (0.0, math.inf), Direction.RIGHT)
    assert q == pytest.approx(10.0, rel=1e-14)
    q = invert_divergence(lambda q: 0.5 * q * q, 50.0, (0.0, -math.inf), Direction.LEFT)
    assert q == pytest.approx(-10.0, rel=1e-14)


def test_invert_errors():
    with pytest.raises(BracketError):
        invert_divergence(lambda q: 1.0 + q, 0.5, (0.0, 1.0), Direction.RIGHT)
    with pytest.raises(BracketError):
        invert_divergence(lambda q: q, 0.5, (0.0, 1.0), Direction.LEFT)
    with pytest.raises(DomainError):
        invert_divergence(lambda q: q, 0.0, (0.0, 1.0))


@settings(max_examples=200)
@given(st.floats(0.001, 0.999), st.floats(1e-6, 2.0))
def test_invert_residual_property(p, target):
    q = invert_divergence(lambda q: BERN.divergence(p, q), target, (p, 1.0), Direction.RIGHT)
    if q >= 1.0 - 4.0 * math.ulp(1.0):
        # the root lies between the last doubles below 1 and 1 itself
        return
    # adjacent doubles move the profile by slope * spacing; below that no root is representable
    slope = (q - p) / (q * (1.0 - q))
    tol = max(1e-10 * max(1.0, target), 4.0 * slope * math.ulp(q))
    assert abs(BERN.divergence(p, q) - target) <= tol
    if q < 1.0 - 1e-6:
        assert abs(BERN.divergence(p, q) - target) <= 1e-10 * max(1.0, target)


# --- pi1 / pi1hat ---------------------------------------------------------------


def test_pi1_bernoulli_example():
    ci = ci_pi1(BERN, bernoulli_sample(1200, 2000), 0.01)
    target = math.log(200) / 2000
    assert ci.lower == pytest.approx(bern_oracle_lower(0.6, target), abs=1e-10)
    assert ci.upper == pytest.approx(bern_oracle_upper(0.6, target), abs=1e-10)
    assert ci.lower == pytest.approx(0.564034, abs=1e-6)
    assert ci.upper == pytest.approx(0.635260, abs=1e-6)
    assert ci.width == pytest.approx(0.0712, abs=5e-5)
    assert ci.point_estimate == 0.6 and ci.n_used == 2000 and ci.method == "pi1"
    assert ci.beta_used == pytest.approx(math.log(200))


def test_pi1_bernoulli_boundary_mean():
    ci = ci_pi1(BERN, np.zeros(10), 0.05)
    assert ci.lower == 0.0
    assert ci.upper == pytest.approx(1 - 40 ** (-1 / 10), abs=1e-12)
    ci = ci_pi1(BERN, np.ones(10), 0.05)
    assert ci.upper == 1.0
    assert ci.lower == pytest.approx(40 ** (-1 / 10), abs=1e-12)


@given(st.floats(-100, 100), st.integers(1, 10**6), st.floats(1e-10, 0.99), st.floats(0.1, 10))
def test_pi1_gaussian_exact(mu, n, delta, sigma):
    ci = ci_pi1(ExpFamilyModel.gaussian(sigma), [mu] * 1 if n == 1 else np.full(n if n < 50 else 50, mu), delta)
    m = ci.n_used
    half = sigma * math.sqrt(2 * math.log(2 / delta) / m)
    assert ci.width == pytest.approx(2 * half, rel=1e-12)
    assert ci.point_estimate == pytest.approx(mu, abs=1e-12)


@pytest.mark.parametrize("n,delta", [(10, 0.1), (1000, 0.05), (10**5, 1e-3), (10**6, 1e-8)])
def test_rate_identity(n, delta):
    ci = ci_pi1(GAUSS, np.zeros(n), delta)
    lhs = ci.width**2 * n / math.log(1 / delta)
    assert lhs == pytest.approx(8 * math.log(2 / delta) / math.log(1 / delta), rel=1e-12)


def test_pi1_poisson_and_gamma_residuals():
    rng = np.random.default_rng(3)
    for model, x in [
        (ExpFamilyModel.poisson(), rng.poisson(2.0, 300).astype(float)),
        (ExpFamilyModel.gamma(2.0), rng.gamma(2.0, 1.5, 300)),
    ]:
        ci = ci_pi1(model, x, 0.05)
        mu, n = x.mean(), x.size
        for q in (ci.lower, ci.upper):
            assert abs(n * model.divergence(mu, q) - ci.beta_used) <= 1e-8 * max(1, ci.beta_used)
        assert ci.lower > 0


def test_pi1_poisson_zero_mean():
    ci = ci_pi1(ExpFamilyModel.poisson(), np.zeros(20), 0.05)
    assert ci.lower == 0.0
    assert ci.upper == pytest.approx(math.log(40) / 20, rel=1e-12)


def test_pi1_errors():
    with pytest.raises(EmptySampleError):
        ci_pi1(BERN, [], 0.05)
    with pytest.raises(DomainError):
        ci_pi1(ExpFamilyModel.poisson(), [1.0, -1.0], 0.05)
    with pytest.raises(DomainError):
        ci_pi1(BERN, [0.5, 1.5], 0.05)
    with pytest.raises(DomainError):
        ci_pi1(BERN, [0.5], 1.5)
    # only the mean matters under Poisson
    ci_pi1(ExpFamilyModel.poisson(), [0.5, 2.5], 0.05)


def test_pi1_hat_examples():
    ci = ci_pi1_hat(GAUSS, np.zeros(1000), 0.05)
    h = math.sqrt(2 * beta_anytime(1000, 0.05) / 1000)
    assert ci.lower == pytest.approx(-h, rel=1e-12) and ci.upper == pytest.approx(h, rel=1e-12)
    one = ci_pi1_hat(BERN, [1.0], 0.2)
    assert one.beta_used == calT(math.log(5))
    assert BERN.divergence(1.0, one.lower) == pytest.approx(calT(math.log(5)), rel=1e-9)
    assert one.method == "pi1hat"


@pytest.mark.parametrize("n,delta", [(10, 0.05), (200, 0.05), (2000, 0.01), (10**5, 1e-4)])
def test_pi1_hat_nests_pi1(n, delta):
    assert beta_anytime(n, delta) >= math.log(2 / delta)
    x = bernoulli_sample(int(0.3 * n), n)
    a, b = ci_pi1(BERN, x, delta), ci_pi1_hat(BERN, x, delta)
    assert b.lower <= a.lower and a.upper <= b.upper


@settings(max_examples=150)
@given(st.integers(1, 3000), st.floats(0, 1), st.floats(1e-6, 0.5))
def test_pinsker_containment(n, frac, delta):
    x = bernoulli_sample(int(round(frac * n)), n)
    kl, h = ci_pi1(BERN, x, delta), ci_hoeffding(x, delta)
    assert h.lower <= kl.lower + 1e-12
    assert kl.upper <= h.upper + 1e-12


@settings(max_examples=100)
@given(st.integers(1, 2000), st.floats(0, 1), st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
def test_nesting_in_delta(n, frac, d1, d2):
    lo, hi = sorted((d1, d2))
    x = bernoulli_sample(int(round(frac * n)), n)
    for fn in (
        lambda d: ci_pi1(BERN, x, d),
        lambda d: ci_pi1_hat(BERN, x, d),
        lambda d: ci_pi1_b(x, d),
        lambda d: ci_hoeffding(x, d),
        lambda d: ci_bernstein(x, 0.4, d),
    ):
        wide, narrow = fn(lo), fn(hi)
        assert wide.lower <= narrow.lower + 1e-12
        assert narrow.upper <= wide.upper + 1e-12
    if n >= 2:
        wide, narrow = ci_mp_eb(x, lo), ci_mp_eb(x, hi)
        assert wide.lower <= narrow.lower and narrow.upper <= wide.upper


@settings(max_examples=100)
@given(st.integers(1, 500), st.floats(0, 1), st.floats(1e-6, 0.5))
def test_interval_invariants(n, frac, delta):
    x = bernoulli_sample(int(round(frac * n)), n)
    cis = [ci_pi1(BERN, x, delta), ci_pi1_hat(BERN, x, delta), ci_pi1_b(x, delta), ci_hoeffding(x, delta)]
    if n >= 2:
        cis.append(ci_mp_eb(x, delta))
    for ci in cis:
        assert 0.0 <= ci.lower <= ci.point_estimate <= ci.upper <= 1.0


# --- KL_inf policies ----------------------------------------------------------------


def test_pi1_b_dirac_example():
    ci = ci_pi1_b(EmpiricalDist([0.5], n=1), 0.5)
    b = 1 + math.log(8)
    assert ci.beta_used == pytest.approx(b)
    # log(0.5 / (1 - q)) = beta  ->  q = 1 - 0.5 exp(-beta) = 0.977010...
    assert ci.upper == pytest.approx(1 - 0.5 * math.exp(-b), abs=1e-10)
    assert ci.lower == pytest.approx(0.5 * math.exp(-b), abs=1e-10)


def test_pi1_b_all_zero():
    ci = ci_pi1_b(np.zeros(30), 0.05)
    assert ci.lower == 0.0
    assert ci.upper == pytest.approx(1 - math.exp(-beta_bounded(30, 0.05) / 30), rel=1e-9)
    assert ci_pi1_b(np.ones(30), 0.05).upper == 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3000), st.floats(0, 1), st.floats(1e-6, 0.5))
def test_pi1_b_two_point_equivalence(n, frac, delta):
    k = int(round(frac * n))
    x = bernoulli_sample(k, n)
    ci = ci_pi1_b(x, delta)
    target = beta_bounded(n, delta) / n
    p = k / n
    up = 1.0 if k == n else bern_oracle_upper(p, target)
    lo = 0.0 if k == 0 else bern_oracle_lower(p, target)
    assert ci.upper == pytest.approx(up, abs=1e-8)
    assert ci.lower == pytest.approx(lo, abs=1e-8)


def test_pi1_b_residual():
    rng = np.random.default_rng(11)
    x = rng.beta(2, 5, 400)
    ci = ci_pi1_b(x, 0.05)
    nu = EmpiricalDist.from_samples(x)
    b = beta_bounded(400, 0.05)
    assert abs(400 * klinf_bounded_upper(nu, ci.upper).value - b) <= 1e-8 * b
    assert abs(400 * klinf_bounded_lower(nu, ci.lower).value - b) <= 1e-8 * b


def test_pi1_b_errors():
    with pytest.raises(SupportError):
        ci_pi1_b([0.2, 1.2], 0.05)
    with pytest.raises(EmptySampleError):
        ci_pi1_b(EmpiricalDist([0.2, 0.4]), 0.05)


def test_pi1_h_symmetric_sample():
    ci = ci_pi1_h([-1.0, 1.0], 0.05, H4)
    assert ci.lower == pytest.approx(-ci.upper, abs=1e-8)
    assert -2.0 <= ci.lower < 0 < ci.upper <= 2.0
    assert ci.beta_used == pytest.approx(beta_heavy(2, 0.05))


def test_pi1_h_single_zero():
    ci = ci_pi1_h([0.0], 0.5, H4)
    assert -2.0 <= ci.lower <= 0.0 <= ci.upper <= 2.0


def test_pi1_h_residual():
    rng = np.random.default_rng(2)
    x = rng.standard_t(5, 300) * 0.5
    ci = ci_pi1_h(x, 0.05, H4)
    nu = EmpiricalDist.from_samples(x)
    b = beta_heavy(300, 0.05)
    for q, side in ((ci.upper, Side.UPPER), (ci.lower, Side.LOWER)):
        assert abs(300 * klinf_heavy(nu, q, H4, side).value - b) <= 1e-6 * b


def test_pi1_h_widens_toward_boundary():
    # mean +-2 forces a point mass at +-2, so KL_inf diverges there and endpoints stay inside
    prev = ci_pi1_h([0.1], 0.5, H4)
    for d in (1e-2, 1e-4, 1e-8):
        ci = ci_pi1_h([0.1], d, H4)
        assert prev.lower >= ci.lower > -2.0 and prev.upper <= ci.upper < 2.0
        prev = ci


def test_pi1_h_errors():
    with pytest.raises(MomentViolationError):
        ci_pi1_h([0.0, 3.0], 0.05, H4)
    with pytest.raises(DomainError):
        ci_pi1_h([2.0, 2.0], 0.05, H4)


# --- baselines ----------------------------------------------------------------------


def test_hoeffding_examples():
    assert 2 * math.sqrt(math.log(200) / 4000) == pytest.approx(0.0728, abs=5e-5)
    assert ci_hoeffding(np.full(2000, 0.5), 0.01).width == pytest.approx(0.0728, abs=5e-5)
    assert ci_hoeffding(np.full(3000, 0.5), 0.01).width == pytest.approx(0.0594, abs=5e-5)
    ci = ci_hoeffding([0.5, 0.5], 2 / math.e)
    assert ci.lower == pytest.approx(0.0) and ci.upper == pytest.approx(1.0)
    clipped = ci_hoeffding([0.0, 0.0], 0.05)
    assert clipped.lower == 0.0


def test_bernstein_examples():
    b = math.log(200)
    assert ci_bernstein(np.full(2000, 0.5), 0.0, 0.01).width == pytest.approx(4 * b / 6000, rel=1e-14)
    w = ci_bernstein(np.full(2000, 0.5), math.sqrt(0.24), 0.01).width
    expected = 2 * math.sqrt(0.24) * math.sqrt(2 * b / 2000) + 4 * b / 6000
    assert w == pytest.approx(expected, rel=1e-14)
    assert w == pytest.approx(0.0748511058, abs=1e-10)
    lead = 2 * 0.3 * math.sqrt(2 * math.log(40))
    prev = math.inf
    for n in (10**2, 10**4, 10**6):
        gap = abs(ci_bernstein(np.full(n, 0.5), 0.3, 0.05).width * math.sqrt(n) - lead)
        assert gap < prev
        prev = gap
    assert prev < 5e-3
    with pytest.raises(DomainError):
        ci_bernstein([0.5], -1.0, 0.05)
    with pytest.raises(SupportError):
        ci_bernstein([1.5], 0.1, 0.05)


def test_mp_eb_examples():
    ci = ci_mp_eb(np.full(100, 0.5), 0.05)
    assert ci.width == pytest.approx(14 * math.log(80) / (3 * 99), rel=1e-14)
    assert ci.width == pytest.approx(0.2065601781, abs=1e-10)
    assert ci.beta_used == pytest.approx(math.log(80))
    x = bernoulli_sample(7, 20)
    w = 2 * x.std(ddof=1) * math.sqrt(2 * math.log(4 / 0.1) / 20) + 14 * math.log(40) / 57
    assert ci_mp_eb(x, 0.1).width == pytest.approx(min(x.mean() + w / 2, 1) - max(x.mean() - w / 2, 0))
    with pytest.raises(EmptySampleError):
        ci_mp_eb([0.5], 0.05)


# --- one-sided ----------------------------------------------------------------------


def test_one_sided():
    x = bernoulli_sample(1200, 2000)
    two = ci_pi1(BERN, x, 0.01)
    lo = ci_one_sided(BERN, x, 0.01, SidedRequest.LOWER_ONLY)
    assert lo.lower == two.lower and lo.upper == 1.0
    assert lo.lower == pytest.approx(0.564034, abs=1e-6)
    up = ci_one_sided(BERN, x, 0.01, "upper")
    assert up.upper == two.upper and up.lower == 0.0
    g = ci_one_sided(GAUSS, np.zeros(50), 0.05, SidedRequest.LOWER_ONLY)
    assert -g.lower == pytest.approx(math.sqrt(2 * math.log(40) / 50), rel=1e-12)
    assert g.upper == math.inf
    assert ci_one_sided(BERN, x, 0.01, SidedRequest.TWO_SIDED) == two


def test_deterministic():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 500)
    assert ci_pi1_b(x, 0.05) == ci_pi1_b(x.copy(), 0.05)
    y = rng.standard_normal(200) * 0.5
    assert ci_pi1_h(y, 0.05, H4) == ci_pi1_h(y.copy(), 0.05, H4)
