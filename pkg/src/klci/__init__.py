"""KL-divergence based confidence intervals for means.

Parametric intervals for one-parameter exponential families, KL_inf
intervals for bounded and heavy-tailed data, classical concentration
baselines, limiting-width lower bounds and a Monte Carlo harness.
"""

from ._backend import BACKEND
from .bounds import (
    LimitingWidth,
    Regime,
    RegimeSpec,
    classify_regime,
    k_hat,
    limiting_width_nonparam,
    limiting_width_param,
    rate_constant,
    shekhar_bound_gaussian,
)
from .errors import (
    BracketError,
    DomainError,
    EmptySampleError,
    MomentViolationError,
    SupportError,
)
from .exp_family import ExpFamilyModel, Family, divergence, mean_to_natural
from .klinf import (
    DualSolution,
    EmpiricalDist,
    HeavyFamilySpec,
    Side,
    heavy_dual_objective,
    heavy_feasible,
    klinf_bounded,
    klinf_bounded_lower,
    klinf_bounded_upper,
    klinf_heavy,
)
from .policies import (
    ConfidenceInterval,
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
from .thresholds import (
    ThresholdKind,
    beta_anytime,
    beta_bounded,
    beta_fixed,
    beta_heavy,
    calT,
    psi_inverse,
)

__version__ = "0.1.0"
