"""f-DP accounting for DP-SGD with shuffled minibatches.

Closed-form trade-off bounds, their inversions and compositions, the
large-M Gaussian limits with a Poisson-subsampling comparison, and a
deterministic Monte Carlo oracle that validates all of it empirically.
"""

from .accountant import (
    DeltaBreakdown,
    EpochPlan,
    MultiEpochResult,
    ParamSolution,
    PrivacyParams,
    admissibility,
    below_impossibility_threshold,
    delta_bound,
    delta_two_term,
    m_closed_form,
    min_dataset,
    mu_of,
    multi_epoch,
    plan_epochs,
    solve_m_exact,
    validity_ceiling,
)
from .asymptotics import (
    GdpComparison,
    asymptotic_epoch_gdp,
    coeff_ratio,
    midpoint_sigma,
    poisson_coeff,
    separation_scaling,
    shuffle_coeff,
    upper_correction,
)
from .errors import (
    DomainError,
    NumericalError,
    PreconditionError,
    RangeError,
    SaturationError,
    ValidityError,
)
from .lognormal import (
    B_LOWER,
    B_UPPER,
    EdgeworthModel,
    MomentSet,
    be_error_bound,
    default_kappa,
    edgeworth_cdf,
    edgeworth_model,
    moments,
    raw_moment,
)
from .montecarlo import (
    EmpiricalTestReport,
    MomentCheck,
    TestConfig,
    ValidationReport,
    empirical_cdf,
    empirical_tradeoff,
    moment_zscores,
    sample_statistic,
    validate_all,
)
from .numerics import (
    exp_m1,
    log_std_normal_cdf,
    std_normal_cdf,
    std_normal_cdf_inv,
    std_normal_pdf,
)
from .tradeoff import (
    TradeoffCurve,
    TradeoffFunction,
    compose_f0_delta,
    compose_gdp_uniform,
    delta_hat_of,
    f0_delta,
    fixed_point,
    gdp,
    sample_curve,
    separation,
)
from ._kernels import active_backend

__version__ = "0.1.0"
