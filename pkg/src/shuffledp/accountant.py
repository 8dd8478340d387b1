"""Closed-form accountant for single- and multi-epoch shuffled DP-SGD.

The central object is a six-term lower bound on the distance delta of the
mechanism's trade-off function from the diagonal, f(a) >= 1 - a - delta,
valid whenever the accompanying condition

    delta + (B-term)/2 <= 1/2 - Phi(-(e^{1/sigma^2} - 1)/2)

holds. Everything else here evaluates, inverts, or composes that bound:
closed-form round-count lower bounds, the exact minimal-M solver, the
admissibility frontier, dataset sizing, and multi-epoch composition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import (
    DomainError,
    NumericalError,
    PreconditionError,
    RangeError,
    SaturationError,
    ValidityError,
)
from .lognormal import B_UPPER, check_be_constant
from .numerics import SQRT_2PI, std_normal_cdf
from .tradeoff import TradeoffCurve, compose_f0_delta, f0_handle, sample_curve

DEFAULT_CLIP = 1.0
DEFAULT_NOISE_BUDGET = 0.1

_SQRT_2EPI = math.sqrt(2.0 * math.e * math.pi)
_MAX_EXP_ARG = 700.0
_M_SEARCH_CAP = 2**63


@dataclass(frozen=True)
class PrivacyParams:
    """The (sigma, M, E) triple every bound is indexed by."""

    sigma: float
    M: int
    E: int = 1

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if self.M < 3 or self.M != int(self.M):
            raise PreconditionError(f"M must be an integer >= 3, got {self.M}")
        if self.E < 1 or self.E != int(self.E):
            raise PreconditionError(f"E must be an integer >= 1, got {self.E}")

    @property
    def sigma_floor(self) -> float:
        """Smallest sigma the closed-form analysis can ever cover at this M."""
        return math.sqrt(3.0 / math.log(self.M))

    @property
    def meets_sigma_floor(self) -> bool:
        return self.sigma >= self.sigma_floor


def below_impossibility_threshold(sigma: float, m: int) -> bool:
    """Informational flag: sigma < 1/sqrt(2 ln M) is provably non-private."""
    if m < 3:
        raise PreconditionError(f"M must be >= 3, got {m}")
    return sigma < 1.0 / math.sqrt(2.0 * math.log(m))


@dataclass(frozen=True)
class DeltaBreakdown:
    """The six additive terms of the delta lower bound plus its validity gate.

    ``term_be`` carries the full 2B factor; the validity left-hand side is
    therefore total + term_be / 2.
    """

    mu: float
    term_be: float
    term_linear: float
    term_quad: float
    term_cubic: float
    term_quartic: float
    term_tail: float
    total: float
    validity_lhs: float
    validity_rhs: float
    valid: bool

    @property
    def terms(self) -> tuple:
        return (
            self.term_be,
            self.term_linear,
            self.term_quad,
            self.term_cubic,
            self.term_quartic,
            self.term_tail,
        )

    @property
    def validity_margin(self) -> float:
        return self.validity_rhs - self.validity_lhs


@dataclass(frozen=True)
class ParamSolution:
    """Result of the exact minimal-M solve."""

    M: int
    delta_achieved: float
    N_min: int
    breakdown: DeltaBreakdown


def _check_sigma_arg(sigma: float) -> float:
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    x = 1.0 / (sigma * sigma)
    if 3.0 * x > _MAX_EXP_ARG:
        raise RangeError(
            f"sigma={sigma} too small: e^(3/sigma^2) overflows", log_value=3.0 * x
        )
    return x


def mu_of(sigma: float, m: int) -> float:
    """Scale of one round's evidence: sqrt((e^{1/sigma^2} - 1)/(M - 1))."""
    if m < 2 or m != int(m):
        raise PreconditionError(f"M must be an integer >= 2, got {m}")
    x = _check_sigma_arg(sigma)
    return math.sqrt(math.expm1(x) / (m - 1))


def _be_mu_coefficient(x: float, b: float) -> float:
    """2B e^{1/s^2} (1 + 4 e^{-3/s^2}) / (1 - e^{-1/s^2})^2."""
    em1 = -math.expm1(-x)
    return 2.0 * b * math.exp(x) * (1.0 + 4.0 * math.exp(-3.0 * x)) / (em1 * em1)


def validity_ceiling(sigma: float) -> float:
    """Right-hand side of the validity condition: 1/2 - Phi(-(e^{1/s^2}-1)/2)."""
    x = _check_sigma_arg(sigma)
    return 0.5 - std_normal_cdf(-math.expm1(x) / 2.0)


def delta_bound(sigma: float, m: int, b: float = B_UPPER) -> DeltaBreakdown:
    """Evaluate the six-term delta lower bound at (sigma, M).

    The returned total is the tightest delta certified at these
    parameters; ``valid`` reports whether the closed-form analysis
    applies at all. Strictly decreasing in M for fixed sigma.
    """
    if m < 3 or m != int(m):
        raise PreconditionError(f"M must be an integer >= 3, got {m}")
    check_be_constant(b)
    x = _check_sigma_arg(sigma)
    mu = mu_of(sigma, m)
    em1 = -math.expm1(-x)

    term_be = _be_mu_coefficient(x, b) * mu
    term_linear = mu / SQRT_2PI
    term_quad = (
        1.0 / (4.0 * SQRT_2PI)
        + (1.0 + math.exp(x) / em1) / (2.0 * _SQRT_2EPI)
    ) * mu * mu
    term_cubic = mu**3 / (4.0 * _SQRT_2EPI)
    term_quartic = mu**4 / (32.0 * _SQRT_2EPI)
    root_log_m = math.sqrt(math.log(m))
    term_tail = 4.52 / (2.88 * root_log_m - 2.41 / root_log_m) * m ** (-25.0 / 24.0)

    total = term_be + term_linear + term_quad + term_cubic + term_quartic + term_tail
    lhs = total + term_be / 2.0
    rhs = validity_ceiling(sigma)
    return DeltaBreakdown(
        mu=mu,
        term_be=term_be,
        term_linear=term_linear,
        term_quad=term_quad,
        term_cubic=term_cubic,
        term_quartic=term_quartic,
        term_tail=term_tail,
        total=total,
        validity_lhs=lhs,
        validity_rhs=rhs,
        valid=lhs <= rhs,
    )


def delta_two_term(sigma: float, m: int, b: float = B_UPPER) -> float:
    """Two-term approximation: the dominant B-term plus mu/sqrt(2 pi).

    Tracks the full bound to about 0.1 percent at practical parameters
    and never exceeds it.
    """
    if m < 2 or m != int(m):
        raise PreconditionError(f"M must be an integer >= 2, got {m}")
    check_be_constant(b)
    x = _check_sigma_arg(sigma)
    return (_be_mu_coefficient(x, b) + 1.0 / SQRT_2PI) * mu_of(sigma, m)


def m_closed_form(sigma: float, delta: float, b: float = B_UPPER,
                  which: str = "primary") -> float:
    """Closed-form lower bound on the rounds needed for a target delta.

    ``primary`` inverts the two-term delta approximation; ``conditional``
    inverts the validity condition instead (coefficient 3B and the
    validity ceiling in place of 1/delta). Real-valued; callers ceil.
    """
    check_be_constant(b)
    x = _check_sigma_arg(sigma)
    if which not in ("primary", "conditional"):
        raise DomainError(f"which must be 'primary' or 'conditional', got {which!r}")
    em1 = -math.expm1(-x)
    base = math.exp(1.5 * x) * (1.0 + 4.0 * math.exp(-3.0 * x)) / em1**1.5
    tail = math.sqrt(math.expm1(x)) / SQRT_2PI
    if which == "primary":
        if not (0.0 < delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        scale = (2.0 * b * base + tail) / delta
    else:
        ceiling = validity_ceiling(sigma)
        if ceiling <= 0.0:
            raise DomainError(f"validity ceiling non-positive at sigma={sigma}")
        scale = (3.0 * b * base + tail) / ceiling
    return 1.0 + scale * scale


def min_dataset(sigma: float, m: int, clip: float = DEFAULT_CLIP,
                noise_budget: float = DEFAULT_NOISE_BUDGET) -> int:
    """Smallest N keeping the per-round noise clip*sigma*M/N within budget."""
    if sigma <= 0.0 or m <= 0 or clip <= 0.0 or noise_budget <= 0.0:
        raise DomainError("sigma, M, clip and noise_budget must all be positive")
    return math.ceil(clip * sigma * m / noise_budget)


def solve_m_exact(sigma: float, delta_target: float, b: float = B_UPPER,
                  clip: float = DEFAULT_CLIP,
                  noise_budget: float = DEFAULT_NOISE_BUDGET) -> ParamSolution:
    """Smallest integer M whose six-term bound is valid and <= delta_target.

    Seeds from the closed form, doubles until the target is met, then
    binary-searches the minimal M. Both the total and the validity
    left-hand side decrease in M, so the predicate is monotone.
    """
    if not (0.0 < delta_target < 1.0):
        raise DomainError(f"delta_target must lie in (0, 1), got {delta_target}")
    ceiling = validity_ceiling(sigma)
    if delta_target >= ceiling:
        raise DomainError(
            f"delta_target={delta_target} is at or above the validity ceiling "
            f"{ceiling:.6g} at sigma={sigma}; no parameters are certifiable"
        )
    if delta_target > (2.0 / 3.0) * ceiling:
        warnings.warn(
            f"delta_target={delta_target} exceeds the recommended admissibility "
            f"frontier {(2.0 / 3.0) * ceiling:.6g} at sigma={sigma}",
            stacklevel=2,
        )

    def satisfied(m: int) -> bool:
        bd = delta_bound(sigma, m, b)
        return bd.valid and bd.total <= delta_target

    hi = min(max(3, math.ceil(m_closed_form(sigma, delta_target, b))), _M_SEARCH_CAP)
    while not satisfied(hi):
        if hi >= _M_SEARCH_CAP:
            raise SaturationError(
                f"no admissible M below 2^63 for sigma={sigma}, "
                f"delta={delta_target}"
            )
        hi = min(2 * hi, _M_SEARCH_CAP)
    lo = 3
    while lo < hi:
        mid = (lo + hi) // 2
        if satisfied(mid):
            hi = mid
        else:
            lo = mid + 1
    bd = delta_bound(sigma, lo, b)
    return ParamSolution(
        M=lo,
        delta_achieved=bd.total,
        N_min=min_dataset(sigma, lo, clip, noise_budget),
        breakdown=bd,
    )


def admissibility(sigma: float | None = None, delta: float | None = None) -> float:
    """The recommended operating frontier delta = (2/3) * validity ceiling.

    Given sigma, returns the largest recommended delta; given delta,
    returns the largest sigma for which that delta stays recommended.
    Exactly one argument must be supplied.
    """
    if (sigma is None) == (delta is None):
        raise DomainError("pass exactly one of sigma or delta")
    if sigma is not None:
        if sigma <= 0.0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        return (2.0 / 3.0) * validity_ceiling(sigma)
    if not (0.0 < delta < 1.0 / 3.0):
        raise DomainError(
            f"delta must lie in (0, 1/3) for a frontier solution, got {delta}"
        )
    # frontier delta is strictly decreasing in sigma: bisect (the lower
    # bracket end sits just above the e^(3/sigma^2) representation guard)
    lo, hi = 0.07, 1e3
    f_lo = admissibility(sigma=lo) - delta
    f_hi = admissibility(sigma=hi) - delta
    if f_lo < 0.0 or f_hi > 0.0:
        raise NumericalError(
            f"admissibility bracket failed on [{lo}, {hi}] for delta={delta}"
        )
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if admissibility(sigma=mid) - delta >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * lo:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MultiEpochResult:
    """E-fold composition of the certified single-epoch bound."""

    sigma: float
    M: int
    epochs: int
    per_epoch_delta: float
    composed_shift: float
    guaranteed: bool
    curve: TradeoffCurve


def multi_epoch(params: PrivacyParams, b: float = B_UPPER) -> MultiEpochResult:
    """Compose the certified bound at (sigma, M) over params.E epochs.

    The composed trade-off floor is max((1 - delta)^E - a, 0); the
    returned shift is 1 - (1 - delta)^E. This path is fully proven.
    """
    bd = delta_bound(params.sigma, params.M, b)
    if not bd.valid:
        raise ValidityError(
            f"validity condition fails at sigma={params.sigma}, M={params.M}: "
            f"lhs={bd.validity_lhs:.6g} > rhs={bd.validity_rhs:.6g}"
        )
    shift = compose_f0_delta(bd.total, params.E)
    curve = sample_curve(f0_handle(shift), label=f"composed shift {shift:g}")
    return MultiEpochResult(
        sigma=params.sigma,
        M=params.M,
        epochs=params.E,
        per_epoch_delta=bd.total,
        composed_shift=shift,
        guaranteed=True,
        curve=curve,
    )


@dataclass(frozen=True)
class EpochPlan:
    """Parameter plan for hitting a composed delta target over E epochs."""

    sigma: float
    epochs: int
    composed_target: float
    mode: str
    per_epoch_delta: float
    rounds_required: int
    n_min: int
    guaranteed: bool


def plan_epochs(sigma: float, epochs: int, composed_target: float,
                b: float = B_UPPER, mode: str = "proven",
                clip: float = DEFAULT_CLIP,
                noise_budget: float = DEFAULT_NOISE_BUDGET) -> EpochPlan:
    """Per-epoch delta and closed-form rounds for a composed target.

    ``proven`` splits the target linearly (delta/E), matching the
    certified composition. ``conjectured_sqrtE`` splits as delta/sqrt(E);
    this matches the observed asymptotic scaling but is NOT a proven
    guarantee and the plan is flagged accordingly.
    """
    if epochs < 1 or epochs != int(epochs):
        raise DomainError(f"epochs must be an integer >= 1, got {epochs}")
    if not (0.0 < composed_target < 1.0):
        raise DomainError(f"composed_target must lie in (0, 1), got {composed_target}")
    if mode == "proven":
        per = composed_target / epochs
        guaranteed = True
    elif mode == "conjectured_sqrtE":
        per = composed_target / math.sqrt(epochs)
        guaranteed = False
    else:
        raise DomainError(f"mode must be 'proven' or 'conjectured_sqrtE', got {mode!r}")
    rounds = math.ceil(m_closed_form(sigma, per, b))
    return EpochPlan(
        sigma=sigma,
        epochs=int(epochs),
        composed_target=composed_target,
        mode=mode,
        per_epoch_delta=per,
        rounds_required=rounds,
        n_min=min_dataset(sigma, rounds, clip, noise_budget),
        guaranteed=guaranteed,
    )
