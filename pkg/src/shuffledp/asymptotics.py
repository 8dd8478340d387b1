"""Large-M limits: per-unit GDP coefficients for shuffling vs Poisson.

When the epoch count grows as E = c^2 M, the E-fold composed trade-off
function of the shuffled mechanism converges to the Gaussian curve with
parameter c * sqrt(e^{1/sigma^2} - 1); the Poisson-subsampled analogue
carries coefficient c * sqrt(2 (e^{1/sigma^2} Phi(3/(2 sigma))
+ 3 Phi(-1/(2 sigma)) - 2)). Their ratio falls monotonically from
sqrt(2) at small sigma to 1 at large sigma. Everything here is the
leading-order limit: the vanishing correction sequences have no known
closed form and are treated as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError
from .numerics import log_std_normal_cdf, std_normal_cdf
from .tradeoff import TradeoffFunction, compose_f0_delta, gdp, separation as _separation

# Above this value of 1/sigma^2 the coefficients overflow double range
# and the ratio must be assembled in log space.
_LOG_SPACE_THRESHOLD = 700.0

_SQRT2 = math.sqrt(2.0)
_SQRT_8PIE = math.sqrt(8.0 * math.pi * math.e)


@dataclass(frozen=True)
class GdpComparison:
    sigma: float
    shuffle_mu: float
    poisson_mu: float
    ratio: float
    computed_in_log_space: bool


def _check_sigma(sigma: float) -> float:
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    return 1.0 / (sigma * sigma)


def log_shuffle_coeff(sigma: float) -> float:
    """ln of the shuffling coefficient, finite for every positive sigma."""
    x = _check_sigma(sigma)
    return 0.5 * (x + math.log1p(-math.exp(-x)))


def shuffle_coeff(sigma: float) -> float:
    """Per-unit GDP coefficient of shuffling: sqrt(e^{1/sigma^2} - 1).

    Overflows to +inf below sigma ~ 0.053; use :func:`log_shuffle_coeff`
    or :func:`coeff_ratio` there.
    """
    x = _check_sigma(sigma)
    if x > _LOG_SPACE_THRESHOLD:
        return math.inf
    return math.sqrt(math.expm1(x))


def log_poisson_coeff(sigma: float) -> float:
    """ln of the Poisson-subsampling coefficient, finite for every sigma.

    The dominant product e^{1/sigma^2} Phi(3/(2 sigma)) is kept in log
    form; the two remaining terms enter through log1p and underflow
    harmlessly at small sigma.
    """
    x = _check_sigma(sigma)
    log_lead = x + log_std_normal_cdf(1.5 / sigma)
    # remaining terms relative to the dominant product; the exp underflows
    # harmlessly to zero at small sigma (log_lead is never below ~-0.7)
    rest = (3.0 * std_normal_cdf(-0.5 / sigma) - 2.0) * math.exp(-log_lead)
    return 0.5 * (math.log(2.0) + log_lead + math.log1p(rest))


def poisson_coeff(sigma: float) -> float:
    """Per-unit GDP coefficient of Poisson subsampling.

    sqrt(2 (e^{1/sigma^2} Phi(3/(2 sigma)) + 3 Phi(-1/(2 sigma)) - 2));
    +inf once e^{1/sigma^2} leaves double range.
    """
    x = _check_sigma(sigma)
    if x > _LOG_SPACE_THRESHOLD:
        return math.inf
    return math.sqrt(
        2.0
        * (
            math.exp(x) * std_normal_cdf(1.5 / sigma)
            + 3.0 * std_normal_cdf(-0.5 / sigma)
            - 2.0
        )
    )


def coeff_ratio(sigma: float) -> GdpComparison:
    """Poisson over shuffling coefficient; log-space path past overflow."""
    x = _check_sigma(sigma)
    if x > _LOG_SPACE_THRESHOLD:
        ratio = math.exp(log_poisson_coeff(sigma) - log_shuffle_coeff(sigma))
        return GdpComparison(
            sigma=sigma,
            shuffle_mu=math.inf,
            poisson_mu=math.inf,
            ratio=ratio,
            computed_in_log_space=True,
        )
    s = shuffle_coeff(sigma)
    p = poisson_coeff(sigma)
    return GdpComparison(
        sigma=sigma, shuffle_mu=s, poisson_mu=p, ratio=p / s,
        computed_in_log_space=False,
    )


def midpoint_sigma() -> float:
    """The sigma where the coefficient ratio equals (1 + sqrt(2))/2.

    Bisection on [0.1, 20]; the ratio is monotone there so the root is
    unique. Accurate to 1e-6 in sigma.
    """
    target = (1.0 + _SQRT2) / 2.0
    lo, hi = 0.1, 20.0
    f_lo = coeff_ratio(lo).ratio - target
    f_hi = coeff_ratio(hi).ratio - target
    if f_lo < 0.0 or f_hi > 0.0:
        raise NumericalError("midpoint bracket failed on [0.1, 20]")
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if coeff_ratio(mid).ratio - target >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def asymptotic_epoch_gdp(sigma: float, c: float) -> TradeoffFunction:
    """Limit trade-off handle for E = c^2 M epochs: a -> G_{c * coeff}(a).

    c = 0 degenerates to the diagonal 1 - a (no leakage in the limit).
    """
    if c < 0.0:
        raise DomainError(f"c must be >= 0, got {c}")
    mu = c * shuffle_coeff(sigma)
    if not math.isfinite(mu):
        raise DomainError(
            f"limit coefficient overflows at sigma={sigma}; no finite handle"
        )
    return TradeoffFunction(lambda a: gdp(mu, a), label=f"epoch limit c={c:g}")


def separation_scaling(value: float, epochs: int, mode: str) -> float:
    """Distance from the diagonal after E epochs, under either scaling.

    ``concrete_linear`` takes the per-epoch shift delta and returns the
    separation of the composed uniform-shift floor,
    (1 - (1 - delta)^E)/sqrt(2); certified, linear in E for small delta.
    ``asymptotic_sqrt`` takes the per-epoch Gaussian parameter mu and
    returns the separation of G_{mu sqrt(E)}; leading-order only (the
    vanishing corrections are non-constructive and set to zero).
    """
    if epochs < 1 or epochs != int(epochs):
        raise DomainError(f"epochs must be an integer >= 1, got {epochs}")
    if mode == "concrete_linear":
        return compose_f0_delta(value, epochs) / _SQRT2
    if mode == "asymptotic_sqrt":
        if value < 0.0:
            raise DomainError(f"mu must be >= 0, got {value}")
        mu_e = value * math.sqrt(epochs)
        return (1.0 - 2.0 * std_normal_cdf(-mu_e / 2.0)) / _SQRT2
    raise DomainError(
        f"mode must be 'concrete_linear' or 'asymptotic_sqrt', got {mode!r}"
    )


def upper_correction(sigma: float, m: int) -> float:
    """Additive slack e^{2/sigma^2} / (sqrt(8 pi e) (M - 1)).

    Applies to the upper comparison branch of the finite-M Gaussian
    sandwich for a >= 1/2. The accompanying vanishing sequences are
    non-constructive and reported as zero, so this term is the only
    finite-M correction the library can evaluate.
    """
    if m < 2 or m != int(m):
        raise DomainError(f"M must be an integer >= 2, got {m}")
    x = _check_sigma(sigma)
    if 2.0 * x > _LOG_SPACE_THRESHOLD:
        raise DomainError(f"correction overflows at sigma={sigma}")
    return math.exp(2.0 * x) / (_SQRT_8PIE * (m - 1))


def epoch_separation(sigma: float, c: float) -> float:
    """Separation of the limiting curve G_{c * shuffle_coeff(sigma)}."""
    return _separation(asymptotic_epoch_gdp(sigma, c))
