"""Moments and CLT error machinery for the unit-mean lognormal.

The distribution throughout is Y = exp(X/sigma - 1/(2 sigma^2)) with
X standard normal, so E[Y] = 1 for every sigma. This module provides its
closed-form central moments, three Berry-Esseen error bounds for the
standardized n-sample mean, and the two-term Edgeworth correction
Phi(p_n(x)) specialized to this family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, RangeError, ValidityError
from .numerics import SQRT_2PI, std_normal_cdf

# Proven bracket for the universal Berry-Esseen constant for i.i.d. sums.
# The upper end is the default everywhere a guarantee is computed; the
# lower end exists for sensitivity studies only.
B_UPPER = 0.4748
B_LOWER = 0.4097

# Representation guard: 1/sigma^2 <= 230 keeps e^{3/sigma^2} (used by
# rho3 and the third moment) inside double range. mu4 may still overflow
# and is then reported in log space, see MomentSet.
MAX_INV_SIGMA_SQ = 230.0
_MAX_EXP_ARG = 700.0

BE_MODES = ("exact", "small_sigma", "large_sigma")


def check_be_constant(b: float) -> None:
    """Reject Berry-Esseen constants outside the proven bracket."""
    if not (B_LOWER <= b <= B_UPPER):
        raise DomainError(
            f"Berry-Esseen constant {b} outside proven range "
            f"[{B_LOWER}, {B_UPPER}]"
        )


def _check_sigma(sigma: float) -> float:
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    x = 1.0 / (sigma * sigma)
    if x > MAX_INV_SIGMA_SQ:
        raise RangeError(
            f"sigma={sigma} too small: 1/sigma^2={x:.3g} exceeds the "
            f"representation guard {MAX_INV_SIGMA_SQ}",
            log_value=x,
        )
    return x


@dataclass(frozen=True)
class MomentSet:
    """Mean and central moments of Y = exp(X/sigma - 1/(2 sigma^2)).

    ``u`` is exactly 1. ``mu4`` is +inf when it exceeds double range; the
    exact natural log is then available as ``log_mu4`` together with the
    ``mu4_overflowed`` flag.
    """

    u: float
    mu2: float
    mu3: float
    mu4: float
    rho3: float
    log_mu4: float
    mu4_overflowed: bool


def raw_moment(sigma: float, k: int) -> float:
    """E[Y^k] = exp(k(k-1)/(2 sigma^2))."""
    if k < 0 or k != int(k):
        raise DomainError(f"moment order must be a non-negative integer, got {k}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    arg = k * (k - 1) / (2.0 * sigma * sigma)
    if arg > _MAX_EXP_ARG:
        raise RangeError(
            f"raw moment k={k} at sigma={sigma} overflows: ln E[Y^k] = {arg:.6g}",
            log_value=arg,
        )
    return math.exp(arg)


def moments(sigma: float) -> MomentSet:
    """Closed-form u, mu2, mu3, mu4 and rho3 = E|Y-1|^3.

    mu3 and mu4 use the factored forms (t + 2)(t - 1)^2 and
    (t^4 + 2 t^3 + 3 t^2 - 3)(t - 1)^2 with t = e^{1/sigma^2}; the raw
    alternating sums cancel catastrophically at large sigma.
    """
    x = _check_sigma(sigma)
    t = math.exp(x)
    mu2 = math.expm1(x)
    mu3 = (t + 2.0) * mu2 * mu2

    # ln mu4 is always representable; the value itself may not be.
    log_poly = 4.0 * x + math.log1p(
        2.0 * math.exp(-x) + 3.0 * math.exp(-2.0 * x) - 3.0 * math.exp(-4.0 * x)
    )
    log_mu4 = log_poly + 2.0 * math.log(mu2)
    if log_mu4 <= _MAX_EXP_ARG:
        # the factored product is entirely in range here (log_mu4 bounds
        # every intermediate for x >= 0)
        mu4 = (
            math.exp(4.0 * x)
            + 2.0 * math.exp(3.0 * x)
            + 3.0 * math.exp(2.0 * x)
            - 3.0
        ) * mu2 * mu2
        overflowed = False
    elif log_mu4 <= 709.0:
        mu4 = math.exp(log_mu4)
        overflowed = False
    else:
        mu4 = math.inf
        overflowed = True

    rho3 = (
        (1.0 - 2.0 * std_normal_cdf(-2.5 / sigma)) * math.exp(3.0 * x)
        - 3.0 * (1.0 - 2.0 * std_normal_cdf(-1.5 / sigma)) * t
        + 4.0 * (1.0 - 2.0 * std_normal_cdf(-0.5 / sigma))
    )
    return MomentSet(
        u=1.0,
        mu2=mu2,
        mu3=mu3,
        mu4=mu4,
        rho3=rho3,
        log_mu4=log_mu4,
        mu4_overflowed=overflowed,
    )


def be_error_bound(sigma: float, n: int, b: float = B_UPPER, mode: str = "exact") -> float:
    """Berry-Esseen bound on sup_x |F_n(x) - Phi(x)| for the n-sample mean.

    ``exact`` evaluates B rho^3 / (sqrt(n) mu2^{3/2}) from the closed-form
    moments; ``small_sigma`` and ``large_sigma`` are the looser closed
    forms that expose the sigma-dependence at either extreme. Both always
    dominate the exact mode.
    """
    if n < 2 or n != int(n):
        raise DomainError(f"n must be an integer >= 2, got {n}")
    check_be_constant(b)
    if mode not in BE_MODES:
        raise DomainError(f"mode must be one of {BE_MODES}, got {mode!r}")
    x = _check_sigma(sigma)
    rsn = 1.0 / math.sqrt(n)
    if mode == "exact":
        m = moments(sigma)
        return b * m.rho3 * rsn / m.mu2**1.5
    if mode == "small_sigma":
        return (
            b
            * math.exp(1.5 * x)
            * rsn
            * (1.0 + 4.0 * math.exp(-3.0 * x))
            / (-math.expm1(-x)) ** 1.5
        )
    return (
        b
        * math.sqrt(8.0 / math.pi)
        * rsn
        * (1.0 + (46.115 + 0.375 * math.exp(x) + 5.625 * math.exp(3.0 * x)) * x)
    )


def default_kappa(n: int) -> float:
    """Validity half-width used when the caller does not pick one.

    Grows like sqrt(2 ln n) but is capped at n^{1/16}/2 so it vanishes
    relative to the n^{1/16} scale on which the cubic correction stays
    monotone.
    """
    return min(math.sqrt(2.0 * math.log(n)), n ** (1.0 / 16.0) / 2.0)


@dataclass(frozen=True)
class EdgeworthModel:
    """Coefficients of the cubic correction p_n for one (sigma, n) pair.

    Valid (strictly increasing) on [-kappa_n, kappa_n]; construction
    verifies this on a dense grid.
    """

    sigma: float
    n: int
    c_n: float
    d_n: float
    kappa_n: float

    def polynomial(self, x):
        """p_n(x) = x + c_n(1 - x^2) + d_n(3x - x^3) + c_n^2(4x^3 - 7x)."""
        x = np.asarray(x, dtype=float)
        c, d = self.c_n, self.d_n
        out = x + c * (1.0 - x * x) + d * (3.0 * x - x**3) + c * c * (4.0 * x**3 - 7.0 * x)
        return out if out.ndim else float(out)

    def polynomial_derivative(self, x):
        x = np.asarray(x, dtype=float)
        c, d = self.c_n, self.d_n
        out = 1.0 - 2.0 * c * x + d * (3.0 - 3.0 * x * x) + c * c * (12.0 * x * x - 7.0)
        return out if out.ndim else float(out)


def edgeworth_model(sigma: float, n: int, kappa_n: float | None = None) -> EdgeworthModel:
    """Build the two-term correction for the lognormal n-sample mean.

    The coefficients are computed twice, from the generic moment ratios
    c_n = mu3 / (6 mu2^{3/2} sqrt(n)), d_n = (mu4 - 3 mu2^2) / (24 mu2^2 n)
    and from their factored lognormal forms; a mismatch beyond 1e-12
    relative is a bug and raises.
    """
    if n < 2 or n != int(n):
        raise DomainError(f"n must be an integer >= 2, got {n}")
    x = _check_sigma(sigma)
    if kappa_n is None:
        kappa_n = default_kappa(n)
    if not kappa_n > 0.0:
        raise DomainError(f"kappa_n must be positive, got {kappa_n}")

    t = math.exp(x)
    c_n = (t + 2.0) * math.sqrt(math.expm1(x)) / (6.0 * math.sqrt(n))
    d_n = (
        math.expm1(x)
        * (math.exp(3.0 * x) + 3.0 * math.exp(2.0 * x) + 6.0 * t + 6.0)
        / (24.0 * n)
    )

    if not (math.isfinite(c_n) and math.isfinite(d_n)):
        raise RangeError(
            f"Edgeworth coefficients overflow at sigma={sigma}, n={n}",
            log_value=4.0 * x - math.log(24.0 * n),
        )

    m = moments(sigma)
    c_ref = m.mu3 / (6.0 * m.mu2**1.5 * math.sqrt(n))
    # (mu4 - 3 mu2^2)/mu2^2 = (t^4 - 1) + 2(t^3 - 1) + 3(t^2 - 1); the
    # expm1 form survives the cancellation as the excess kurtosis -> 0
    d_ref = (
        math.expm1(4.0 * x) + 2.0 * math.expm1(3.0 * x) + 3.0 * math.expm1(2.0 * x)
    ) / (24.0 * n)
    for name, a, bref in (("c_n", c_n, c_ref), ("d_n", d_n, d_ref)):
        if abs(a - bref) > 1e-12 * max(abs(a), abs(bref)):
            raise NumericalError(
                f"{name} mismatch between factored and moment forms: {a} vs {bref}"
            )

    model = EdgeworthModel(sigma=float(sigma), n=int(n), c_n=c_n, d_n=d_n, kappa_n=float(kappa_n))
    grid = np.linspace(-kappa_n, kappa_n, 10001)
    deriv = model.polynomial_derivative(grid)
    bad = np.nonzero(deriv <= 0.0)[0]
    if bad.size:
        raise ValidityError(
            f"correction polynomial not strictly increasing on "
            f"[-{kappa_n}, {kappa_n}]: derivative {deriv[bad[0]]:.3g} at "
            f"x={grid[bad[0]]:.6g}"
        )
    return model


def edgeworth_cdf(model: EdgeworthModel, x):
    """Phi(p_n(x)) for |x| <= kappa_n; the refined CDF approximation."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > model.kappa_n):
        raise DomainError(
            f"|x| exceeds the validity half-width kappa_n={model.kappa_n}"
        )
    return std_normal_cdf(model.polynomial(arr))
