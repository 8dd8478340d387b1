"""Trade-off function algebra.

A trade-off function maps a permitted Type-I error a in [0, 1] to the
smallest achievable Type-II error. Perfect privacy is the diagonal
1 - a; the two reference families used here are the Gaussian curve
G_mu(a) = Phi(Phi^{-1}(1 - a) - mu) and the uniform shift
f_{0,delta}(a) = max(1 - a - delta, 0). Only the closed-form
compositions that the accountant actually needs are implemented; there
is no generic tensor product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NumericalError
from .numerics import std_normal_cdf, std_normal_cdf_inv

DEFAULT_GRID_POINTS = 1025

_SQRT2 = math.sqrt(2.0)


def _check_prob(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class TradeoffFunction:
    """Evaluation handle a -> f(a) with declared shape flags."""

    fn: Callable[[float], float]
    symmetric: bool = True
    convex: bool = True
    label: str = ""

    def __call__(self, a: float) -> float:
        return self.fn(a)


def gdp(mu: float, a: float) -> float:
    """Gaussian trade-off curve G_mu(a) = Phi(Phi^{-1}(1 - a) - mu)."""
    if not (mu >= 0.0 and math.isfinite(mu)):
        raise DomainError(f"mu must be finite and >= 0, got {mu}")
    a = _check_prob(a, "a")
    if a == 0.0:
        return 1.0
    if a == 1.0:
        return 0.0
    return std_normal_cdf(std_normal_cdf_inv(1.0 - a) - mu)


def gdp_handle(mu: float) -> TradeoffFunction:
    return TradeoffFunction(lambda a: gdp(mu, a), label=f"G_{mu:g}")


def f0_delta(delta: float, a: float) -> float:
    """Uniform-shift curve max(1 - a - delta, 0)."""
    delta = _check_prob(delta, "delta")
    a = _check_prob(a, "a")
    return max(1.0 - a - delta, 0.0)


def f0_handle(delta: float) -> TradeoffFunction:
    return TradeoffFunction(lambda a: f0_delta(delta, a), label=f"f0_{delta:g}")


def compose_f0_delta(delta: float, epochs: int) -> float:
    """Shift of the epochs-fold self-composition of f_{0,delta}.

    Returns 1 - (1 - delta)^epochs, evaluated in log space so tiny delta
    and large epochs do not lose precision.
    """
    delta = _check_prob(delta, "delta")
    if epochs < 1 or epochs != int(epochs):
        raise DomainError(f"epochs must be an integer >= 1, got {epochs}")
    if epochs == 1:
        return delta
    if delta == 1.0:
        return 1.0
    return -math.expm1(epochs * math.log1p(-delta))


def fixed_point(g: Callable[[float], float]) -> float:
    """The unique a* with g(a*) = a*, for a decreasing curve below the diagonal.

    Bisection on a - g(a) over [0, 1/2]; every trade-off function below
    the diagonal crosses there.
    """
    lo, hi = 0.0, 0.5
    u_lo = lo - g(lo)
    u_hi = hi - g(hi)
    if u_lo > 0.0 or u_hi < 0.0:
        raise NumericalError(
            f"fixed-point bracket failed: a - g(a) is {u_lo:.3g} at 0 and "
            f"{u_hi:.3g} at 1/2"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        u = mid - g(mid)
        if u <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    a_star = 0.5 * (lo + hi)
    if abs(g(a_star) - a_star) > 1e-12:
        raise NumericalError(
            f"fixed point did not converge: residual {abs(g(a_star) - a_star):.3g}"
        )
    return a_star


def separation(g: Callable[[float], float]) -> float:
    """Distance of a symmetric convex curve from the diagonal: (1 - 2 a*)/sqrt(2)."""
    return (1.0 - 2.0 * fixed_point(g)) / _SQRT2


def compose_gdp_uniform(mu: float, delta_hat: float, a: float) -> float:
    """The composition of G_mu with a uniform shift delta_hat.

    Equals (1 - delta_hat) G_mu(a / (1 - delta_hat)) until it hits zero
    at a = 1 - delta_hat.
    """
    delta_hat = float(delta_hat)
    if not (0.0 <= delta_hat < 1.0):
        raise DomainError(f"delta_hat must lie in [0, 1), got {delta_hat}")
    a = _check_prob(a, "a")
    scale = 1.0 - delta_hat
    if a >= scale:
        return 0.0
    return scale * gdp(mu, min(a / scale, 1.0))


def compose_gdp_uniform_handle(mu: float, delta_hat: float) -> TradeoffFunction:
    return TradeoffFunction(
        lambda a: compose_gdp_uniform(mu, delta_hat, a),
        label=f"G_{mu:g} x f0_{delta_hat:g}",
    )


def delta_hat_of(mu: float, delta: float) -> float:
    """Shift that lets G_mu absorb a (delta-shifted, delta-dropped) bound.

    Requires 0 < delta < a* where a* = Phi(-mu/2) is the fixed point of
    G_mu; returns max(delta / a*, 1 - G_mu(delta) + delta).
    """
    delta = _check_prob(delta, "delta")
    a_star = std_normal_cdf(-mu / 2.0)
    if not (0.0 < delta < a_star):
        raise DomainError(
            f"delta must lie in (0, a*) with a* = {a_star:.6g}, got {delta}"
        )
    return max(delta / a_star, 1.0 - gdp(mu, delta) + delta)


@dataclass(frozen=True)
class TradeoffCurve:
    """A sampled trade-off function on a sorted grid in [0, 1].

    Construction enforces the shape every trade-off function must have:
    values in [0, 1], non-increasing, discretely convex, and on or below
    the diagonal (all up to 1e-12 slack).
    """

    grid: np.ndarray
    values: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 3:
            raise DomainError("grid and values must be equal-length 1-d arrays, length >= 3")
        if np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0 or grid[-1] > 1.0:
            raise DomainError("grid must be strictly increasing within [0, 1]")
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise DomainError("values must lie in [0, 1]")
        if np.any(np.diff(values) > 1e-12):
            raise DomainError("values must be non-increasing along the grid")
        second = values[:-2] - 2.0 * values[1:-1] + values[2:]
        if np.any(second < -1e-12):
            raise DomainError("values must be discretely convex")
        if np.any(values > 1.0 - grid + 1e-12):
            raise DomainError("values must not exceed the diagonal 1 - a")
        grid = grid.copy()
        values = values.copy()
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def sample_curve(fn: Callable[[float], float], grid: np.ndarray | None = None,
                 label: str = "") -> TradeoffCurve:
    """Sample a trade-off function handle into a validated TradeoffCurve."""
    if grid is None:
        grid = default_grid()
    values = np.array([fn(float(a)) for a in grid], dtype=float)
    if not label and isinstance(fn, TradeoffFunction):
        label = fn.label
    return TradeoffCurve(grid=np.asarray(grid, dtype=float), values=values, label=label)
