import math

import numpy as np
import pytest

from shuffledp.asymptotics import (
    asymptotic_epoch_gdp,
    coeff_ratio,
    epoch_separation,
    log_poisson_coeff,
    log_shuffle_coeff,
    midpoint_sigma,
    poisson_coeff,
    separation_scaling,
    shuffle_coeff,
    upper_correction,
)
from shuffledp.accountant import delta_bound
from shuffledp.errors import DomainError
from shuffledp.tradeoff import compose_f0_delta, gdp

SQRT2 = math.sqrt(2.0)


def test_shuffle_coeff_values():
    assert shuffle_coeff(1.0) == pytest.approx(1.3108324944320862, rel=1e-14)
    assert shuffle_coeff(0.5) == pytest.approx(7.3210757428908109, rel=1e-14)
    # high-noise expansion: coefficient ~ 1/sigma
    assert shuffle_coeff(100.0) == pytest.approx(0.01, rel=1e-4)


def test_poisson_coeff_values():
    assert poisson_coeff(1.0) == pytest.approx(1.7101424755953306, rel=1e-13)


def test_ratio_values():
    assert coeff_ratio(1.0).ratio == pytest.approx(1.3046231939316123, rel=1e-12)
    assert coeff_ratio(0.2).ratio == pytest.approx(SQRT2, abs=1e-4)
    assert coeff_ratio(1.668).ratio == pytest.approx(1.207, abs=2e-3)


def test_log_space_path():
    cmp_tiny = coeff_ratio(0.03)  # 1/sigma^2 > 700: direct floats overflow
    assert cmp_tiny.computed_in_log_space
    assert cmp_tiny.shuffle_mu == math.inf
    assert cmp_tiny.ratio == pytest.approx(SQRT2, abs=1e-12)
    assert not coeff_ratio(0.2).computed_in_log_space
    # log forms agree with the direct forms where both exist
    assert log_shuffle_coeff(0.7) == pytest.approx(math.log(shuffle_coeff(0.7)), rel=1e-13)
    assert log_poisson_coeff(0.7) == pytest.approx(math.log(poisson_coeff(0.7)), rel=1e-13)


def test_coefficients_decreasing_and_diverging():
    # compared in log space: both coefficients blow up as sigma -> 0
    for small, large in [(0.1, 0.2), (0.2, 0.3)]:
        assert log_shuffle_coeff(small) > log_shuffle_coeff(large)
        assert log_poisson_coeff(small) > log_poisson_coeff(large)
    assert log_shuffle_coeff(0.1) > 40.0


def test_ratio_monotone_where_doubles_resolve_it():
    # below sigma ~ 0.17 the ratio saturates at sqrt(2) in double
    # precision, so strict decrease is only representable from ~0.2 up
    grid = np.geomspace(0.2, 50.0, 200)
    ratios = np.array([coeff_ratio(float(s)).ratio for s in grid])
    assert np.all(np.diff(ratios) < 0.0)
    assert ratios.min() > 1.0
    assert ratios.max() < SQRT2


def test_ratio_saturation_zone_never_exceeds_sqrt2():
    grid = np.geomspace(0.05, 50.0, 200)
    ratios = np.array([coeff_ratio(float(s)).ratio for s in grid])
    assert np.all(ratios <= SQRT2)
    # ties at sqrt(2) may jitter by one ulp, never more
    assert np.diff(ratios).max() <= 2.3e-16


def test_midpoint_sigma():
    mid = midpoint_sigma()
    assert 1.65 <= mid <= 1.69
    assert coeff_ratio(mid).ratio == pytest.approx((1.0 + SQRT2) / 2.0, abs=1e-6)


def test_asymptotic_epoch_gdp():
    diagonal = asymptotic_epoch_gdp(1.0, 0.0)
    assert diagonal(0.3) == pytest.approx(0.7, abs=1e-12)
    unit = asymptotic_epoch_gdp(1.0, 1.0)
    assert unit(0.5) == pytest.approx(0.094957180830386751, rel=1e-12)
    assert epoch_separation(1.0, 0.1) == pytest.approx(0.036951444649829777, rel=1e-10)
    with pytest.raises(DomainError):
        asymptotic_epoch_gdp(1.0, -0.5)


def test_separation_scaling_values():
    assert separation_scaling(0.01, 1, "concrete_linear") == pytest.approx(
        0.01 / SQRT2, rel=1e-12
    )
    assert separation_scaling(0.001, 100, "asymptotic_sqrt") == pytest.approx(
        0.0028209361638332014, rel=1e-12
    )
    with pytest.raises(DomainError):
        separation_scaling(0.01, 1, "subquadratic")


def test_separation_scaling_sqrt_growth():
    mu, epochs = 1e-3, 100
    small = separation_scaling(mu, epochs, "asymptotic_sqrt")
    big = separation_scaling(mu, 4 * epochs, "asymptotic_sqrt")
    assert 1.99 <= big / small <= 2.01


def test_concrete_linear_equals_composed_shift():
    assert separation_scaling(0.01, 50, "concrete_linear") == pytest.approx(
        compose_f0_delta(0.01, 50) / SQRT2, rel=1e-14
    )


def test_asymptotic_dominates_saturated_concrete_bound():
    # E = c^2 M with c = 0.1 at M = 1e6: the composed concrete shift is
    # essentially 1 while the limit curve keeps a small separation
    sigma, m, epochs = 1.0, 10**6, 10**4
    delta = delta_bound(sigma, m).total
    shift = compose_f0_delta(delta, epochs)
    assert shift > 0.999999
    limit = asymptotic_epoch_gdp(sigma, 0.1)
    for a in np.linspace(0.0, 1.0, 101):
        concrete_floor = max((1.0 - delta) ** epochs - a, 0.0)
        assert limit(float(a)) >= concrete_floor - 1e-12
    assert epoch_separation(sigma, 0.1) == pytest.approx(0.03695, abs=2e-5)


def test_upper_correction():
    assert upper_correction(1.0, 10**6 + 1) == pytest.approx(
        8.9396762888542220e-07, rel=1e-13
    )
    with pytest.raises(DomainError):
        upper_correction(1.0, 1)
