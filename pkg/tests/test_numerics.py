import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from shuffledp.errors import DomainError
from shuffledp.numerics import (
    exp_m1,
    log_std_normal_cdf,
    std_normal_cdf,
    std_normal_cdf_inv,
    std_normal_pdf,
)

mp.mp.dps = 40


def test_pdf_values():
    assert std_normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-16)
    # e^{-1/2}/sqrt(2 pi), high-precision reference
    assert std_normal_pdf(1.0) == pytest.approx(0.2419707245191433, abs=1e-16)
    assert std_normal_pdf(-1.0) == std_normal_pdf(1.0)


def test_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    # Phi(-(e-1)/2) region value used by the validity ceiling
    assert std_normal_cdf(-0.859141) == pytest.approx(0.19513136476911030, abs=2e-16)
    assert std_normal_cdf(38.0) == 1.0


def test_cdf_absolute_error_against_mpmath():
    xs = np.linspace(-38.0, 38.0, 229)
    worst = max(abs(std_normal_cdf(x) - float(mp.ncdf(mp.mpf(x)))) for x in xs)
    assert worst <= 1e-15


def test_cdf_symmetry_grid():
    xs = np.linspace(-8.0, 8.0, 10**4)
    defect = np.abs(std_normal_cdf(xs) + std_normal_cdf(-xs) - 1.0)
    assert defect.max() <= 1e-15


def test_cdf_monotone_no_inversions():
    xs = np.concatenate([
        np.linspace(-39.0, -35.0, 2001),  # spans the log-tail seam
        np.linspace(-8.0, 8.0, 2001),
        np.linspace(30.0, 40.0, 101),
    ])
    values = std_normal_cdf(np.sort(xs))
    assert np.all(np.diff(values) >= 0.0)


def test_cdf_inv_values():
    assert std_normal_cdf_inv(0.5) == 0.0
    assert std_normal_cdf_inv(0.975) == pytest.approx(1.9599639845400542, rel=1e-9)
    assert std_normal_cdf_inv(1e-10) == pytest.approx(-6.3613409024040562, rel=1e-9)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_cdf_inv_domain(bad):
    with pytest.raises(DomainError):
        std_normal_cdf_inv(bad)


def test_roundtrip_log_spaced():
    p = np.exp(np.linspace(np.log(1e-12), np.log(1 - 1e-12), 2000))
    err = np.abs(std_normal_cdf(std_normal_cdf_inv(p)) - p)
    assert err.max() <= 1e-12


def test_roundtrip_extreme_tails():
    for p in (1e-300, 1e-100, 1e-16, 0.5, 1 - 1e-16):
        assert abs(std_normal_cdf(std_normal_cdf_inv(p)) - p) <= 1e-12


def test_log_cdf_values():
    assert log_std_normal_cdf(0.0) == pytest.approx(np.log(0.5), rel=1e-15)
    assert log_std_normal_cdf(-10.0) == pytest.approx(-53.231285150512471, rel=1e-10)
    assert log_std_normal_cdf(5.0) == pytest.approx(-2.8665161296376359e-07, rel=1e-10)
    # deep tail continues past the direct-CDF underflow boundary
    assert log_std_normal_cdf(-50.0) == pytest.approx(-1254.8313611394199, rel=1e-10)


def test_log_cdf_relative_accuracy_against_mpmath():
    xs = np.linspace(-300.0, 8.0, 155)
    for x in xs:
        exact = float(mp.log(mp.ncdf(mp.mpf(x))))
        assert log_std_normal_cdf(x) == pytest.approx(exact, rel=1e-10)


def test_exp_of_log_cdf_consistency():
    xs = np.linspace(-38.0, 8.0, 4001)
    direct = std_normal_cdf(xs)
    via_log = np.exp(log_std_normal_cdf(xs))
    rel = np.abs(via_log - direct) / np.maximum(direct, 1e-308)
    assert rel.max() <= 1e-10


def test_exp_m1_values():
    assert exp_m1(0.0) == 0.0
    assert exp_m1(1e-12) == pytest.approx(1e-12, rel=1e-12)
    assert exp_m1(1e-12) != 0.0
    assert exp_m1(1.0) == pytest.approx(1.718281828459045, rel=1e-15)


@given(st.floats(min_value=-30.0, max_value=30.0))
def test_exp_m1_matches_direct_form_away_from_zero(t):
    # direct e^t - 1 is itself accurate once |t| is not tiny
    if abs(t) >= 0.5:
        assert exp_m1(t) == pytest.approx(np.exp(t) - 1.0, rel=1e-13)


@given(st.floats(min_value=-8.0, max_value=8.0))
def test_cdf_symmetry_property(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) <= 1e-15


def test_vectorized_paths_match_scalar():
    xs = np.array([-39.0, -10.0, 0.0, 3.0])
    vec = std_normal_cdf(xs)
    assert vec.shape == xs.shape
    for i, x in enumerate(xs):
        assert vec[i] == std_normal_cdf(float(x))
