"""Empirical oracle for the accountant's analytical bounds.

The adversary's optimal test reduces to thresholding the sample mean of
M unit-mean lognormals; under the alternative exactly one summand is
shifted. This module simulates that test end to end: empirical trade-off
curves with standard errors, empirical CDFs of the standardized sum, raw
moment z-scores, and an orchestrated validation summary that pits each
analytical bound against simulation.

Determinism: streams are counter-based Philox keyed by (seed, stream,
4096-replica block); a report is a pure function of its config. The
alternative's shifted summand is pinned to coordinate 0; the summands
are exchangeable under the null, so the uniformly random location in the
observation model carries no statistical information, and pinning it
saves one draw per replica.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import accountant
from .errors import DomainError, PreconditionError, RangeError
from .lognormal import (
    B_UPPER,
    MomentSet,
    be_error_bound,
    edgeworth_cdf,
    edgeworth_model,
    moments,
)
from .numerics import std_normal_cdf
from ._kernels import BLOCK_REPLICAS, active_backend, philox_stream, statistic_block

# stream ids keying the independent Philox families
_STREAM_NULL = 0
_STREAM_ALT = 1
_STREAM_CDF = 2
_STREAM_MOMENTS = 3

_DEFAULT_ALPHA_GRID = tuple(i / 10.0 for i in range(1, 10))
_MIN_REPLICAS_FOR_SE = 1000

HYPOTHESES = ("H0", "H1")


@dataclass(frozen=True)
class TestConfig:
    """One simulated hypothesis test: who, how many, and where to probe."""

    sigma: float
    M: int
    replicas: int
    seed: int
    grid: tuple = _DEFAULT_ALPHA_GRID

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if 1.0 / self.sigma**2 > 700.0:
            raise RangeError(f"sigma={self.sigma} too small for the statistic")
        if self.M < 2 or self.M != int(self.M):
            raise DomainError(f"M must be an integer >= 2, got {self.M}")
        if self.replicas < 1:
            raise DomainError(f"replicas must be >= 1, got {self.replicas}")
        grid = tuple(float(a) for a in self.grid)
        if len(grid) == 0 or any(not 0.0 <= a <= 1.0 for a in grid):
            raise DomainError("grid must be non-empty probabilities")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("grid must be strictly increasing (degenerate grid)")
        object.__setattr__(self, "grid", grid)


def sample_statistic(sigma: float, m: int, hypothesis: str,
                     rng: np.random.Generator) -> float:
    """One replica of the test statistic, drawn from ``rng``.

    Under H0 all M coordinates are standard normal; under H1 coordinate 0
    is shifted by 1/sigma. Returns the mean of exp(x/sigma - 1/(2 sigma^2)).
    """
    if hypothesis not in HYPOTHESES:
        raise DomainError(f"hypothesis must be one of {HYPOTHESES}, got {hypothesis!r}")
    x = rng.standard_normal(m)
    if hypothesis == "H1":
        x[0] += 1.0 / sigma
    return float(np.mean(np.exp(x / sigma - 1.0 / (2.0 * sigma**2))))


def _draw_statistics(sigma: float, m: int, replicas: int, seed: int,
                     stream_id: int, shifted: bool):
    """All replica statistics of one stream, reduced block by block."""
    inv_sigma = 1.0 / sigma
    offset = 0.5 * inv_sigma * inv_sigma
    first_shift = math.exp(inv_sigma * inv_sigma) if shifted else 1.0
    stats = np.empty(replicas)
    y_first = np.empty(replicas)
    for block, start in enumerate(range(0, replicas, BLOCK_REPLICAS)):
        count = min(BLOCK_REPLICAS, replicas - start)
        gen = philox_stream(seed, stream_id, block)
        s, y = statistic_block(gen, count, m, inv_sigma, offset, first_shift)
        stats[start:start + count] = s
        y_first[start:start + count] = y
    return stats, y_first


def _log_mean_exp(a: np.ndarray) -> np.ndarray:
    """Row-wise ln(mean(exp(a))), overflow-safe."""
    m = a.max(axis=1)
    return m + np.log(np.mean(np.exp(a - m[:, None]), axis=1))


def _isotonic_non_increasing(values: np.ndarray) -> np.ndarray:
    """Pool adjacent violators; equal weights, non-increasing output."""
    v = (-values).astype(float)
    level = list(v[:1])
    count = [1]
    for x in v[1:]:
        level.append(x)
        count.append(1)
        while len(level) > 1 and level[-2] > level[-1]:
            total = count[-2] + count[-1]
            merged = (level[-2] * count[-2] + level[-1] * count[-1]) / total
            level[-2:] = [merged]
            count[-2:] = [total]
    out = np.repeat(level, count)
    return -out


def _upper_quantile(sorted_stats: np.ndarray, a: float) -> float:
    """Threshold h with an empirical rejection rate P[stat > h] of about a."""
    r = sorted_stats.size
    k = min(r - 1, max(0, math.ceil((1.0 - a) * r) - 1))
    return float(sorted_stats[k])


@dataclass(frozen=True)
class EmpiricalTestReport:
    """Empirical trade-off points with standard errors and references.

    ``beta_hat`` is the isotonically cleaned curve the invariants apply
    to; ``beta_hat_raw`` keeps the untouched estimates. The reweighted
    estimator averages the first coordinate's lognormal value over null
    replicas below threshold; it is an independent unbiased route to the
    same quantity.
    """

    config: TestConfig
    alpha_grid: np.ndarray
    beta_hat: np.ndarray
    beta_hat_raw: np.ndarray
    beta_se: np.ndarray
    beta_hat_reweighted: np.ndarray
    beta_reweighted_se: np.ndarray
    lower_bound_reference: np.ndarray
    theorem_delta: float
    theorem_valid: bool

    def __post_init__(self):
        for name in ("alpha_grid", "beta_hat", "beta_hat_raw", "beta_se",
                     "beta_hat_reweighted", "beta_reweighted_se",
                     "lower_bound_reference"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def empirical_tradeoff(config: TestConfig) -> EmpiricalTestReport:
    """Simulate the optimal threshold test and report beta at each alpha.

    Draws ``replicas`` statistics per hypothesis; for each alpha the
    threshold is the empirical (1 - alpha)-quantile of the null sample
    and beta is the alternative mass below it.
    """
    if config.replicas < _MIN_REPLICAS_FOR_SE:
        raise PreconditionError(
            f"replicas must be >= {_MIN_REPLICAS_FOR_SE} to quote standard "
            f"errors, got {config.replicas}"
        )
    r = config.replicas
    null_stats, null_first = _draw_statistics(
        config.sigma, config.M, r, config.seed, _STREAM_NULL, shifted=False
    )
    alt_stats, _ = _draw_statistics(
        config.sigma, config.M, r, config.seed, _STREAM_ALT, shifted=True
    )
    null_sorted = np.sort(null_stats)
    alt_sorted = np.sort(alt_stats)

    alphas = np.asarray(config.grid, dtype=float)
    beta_raw = np.empty(alphas.size)
    beta_se = np.empty(alphas.size)
    beta_rw = np.empty(alphas.size)
    beta_rw_se = np.empty(alphas.size)
    for i, a in enumerate(alphas):
        h = _upper_quantile(null_sorted, a)
        beta_raw[i] = np.searchsorted(alt_sorted, h, side="left") / r
        beta_se[i] = math.sqrt(beta_raw[i] * (1.0 - beta_raw[i]) / r)
        terms = null_first * (null_stats < h)
        beta_rw[i] = terms.mean()
        beta_rw_se[i] = terms.std(ddof=1) / math.sqrt(r)

    try:
        bd = accountant.delta_bound(config.sigma, config.M)
        theorem_delta, theorem_valid = bd.total, bd.valid
    except (PreconditionError, RangeError):
        theorem_delta, theorem_valid = math.nan, False

    return EmpiricalTestReport(
        config=config,
        alpha_grid=alphas,
        beta_hat=_isotonic_non_increasing(beta_raw),
        beta_hat_raw=beta_raw,
        beta_se=beta_se,
        beta_hat_reweighted=beta_rw,
        beta_reweighted_se=beta_rw_se,
        lower_bound_reference=1.0 - alphas - theorem_delta,
        theorem_delta=theorem_delta,
        theorem_valid=theorem_valid,
    )


def empirical_cdf(sigma: float, n: int, replicas: int, x_grid,
                  seed: int) -> np.ndarray:
    """Empirical CDF of the standardized n-sample lognormal mean.

    Each replica is (mean(Y) - 1) sqrt(n / mu2); values are probed at
    ``x_grid``. Pointwise standard error is at most 1/(2 sqrt(replicas)).
    """
    if n < 2 or n != int(n):
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}")
    stats, _ = _draw_statistics(sigma, n, replicas, seed, _STREAM_CDF, shifted=False)
    scale = math.sqrt(n / moments(sigma).mu2)
    standardized = np.sort((stats - 1.0) * scale)
    x = np.asarray(x_grid, dtype=float)
    return np.searchsorted(standardized, x, side="right") / replicas


@dataclass(frozen=True)
class MomentCheck:
    """Sample moments vs closed forms, as z-scores against estimated SEs."""

    sigma: float
    samples: int
    closed: MomentSet
    estimates: dict
    standard_errors: dict
    zscores: dict

    @property
    def max_abs_z(self) -> float:
        return max(abs(z) for z in self.zscores.values())


def moment_zscores(sigma: float, samples: int, seed: int) -> MomentCheck:
    """Monte Carlo check of u, mu2, mu3, mu4 and rho3.

    Plain sampling cannot see the higher moments at small sigma: the mass
    of E[(Y-1)^4] sits around z = 4/sigma, which a feasible sample never
    reaches. Instead we importance-sample from a defensive mixture of
    normals shifted by k/sigma for k = 0..4, so every moment's dominant
    region is covered and the likelihood ratio stays bounded by the
    component count. The weighted estimates are unbiased and their
    relative standard errors stay of order 1/sqrt(samples) at every
    representable sigma; z-scores use the sample standard errors. The
    population mean is exactly 1, so central moments are plain weighted
    averages of (Y - 1)^k.
    """
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples}")
    closed = moments(sigma)
    if closed.mu4_overflowed:
        raise RangeError(
            f"mu4 not representable at sigma={sigma}; no z-score possible",
            log_value=closed.log_mu4,
        )
    inv_sigma = 1.0 / sigma
    offset = 0.5 * inv_sigma * inv_sigma
    tilts = np.arange(5.0) * inv_sigma

    gen = philox_stream(seed, _STREAM_MOMENTS, 0)
    log_dev = np.empty(samples)  # ln |Y - 1|
    dev_sign = np.empty(samples)
    log_weight = np.empty(samples)
    done = 0
    while done < samples:
        count = min(1 << 20, samples - done)
        component = gen.integers(0, tilts.size, size=count)
        w = gen.standard_normal(count) + tilts[component]
        # ln of phi(w) / [(1/K) sum_i phi(w - t_i)], bounded above by ln K
        shifted = w[:, None] - tilts[None, :]
        log_mix = _log_mean_exp(-0.5 * shifted * shifted)
        log_weight[done:done + count] = -0.5 * w * w - log_mix
        exponent = w * inv_sigma - offset
        dev_sign[done:done + count] = np.where(exponent >= 0.0, 1.0, -1.0)
        with np.errstate(divide="ignore", over="ignore"):
            log_dev[done:done + count] = np.where(
                exponent >= 0.0,
                # ln(e^t - 1), stable both for large and tiny positive t
                np.where(exponent > 30.0, exponent,
                         np.log(np.maximum(np.expm1(exponent), 1e-320))),
                np.log(-np.expm1(np.minimum(exponent, 0.0))),
            )
        done += count

    reference = {"u": closed.u, "mu2": closed.mu2, "mu3": closed.mu3,
                 "mu4": closed.mu4, "rho3": closed.rho3}
    estimates, ses, zs = {}, {}, {}
    root_n = math.sqrt(samples)
    weight = np.exp(log_weight)
    signed_dev_weight = np.exp(log_dev + log_weight) * dev_sign
    term_map = {
        "u": weight + signed_dev_weight,  # Y = 1 + dev
        "mu2": np.exp(2.0 * log_dev + log_weight),
        "mu3": np.exp(3.0 * log_dev + log_weight) * dev_sign,
        "mu4": np.exp(4.0 * log_dev + log_weight),
        "rho3": np.exp(3.0 * log_dev + log_weight),
    }
    for name, terms in term_map.items():
        if not np.all(np.isfinite(terms)):
            raise RangeError(
                f"moment terms overflow at sigma={sigma}; reduce the order "
                f"or increase sigma"
            )
        estimates[name] = float(terms.mean())
        ses[name] = float(terms.std(ddof=1)) / root_n
        zs[name] = (estimates[name] - reference[name]) / ses[name]
    return MomentCheck(
        sigma=sigma,
        samples=samples,
        closed=closed,
        estimates=estimates,
        standard_errors=ses,
        zscores=zs,
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "not_applicable"
    margin: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the four empirical checks at one parameter point."""

    sigma: float
    M: int
    replicas: int
    seed: int
    backend: str
    checks: tuple
    tradeoff_report: EmpiricalTestReport = field(repr=False, compare=False, default=None)

    @property
    def all_passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)


_CDF_GRID = np.linspace(-3.0, 3.0, 121)
_EDGEWORTH_HALF_WIDTH = 2.0
_MOMENT_SAMPLES = 1_000_000


def validate_all(sigma: float, m: int, replicas: int, seed: int,
                 b: float = B_UPPER) -> ValidationReport:
    """Run the four empirical checks against the analytical bounds.

    (i) the empirical trade-off dominates the certified floor 1 - a -
    delta wherever the bound is valid; (ii) the empirical CDF gap to the
    normal stays under the Berry-Esseen bound; (iii) the cubic-corrected
    CDF beats the plain normal on |x| <= 2; (iv) moment z-scores stay
    within 4.
    """
    if replicas < _MIN_REPLICAS_FOR_SE:
        raise PreconditionError(
            f"replicas must be >= {_MIN_REPLICAS_FOR_SE}, got {replicas}"
        )
    config = TestConfig(sigma=sigma, M=m, replicas=replicas, seed=seed)
    report = empirical_tradeoff(config)
    se3 = 3.0 * report.beta_se
    if report.theorem_valid:
        floor = report.lower_bound_reference - se3
        margin = float(np.min(report.beta_hat - floor))
        tradeoff_check = CheckResult(
            name="tradeoff_dominance",
            status="pass" if margin >= 0.0 else "fail",
            margin=margin,
            detail=f"min over alpha grid of beta_hat - (1 - a - delta - 3*SE), "
                   f"delta={report.theorem_delta:.6g}",
        )
    else:
        tradeoff_check = CheckResult(
            name="tradeoff_dominance",
            status="not_applicable",
            margin=math.nan,
            detail="not applicable: validity condition fails at these parameters",
        )

    fhat = empirical_cdf(sigma, m, replicas, _CDF_GRID, seed)
    plain_gap = np.abs(fhat - std_normal_cdf(_CDF_GRID))
    bound = be_error_bound(sigma, m, b, mode="exact")
    allowance = bound + 3.0 / (2.0 * math.sqrt(replicas))
    be_margin = float(allowance - plain_gap.max())
    be_check = CheckResult(
        name="be_bound_dominance",
        status="pass" if be_margin >= 0.0 else "fail",
        margin=be_margin,
        detail=f"max |F_hat - Phi| = {plain_gap.max():.6g} vs bound + 3*SE "
               f"= {allowance:.6g}",
    )

    inner = np.abs(_CDF_GRID) <= _EDGEWORTH_HALF_WIDTH
    model = edgeworth_model(sigma, m, kappa_n=_EDGEWORTH_HALF_WIDTH + 0.5)
    refined_gap = np.abs(fhat[inner] - edgeworth_cdf(model, _CDF_GRID[inner]))
    edge_margin = float(plain_gap[inner].max() - refined_gap.max())
    edge_check = CheckResult(
        name="edgeworth_improvement",
        status="pass" if edge_margin > 0.0 else "fail",
        margin=edge_margin,
        detail=f"max |F_hat - Phi(p_n)| = {refined_gap.max():.6g} vs "
               f"max |F_hat - Phi| = {plain_gap[inner].max():.6g} on |x| <= 2",
    )

    mc = moment_zscores(sigma, _MOMENT_SAMPLES, seed)
    z_margin = 4.0 - mc.max_abs_z
    moment_check = CheckResult(
        name="moment_zscores",
        status="pass" if z_margin >= 0.0 else "fail",
        margin=z_margin,
        detail="max |z| = {:.3g} over {}".format(
            mc.max_abs_z, ", ".join(f"{k}={v:+.2f}" for k, v in mc.zscores.items())
        ),
    )

    return ValidationReport(
        sigma=sigma,
        M=m,
        replicas=replicas,
        seed=seed,
        backend=active_backend(),
        checks=(tradeoff_check, be_check, edge_check, moment_check),
        tradeoff_report=report,
    )
