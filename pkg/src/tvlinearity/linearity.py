"""Linearity tests against a smooth time-varying mean (M) or variance (V).

Methods:
    ma   asymptotic F test of the trend terms in the mean regression
    mwb  wild bootstrap of ma
    va   asymptotic F test of the variance regression on squared AR residuals
    vb   residual (resampling) bootstrap of va
    vwb  wild bootstrap of va
    tr2  n R^2 form of va with a chi-square(3) reference
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from .dgp import TimeSeries
from .olscore import (
    DesignMatrix,
    InsufficientDataError,
    SingularDesignError,
    build_mean_design,
    build_variance_design,
    f_statistic,
    ols_fit,
    ssr_fixed_design,
    ssr_stacked,
    stacked_trend_designs,
)


logger = logging.getLogger(__name__)

MIN_TEST_LENGTH = 10
MIN_BOOTSTRAP_ITERATIONS = 99
DEFAULT_BOOTSTRAP_ITERATIONS = 1000
# attempts per bootstrap test are capped at this multiple of M
ATTEMPT_CAP_FACTOR = 10

SeedLike = int | np.random.SeedSequence | None


class BootstrapExhaustedError(RuntimeError):
    """Too many degenerate bootstrap draws."""

    pass


class TestMethod(StrEnum):
    __test__ = False

    MA = "ma"
    MWB = "mwb"
    VA = "va"
    VB = "vb"
    VWB = "vwb"
    TR2 = "tr2"

    @property
    def is_bootstrap(self) -> bool:
        """True for the resampling methods mwb, vb and vwb."""
        return self in (TestMethod.MWB, TestMethod.VB, TestMethod.VWB)

    @property
    def display_name(self) -> str:
        """Column heading used in rendered tables."""
        return {
            TestMethod.MA: "M_a",
            TestMethod.MWB: "M_wb",
            TestMethod.VA: "V_a",
            TestMethod.VB: "V_b",
            TestMethod.VWB: "V_wb",
            TestMethod.TR2: "TR2",
        }[self]


class Multiplier(StrEnum):
    STANDARD_NORMAL = "standard_normal"
    RADEMACHER = "rademacher"


class BootstrapScheme(StrEnum):
    """Fixed design keeps the observed lags as regressors; recursive rebuilds them from y*."""

    FIXED = "fixed"
    RECURSIVE = "recursive"


class VarianceLag(StrEnum):
    """Lag regressor of the bootstrap variance regression in vb and vwb.

    BOOTSTRAP regresses h*_t on h*_{t-1}; OBSERVED keeps the observed u2_{t-1}
    (and its trend interaction) as a fixed design.
    """

    BOOTSTRAP = "bootstrap"
    OBSERVED = "observed"


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap settings shared by mwb, vb and vwb."""

    iterations: int = DEFAULT_BOOTSTRAP_ITERATIONS
    multiplier: Multiplier = Multiplier.STANDARD_NORMAL
    seed: SeedLike = None
    scheme: BootstrapScheme = BootstrapScheme.FIXED
    variance_lag: VarianceLag = VarianceLag.BOOTSTRAP

    def __post_init__(self) -> None:
        if self.iterations < MIN_BOOTSTRAP_ITERATIONS:
            raise ValueError(
                f"bootstrap needs at least {MIN_BOOTSTRAP_ITERATIONS} iterations, got {self.iterations}"
            )
        object.__setattr__(self, "multiplier", Multiplier(self.multiplier))
        object.__setattr__(self, "scheme", BootstrapScheme(self.scheme))
        object.__setattr__(self, "variance_lag", VarianceLag(self.variance_lag))

    def with_seed(self, seed: SeedLike) -> "BootstrapConfig":
        """Copy of these settings drawing from another seed."""
        return replace(self, seed=seed)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready settings; the seed is owned by the caller and left out."""
        return {
            "iterations": self.iterations,
            "multiplier": self.multiplier.value,
            "scheme": self.scheme.value,
            "variance_lag": self.variance_lag.value,
        }


@dataclass(frozen=True)
class TestOutcome:
    """Statistic, p-value and reference distribution of one test run."""

    __test__ = False

    statistic: float
    p_value: float
    method: TestMethod
    df: tuple[int, ...] | None = None
    bootstrap_iterations: int | None = None

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready outcome."""
        return {
            "method": self.method.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "df": list(self.df) if self.df is not None else None,
            "bootstrap_iterations": self.bootstrap_iterations,
        }


def _series_values(y: TimeSeries | ArrayLike) -> NDArray[np.float64]:
    values = y.values if isinstance(y, TimeSeries) else y
    values = np.asarray(values, dtype=np.float64).ravel()
    if len(values) < MIN_TEST_LENGTH:
        raise InsufficientDataError(
            f"tests need at least {MIN_TEST_LENGTH} observations, got {len(values)}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    return values


def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _redraw_rng(base: np.random.SeedSequence, draw: int, attempt: int) -> np.random.Generator:
    """Stream for a replacement draw, keyed by (seed, draw index, attempt)."""
    seq = np.random.SeedSequence(base.entropy, spawn_key=(*base.spawn_key, draw, attempt))
    return np.random.default_rng(seq)


def _multipliers(rng: np.random.Generator, kind: Multiplier, shape: tuple[int, ...]) -> NDArray[np.float64]:
    if kind is Multiplier.RADEMACHER:
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    return rng.standard_normal(shape)


def bootstrap_p_value(statistic: float, draws: ArrayLike) -> float:
    """Share of bootstrap statistics strictly greater than the observed one."""
    draws = np.asarray(draws, dtype=np.float64)
    return float(np.count_nonzero(draws > statistic)) / len(draws)


def _run_bootstrap(
    statistic: float,
    cfg: BootstrapConfig,
    draw_batch: Callable[[np.random.Generator, int], tuple[NDArray[np.float64], NDArray[np.bool_]]],
    method: TestMethod,
) -> float:
    """Evaluate M bootstrap statistics, redrawing degenerate ones, and return the p-value.

    draw_batch(rng, m) returns m statistics and a mask of degenerate draws. The
    main block comes from one stream of the seed so row i always belongs to draw
    i; a degenerate draw i is replaced from the stream (seed, i, attempt).
    """
    M = cfg.iterations
    base = _seed_sequence(cfg.seed)
    draws, bad = draw_batch(np.random.default_rng(base), M)
    draws = np.array(draws, dtype=np.float64)
    attempts = M
    for i in np.flatnonzero(bad):
        attempt = 0
        ok = False
        while not ok:
            attempt += 1
            attempts += 1
            if attempts > ATTEMPT_CAP_FACTOR * M:
                raise BootstrapExhaustedError(
                    f"{method.value}: more than {ATTEMPT_CAP_FACTOR * M} bootstrap attempts"
                )
            value, bad_one = draw_batch(_redraw_rng(base, int(i), attempt), 1)
            ok = not bad_one[0]
            draws[i] = value[0]
        logger.debug("%s: draw %d redrawn after %d attempts", method.value, i, attempt)
    return bootstrap_p_value(statistic, draws)


# ---------------------------------------------------------------------------
# Mean tests
# ---------------------------------------------------------------------------

def _mean_statistic(values: NDArray[np.float64]) -> tuple[float, DesignMatrix, NDArray[np.float64], int]:
    X, target = build_mean_design(values)
    full = ols_fit(X, target)
    restricted = ols_fit(X.restrict(2), target)
    stat = f_statistic(restricted.ssr, full.ssr, 2, full.df_resid)
    return stat, X, target, full.df_resid


def mean_test_asymptotic(y: TimeSeries | ArrayLike) -> TestOutcome:
    """M_a: F test of phi2 = phi3 = 0 in y_t = phi0 + phi1 y_{t-1} + phi2 s_t + phi3 s_t y_{t-1} + e_t.

    The reference is F(2, n - 4) with n = T - 1 effective rows.
    """
    values = _series_values(y)
    stat, _, _, df_resid = _mean_statistic(values)
    return TestOutcome(
        statistic=stat,
        p_value=float(stats.f.sf(stat, 2, df_resid)),
        method=TestMethod.MA,
        df=(2, df_resid),
    )


def mean_test_wild_bootstrap(y: TimeSeries | ArrayLike, cfg: BootstrapConfig | None = None) -> TestOutcome:
    """M_wb: wild bootstrap of M_a around the fitted AR(1) null model.

    Bootstrap samples are y*_t = phi0 + phi1 y_{t-1} + eps_t e0_t. Under the
    fixed scheme y_{t-1} is the observed lag and only the target changes; under
    the recursive scheme y_{t-1} is the previous bootstrap value.
    """
    cfg = cfg or BootstrapConfig()
    values = _series_values(y)
    stat, X, target, df_resid = _mean_statistic(values)
    null_design = X.restrict(2)
    null_fit = ols_fit(null_design, target)
    fitted = target - null_fit.residuals
    e0 = null_fit.residuals
    n = len(target)

    if cfg.scheme is BootstrapScheme.FIXED:

        def draw_batch(rng: np.random.Generator, m: int):
            eps = _multipliers(rng, cfg.multiplier, (m, n))
            y_star = (fitted[None, :] + eps * e0[None, :]).T
            ssr1 = ssr_fixed_design(X, y_star)
            ssr0 = ssr_fixed_design(null_design, y_star)
            draws = f_statistic(ssr0, ssr1, 2, df_resid)
            bad = ~np.isfinite(draws) | ~(ssr1 > 0)
            return draws, bad

    else:
        phi0, phi1 = null_fit.coefficients

        def draw_batch(rng: np.random.Generator, m: int):
            eps = _multipliers(rng, cfg.multiplier, (m, n))
            shocks = eps * e0[None, :]
            series = np.empty((m, n + 1))
            series[:, 0] = values[0]
            for t in range(n):
                series[:, t + 1] = phi0 + phi1 * series[:, t] + shocks[:, t]
            designs, targets = stacked_trend_designs(series)
            ssr1, singular1 = ssr_stacked(designs, targets)
            ssr0, singular0 = ssr_stacked(designs[:, :, :2], targets)
            with np.errstate(invalid="ignore"):
                draws = f_statistic(ssr0, ssr1, 2, df_resid)
                bad = singular0 | singular1 | ~np.isfinite(draws) | ~(ssr1 > 0)
            return draws, bad

    p_value = _run_bootstrap(stat, cfg, draw_batch, TestMethod.MWB)
    return TestOutcome(
        statistic=stat,
        p_value=p_value,
        method=TestMethod.MWB,
        bootstrap_iterations=cfg.iterations,
    )


# ---------------------------------------------------------------------------
# Variance tests
# ---------------------------------------------------------------------------

def squared_ar_residuals(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Squared residuals of the AR(1)-with-constant mean fit."""
    n_obs = len(values)
    X = DesignMatrix(np.column_stack([np.ones(n_obs - 1), values[:-1]]), ("const", "y_lag"))
    fit = ols_fit(X, values[1:])
    return fit.residuals ** 2


@dataclass(frozen=True)
class _VarianceRegression:
    statistic: float
    ssr0: float
    ssr1: float
    rows: int
    df_resid: int


def _variance_regression(u2: NDArray[np.float64]) -> _VarianceRegression:
    X, target = build_variance_design(u2)
    full = ols_fit(X, target)
    ssr0 = full.tss  # intercept-only fit leaves the centered sum of squares
    stat = f_statistic(ssr0, full.ssr, 3, full.df_resid)
    return _VarianceRegression(stat, ssr0, full.ssr, X.rows, full.df_resid)


def variance_test_asymptotic(y: TimeSeries | ArrayLike) -> TestOutcome:
    """V_a: F test of rho1 = rho2 = rho3 = 0 in the squared-residual regression.

    The reference is F(3, n_v - 4), n_v = T - 2 rows.
    """
    u2 = squared_ar_residuals(_series_values(y))
    reg = _variance_regression(u2)
    return TestOutcome(
        statistic=reg.statistic,
        p_value=float(stats.f.sf(reg.statistic, 3, reg.df_resid)),
        method=TestMethod.VA,
        df=(3, reg.df_resid),
    )


def variance_test_tr2(y: TimeSeries | ArrayLike) -> TestOutcome:
    """n R^2 of the variance regression against chi-square(3)."""
    u2 = squared_ar_residuals(_series_values(y))
    reg = _variance_regression(u2)
    r_squared = 0.0 if reg.ssr0 == 0 else max(0.0, 1.0 - reg.ssr1 / reg.ssr0)
    stat = reg.rows * r_squared
    return TestOutcome(
        statistic=stat,
        p_value=float(stats.chi2.sf(stat, 3)),
        method=TestMethod.TR2,
        df=(3,),
    )


def _variance_bootstrap(
    y: TimeSeries | ArrayLike,
    cfg: BootstrapConfig,
    method: TestMethod,
    make_noise: Callable[[np.random.Generator, int, NDArray[np.float64]], NDArray[np.float64]],
) -> TestOutcome:
    u2 = squared_ar_residuals(_series_values(y))
    reg = _variance_regression(u2)
    n = len(u2)
    rho0 = float(u2.mean())
    v0 = u2 - rho0
    observed_design, _ = build_variance_design(u2)

    def draw_batch(rng: np.random.Generator, m: int):
        h_star = rho0 + make_noise(rng, m, v0)
        if cfg.variance_lag is VarianceLag.OBSERVED:
            targets = h_star[:, 1:]
            ssr1 = ssr_fixed_design(observed_design, targets.T)
            singular = np.zeros(m, dtype=bool)
        else:
            designs, targets = stacked_trend_designs(h_star)
            ssr1, singular = ssr_stacked(designs, targets)
        centered = targets - targets.mean(axis=1, keepdims=True)
        ssr0 = np.einsum("mn,mn->m", centered, centered)
        with np.errstate(invalid="ignore"):
            draws = f_statistic(ssr0, ssr1, 3, reg.df_resid)
            bad = singular | ~np.isfinite(draws) | ~(ssr1 > 0)
        return draws, bad

    p_value = _run_bootstrap(reg.statistic, cfg, draw_batch, method)
    logger.debug("%s: n=%d statistic=%.6g p=%.4f", method.value, n, reg.statistic, p_value)
    return TestOutcome(
        statistic=reg.statistic,
        p_value=p_value,
        method=method,
        bootstrap_iterations=cfg.iterations,
    )


def variance_test_bootstrap(y: TimeSeries | ArrayLike, cfg: BootstrapConfig | None = None) -> TestOutcome:
    """V_b: resample the intercept-only residuals with replacement, h*_t = rho0 + v*_t.

    The bootstrap series is regressed on its own lag and the trend terms.
    """

    def resample(rng: np.random.Generator, m: int, v0: NDArray[np.float64]):
        return v0[rng.integers(0, len(v0), size=(m, len(v0)))]

    return _variance_bootstrap(y, cfg or BootstrapConfig(), TestMethod.VB, resample)


def variance_test_wild_bootstrap(y: TimeSeries | ArrayLike, cfg: BootstrapConfig | None = None) -> TestOutcome:
    """V_wb: as V_b but with v~_t = v0_t eta_t."""
    cfg = cfg or BootstrapConfig()

    def wild(rng: np.random.Generator, m: int, v0: NDArray[np.float64]):
        return v0[None, :] * _multipliers(rng, cfg.multiplier, (m, len(v0)))

    return _variance_bootstrap(y, cfg, TestMethod.VWB, wild)


def run_test(
    method: TestMethod | str,
    y: TimeSeries | ArrayLike,
    cfg: BootstrapConfig | None = None,
) -> TestOutcome:
    """Dispatch by method name; cfg is ignored by the asymptotic methods."""
    method = TestMethod(method)
    match method:
        case TestMethod.MA:
            return mean_test_asymptotic(y)
        case TestMethod.MWB:
            return mean_test_wild_bootstrap(y, cfg)
        case TestMethod.VA:
            return variance_test_asymptotic(y)
        case TestMethod.VB:
            return variance_test_bootstrap(y, cfg)
        case TestMethod.VWB:
            return variance_test_wild_bootstrap(y, cfg)
        case TestMethod.TR2:
            return variance_test_tr2(y)


__all__ = [
    "BootstrapConfig",
    "BootstrapExhaustedError",
    "BootstrapScheme",
    "Multiplier",
    "SingularDesignError",
    "TestMethod",
    "TestOutcome",
    "VarianceLag",
    "bootstrap_p_value",
    "mean_test_asymptotic",
    "mean_test_wild_bootstrap",
    "run_test",
    "squared_ar_residuals",
    "variance_test_asymptotic",
    "variance_test_bootstrap",
    "variance_test_tr2",
    "variance_test_wild_bootstrap",
]
