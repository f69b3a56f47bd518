"""Least squares core shared by every test: QR fits, SSRs and the auxiliary designs."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray


MIN_SERIES_LENGTH = 8
CONDITION_LIMIT = 1e12

MEAN_COLUMNS = ("const", "y_lag", "trend", "trend_x_y_lag")
VARIANCE_COLUMNS = ("const", "u2_lag", "trend", "trend_x_u2_lag")


class InsufficientDataError(ValueError):
    """Series too short for the auxiliary regression."""

    pass


class SingularDesignError(ArithmeticError):
    """Design matrix is rank deficient at working precision."""

    def __init__(self, message: str, condition: float = np.inf):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class DesignMatrix:
    """Regressor matrix with named columns; requires more rows than columns."""

    values: NDArray[np.float64]
    column_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"design must be 2-D, got shape {values.shape}")
        n, k = values.shape
        if n <= k:
            raise InsufficientDataError(f"design needs more rows than columns, got {n}x{k}")
        object.__setattr__(self, "values", values)
        if not self.column_names:
            object.__setattr__(self, "column_names", tuple(f"x{j}" for j in range(k)))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def restrict(self, columns: int) -> "DesignMatrix":
        """Design made of the first `columns` columns (the null model)."""
        return DesignMatrix(self.values[:, :columns], self.column_names[:columns])


@dataclass(frozen=True)
class RegressionFit:
    """Result of one OLS fit."""

    coefficients: NDArray[np.float64]
    residuals: NDArray[np.float64]
    ssr: float
    tss: float
    df_resid: int

    @property
    def sigma2_hat(self) -> float:
        """Residual variance SSR / (n - k)."""
        return self.ssr / self.df_resid

    @property
    def r_squared(self) -> float:
        """Centered coefficient of determination."""
        if self.tss == 0:
            return 0.0
        return 1.0 - self.ssr / self.tss


def _scaled_condition(R: NDArray[np.float64], norms: NDArray[np.float64]) -> NDArray[np.float64]:
    """Condition number of R after scaling every design column to unit length.

    Works on a single (k, k) factor or a stack (..., k, k).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = R / norms[..., None, :]
        sv = np.linalg.svd(scaled, compute_uv=False)
        cond = sv[..., 0] / sv[..., -1]
    zero_column = np.any(norms == 0, axis=-1)
    return np.where(zero_column | ~np.isfinite(cond), np.inf, cond)


def ols_fit(X: DesignMatrix, y: ArrayLike) -> RegressionFit:
    """Fit y on X by Householder QR (never the normal equations).

    Raises:
        SingularDesignError: If the column-scaled condition estimate exceeds 1e12.
    """
    target = np.asarray(y, dtype=np.float64)
    if target.shape != (X.rows,):
        raise ValueError(f"target length {target.shape} does not match {X.rows} design rows")

    Q, R = scipy.linalg.qr(X.values, mode="economic")
    norms = np.linalg.norm(X.values, axis=0)
    cond = float(_scaled_condition(R, norms))
    if cond > CONDITION_LIMIT:
        raise SingularDesignError(
            f"design with columns {X.column_names} is singular (condition {cond:.3g})", cond
        )

    coefficients = scipy.linalg.solve_triangular(R, Q.T @ target)
    residuals = target - X.values @ coefficients
    centered = target - target.mean()
    return RegressionFit(
        coefficients=coefficients,
        residuals=residuals,
        ssr=float(residuals @ residuals),
        tss=float(centered @ centered),
        df_resid=X.rows - X.cols,
    )


def ssr_fixed_design(X: DesignMatrix, Y: ArrayLike) -> NDArray[np.float64]:
    """SSR of every column of Y regressed on the same design X.

    Args:
        X: Design shared by all targets.
        Y: Targets, shape (rows, m).

    Returns:
        Array of m sums of squared residuals.
    """
    targets = np.asarray(Y, dtype=np.float64)
    Q, R = scipy.linalg.qr(X.values, mode="economic")
    cond = float(_scaled_condition(R, np.linalg.norm(X.values, axis=0)))
    if cond > CONDITION_LIMIT:
        raise SingularDesignError(
            f"design with columns {X.column_names} is singular (condition {cond:.3g})", cond
        )
    resid = targets - Q @ (Q.T @ targets)
    return np.einsum("ij,ij->j", resid, resid)


def ssr_stacked(X: ArrayLike, Y: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """SSRs for a stack of independent regressions.

    Args:
        X: Designs, shape (m, rows, k).
        Y: Targets, shape (m, rows).

    Returns:
        (ssr, singular): ssr has shape (m,) and is NaN where singular is True.
    """
    designs = np.asarray(X, dtype=np.float64)
    targets = np.asarray(Y, dtype=np.float64)
    Q, R = np.linalg.qr(designs, mode="reduced")
    cond = _scaled_condition(R, np.linalg.norm(designs, axis=1))
    singular = cond > CONDITION_LIMIT
    proj = np.einsum("mnk,mn->mk", Q, targets)
    resid = targets - np.einsum("mnk,mk->mn", Q, proj)
    ssr = np.einsum("mn,mn->m", resid, resid)
    return np.where(singular, np.nan, ssr), singular


def f_statistic(ssr_restricted: ArrayLike, ssr_unrestricted: ArrayLike, q: int, df_resid: int):
    """((SSR0 - SSR1) / q) / (SSR1 / df_resid), elementwise for arrays."""
    ssr0 = np.asarray(ssr_restricted, dtype=np.float64)
    ssr1 = np.asarray(ssr_unrestricted, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = ((ssr0 - ssr1) / q) / (ssr1 / df_resid)
    # SSR0 >= SSR1 holds exactly; clip rounding noise below zero
    stat = np.maximum(stat, 0.0)
    return float(stat) if stat.ndim == 0 else stat


def _trend_design(lagged: NDArray[np.float64], n_series: int, rescale_time: bool) -> NDArray[np.float64]:
    t = np.arange(2, n_series + 1, dtype=np.float64)
    s = t / n_series if rescale_time else t
    return np.column_stack([np.ones_like(s), lagged, s, s * lagged])


def build_mean_design(y: ArrayLike, rescale_time: bool = True) -> tuple[DesignMatrix, NDArray[np.float64]]:
    """Taylor auxiliary design for the mean: y_t on [1, y_{t-1}, s_t, s_t y_{t-1}].

    Rows are t = 2..T (one observation lost to the lag) and s_t = t / T.
    With rescale_time=False the raw index t is used instead.

    Raises:
        InsufficientDataError: If the series has fewer than 8 observations.
    """
    values = np.asarray(y, dtype=np.float64).ravel()
    if len(values) < MIN_SERIES_LENGTH:
        raise InsufficientDataError(
            f"mean design needs at least {MIN_SERIES_LENGTH} observations, got {len(values)}"
        )
    design = _trend_design(values[:-1], len(values), rescale_time)
    return DesignMatrix(design, MEAN_COLUMNS), values[1:].copy()


def build_variance_design(u2: ArrayLike, rescale_time: bool = True) -> tuple[DesignMatrix, NDArray[np.float64]]:
    """Taylor auxiliary design for the variance: u2_t on [1, u2_{t-1}, s_t, s_t u2_{t-1}].

    Raises:
        InsufficientDataError: If fewer than 8 squared residuals are given.
        ValueError: If any value is negative.
    """
    values = np.asarray(u2, dtype=np.float64).ravel()
    if len(values) < MIN_SERIES_LENGTH:
        raise InsufficientDataError(
            f"variance design needs at least {MIN_SERIES_LENGTH} observations, got {len(values)}"
        )
    if np.any(values < 0):
        raise ValueError("squared residual series contains negative values")
    design = _trend_design(values[:-1], len(values), rescale_time)
    return DesignMatrix(design, VARIANCE_COLUMNS), values[1:].copy()


def stacked_trend_designs(series: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized build of the trend design for a stack of series, shape (m, n).

    Same layout as build_mean_design/build_variance_design, without their
    validation; returns designs (m, n-1, 4) and targets (m, n-1).
    """
    m, n = series.shape
    lagged = series[:, :-1]
    s = np.arange(2, n + 1, dtype=np.float64) / n
    s = np.broadcast_to(s, lagged.shape)
    designs = np.stack([np.ones_like(lagged), lagged, s, s * lagged], axis=-1)
    return designs, series[:, 1:]
