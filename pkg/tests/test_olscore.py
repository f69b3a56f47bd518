"""Tests for the least squares core and the auxiliary designs."""

import numpy as np
import pytest

from tvlinearity.olscore import (
    MEAN_COLUMNS,
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


def _lstsq_ssr(X: np.ndarray, y: np.ndarray) -> float:
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    resid = y - X @ beta
    return float(resid @ resid)


class TestDesignMatrix:
    """Test design validation."""

    def test_needs_more_rows_than_columns(self):
        """Test that a square design is refused."""
        with pytest.raises(InsufficientDataError):
            DesignMatrix(np.ones((4, 4)))

    def test_needs_two_dimensions(self):
        """Test that a vector is not accepted as a design."""
        with pytest.raises(ValueError):
            DesignMatrix(np.ones(5))

    def test_default_column_names(self):
        """Test generated column names and the shape accessors."""
        X = DesignMatrix(np.ones((5, 2)))
        assert X.column_names == ("x0", "x1")
        assert (X.rows, X.cols) == (5, 2)

    def test_restrict(self):
        """Test that restrict keeps the leading columns."""
        X = DesignMatrix(np.arange(20.0).reshape(5, 4), MEAN_COLUMNS)
        null = X.restrict(2)
        assert null.column_names == ("const", "y_lag")
        np.testing.assert_array_equal(null.values, X.values[:, :2])


class TestOlsFit:
    """Test single-target QR regression."""

    def test_intercept_only(self):
        """Test an intercept-only fit against the sample mean."""
        fit = ols_fit(DesignMatrix(np.ones((3, 1))), [1.0, 2.0, 3.0])
        assert fit.coefficients[0] == pytest.approx(2.0)
        assert fit.ssr == pytest.approx(2.0)
        assert fit.tss == pytest.approx(2.0)
        assert fit.df_resid == 2
        assert fit.sigma2_hat == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(0.0, abs=1e-15)

    def test_exact_fit(self):
        """Test that a noiseless linear target is fitted exactly."""
        x = np.arange(10.0)
        fit = ols_fit(DesignMatrix(np.column_stack([np.ones(10), x])), 2.0 + 3.0 * x)
        np.testing.assert_allclose(fit.coefficients, [2.0, 3.0], rtol=1e-12)
        assert fit.ssr < 1e-20
        assert fit.r_squared == pytest.approx(1.0)

    def test_matches_lstsq(self):
        """Test the QR fit against numpy lstsq."""
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 4))
        y = rng.standard_normal(50)
        fit = ols_fit(DesignMatrix(X), y)
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        np.testing.assert_allclose(fit.coefficients, beta, rtol=1e-10)
        assert fit.ssr == pytest.approx(_lstsq_ssr(X, y), rel=1e-10)
        np.testing.assert_allclose(fit.residuals, y - X @ beta, atol=1e-12)

    def test_one_residual_degree_of_freedom(self):
        """Test a fit with a single residual degree of freedom."""
        rng = np.random.default_rng(1)
        fit = ols_fit(DesignMatrix(rng.standard_normal((5, 4))), rng.standard_normal(5))
        assert fit.df_resid == 1

    def test_target_length_mismatch(self):
        """Test that a target of the wrong length is refused."""
        with pytest.raises(ValueError, match="target length"):
            ols_fit(DesignMatrix(np.ones((5, 1))), np.ones(4))

    def test_duplicate_column_is_singular(self):
        """Test that a repeated column raises SingularDesignError."""
        x = np.arange(10.0)
        with pytest.raises(SingularDesignError) as exc:
            ols_fit(DesignMatrix(np.column_stack([np.ones(10), x, x])), x)
        assert exc.value.condition > 1e12

    def test_zero_column_is_singular(self):
        """Test that a zero column has infinite condition."""
        X = np.column_stack([np.ones(10), np.zeros(10)])
        with pytest.raises(SingularDesignError) as exc:
            ols_fit(DesignMatrix(X), np.arange(10.0))
        assert exc.value.condition == np.inf

    def test_badly_scaled_columns_are_not_singular(self):
        """Test that column scaling alone does not make a design singular."""
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(30), 1e6 * rng.standard_normal(30), 1e-6 * rng.standard_normal(30)])
        y = rng.standard_normal(30)
        assert ols_fit(DesignMatrix(X), y).ssr == pytest.approx(_lstsq_ssr(X, y), rel=1e-8)


class TestBatchedSsr:
    """Test SSRs for many targets and stacks of designs."""

    def test_fixed_design_matches_single_fits(self):
        """Test the multi-target SSRs against one fit per target."""
        rng = np.random.default_rng(3)
        X = DesignMatrix(rng.standard_normal((40, 3)))
        Y = rng.standard_normal((40, 6))
        ssr = ssr_fixed_design(X, Y)
        assert ssr.shape == (6,)
        for j in range(6):
            assert ssr[j] == pytest.approx(ols_fit(X, Y[:, j]).ssr, rel=1e-10)

    def test_fixed_design_singular(self):
        """Test that a singular shared design raises."""
        X = DesignMatrix(np.column_stack([np.ones(10), np.ones(10)]))
        with pytest.raises(SingularDesignError):
            ssr_fixed_design(X, np.ones((10, 2)))

    def test_stacked_matches_single_fits(self):
        """Test the stacked SSRs against one lstsq fit per design."""
        rng = np.random.default_rng(4)
        X = rng.standard_normal((5, 30, 4))
        Y = rng.standard_normal((5, 30))
        ssr, singular = ssr_stacked(X, Y)
        assert not singular.any()
        for i in range(5):
            assert ssr[i] == pytest.approx(_lstsq_ssr(X[i], Y[i]), rel=1e-10)

    def test_stacked_flags_singular_members(self):
        """Test that singular members are flagged and get a NaN SSR."""
        rng = np.random.default_rng(5)
        X = rng.standard_normal((3, 20, 3))
        X[1, :, 2] = X[1, :, 1]
        ssr, singular = ssr_stacked(X, rng.standard_normal((3, 20)))
        assert singular.tolist() == [False, True, False]
        assert np.isnan(ssr[1])
        assert np.isfinite(ssr[[0, 2]]).all()


class TestFStatistic:
    """Test the F ratio."""

    def test_value(self):
        """Test the F ratio on known sums of squares."""
        assert f_statistic(10.0, 8.0, 2, 20) == pytest.approx(2.5)

    def test_rounding_below_zero_is_clipped(self):
        """Test that a negative ratio from rounding is clipped to zero."""
        assert f_statistic(1.0, 1.0 + 1e-15, 2, 10) == 0.0

    def test_elementwise(self):
        """Test the F ratio on arrays."""
        stat = f_statistic(np.array([10.0, 9.0]), np.array([8.0, 9.0]), 2, 20)
        np.testing.assert_allclose(stat, [2.5, 0.0])


class TestAuxiliaryDesigns:
    """Test the Taylor auxiliary designs."""

    def test_mean_design_layout(self):
        """Test the columns of the mean test design."""
        y = np.arange(1.0, 9.0) ** 2
        X, target = build_mean_design(y)
        assert (X.rows, X.cols) == (7, 4)
        assert X.column_names == MEAN_COLUMNS
        np.testing.assert_array_equal(target, y[1:])
        np.testing.assert_array_equal(X.values[:, 0], np.ones(7))
        np.testing.assert_array_equal(X.values[:, 1], y[:-1])
        np.testing.assert_allclose(X.values[:, 2], np.arange(2, 9) / 8)
        assert X.values[-1, 2] == 1.0
        np.testing.assert_allclose(X.values[:, 3], X.values[:, 2] * y[:-1])

    def test_raw_time_index(self):
        """Test the unscaled time column."""
        X, _ = build_mean_design(np.arange(10.0), rescale_time=False)
        np.testing.assert_array_equal(X.values[:, 2], np.arange(2, 11))

    def test_too_short(self):
        """Test that series under eight observations are refused."""
        with pytest.raises(InsufficientDataError):
            build_mean_design(np.arange(7.0))
        with pytest.raises(InsufficientDataError):
            build_variance_design(np.ones(7))

    def test_variance_design_rejects_negative(self):
        """Test that a negative squared residual is refused."""
        with pytest.raises(ValueError, match="negative"):
            build_variance_design(np.array([1.0, 0.5, -0.1, 2.0, 1.0, 0.3, 0.2, 0.9]))

    def test_constant_series_is_singular(self):
        """Test that a constant series gives a singular design."""
        X, target = build_mean_design(np.full(20, 3.0))
        with pytest.raises(SingularDesignError):
            ols_fit(X, target)

    def test_f_invariant_to_time_rescaling(self, ar_series):
        """Test that the F statistic does not depend on the time scale."""
        stats = []
        for rescale in (True, False):
            X, target = build_mean_design(ar_series.values, rescale_time=rescale)
            full = ols_fit(X, target)
            null = ols_fit(X.restrict(2), target)
            stats.append(f_statistic(null.ssr, full.ssr, 2, full.df_resid))
        assert stats[0] == pytest.approx(stats[1], rel=1e-8)

    def test_stacked_designs_match_builder(self):
        """Test that stacked trend designs match the single-series builder."""
        rng = np.random.default_rng(6)
        series = rng.standard_normal((3, 12))
        designs, targets = stacked_trend_designs(series)
        assert designs.shape == (3, 11, 4)
        for i in range(3):
            X, target = build_mean_design(series[i])
            np.testing.assert_allclose(designs[i], X.values, rtol=0, atol=1e-15)
            np.testing.assert_array_equal(targets[i], target)
