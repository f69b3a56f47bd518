"""tvlinearity - linearity tests for time-varying conditional mean and variance."""

__version__ = "0.1.0"
