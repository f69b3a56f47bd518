"""Logistic smooth transition function of the time index."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray


class EmptyInputError(ValueError):
    """Raised when an operation receives an empty grid or parameter list."""

    pass


@dataclass(frozen=True)
class TransitionParams:
    """Smoothness and threshold of the logistic transition.

    gamma = 0 encodes the null hypothesis: the transition is identically zero.
    """

    gamma: float = 0.0
    c: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not np.isfinite(self.c) or self.c <= 0:
            raise ValueError(f"threshold c must be finite and > 0, got {self.c}")

    def to_dict(self) -> dict[str, float]:
        """JSON-ready parameters."""
        return {"gamma": self.gamma, "c": self.c}


def transition_value(t: ArrayLike, p: TransitionParams) -> float | NDArray[np.float64]:
    """Evaluate F(t) = 1 / (1 + exp(-gamma (t - c))) - 1/2.

    Uses the identity F = tanh(gamma (t - c) / 2) / 2, which never overflows,
    is exactly odd around the threshold and saturates at +-1/2.

    Args:
        t: Time index, scalar or array (real-valued, may be <= 0 in burn-in).
        p: Transition parameters.

    Returns:
        Value(s) in [-1/2, 1/2]; a float for scalar input.
    """
    arg = p.gamma * (np.asarray(t, dtype=np.float64) - p.c)
    value = 0.5 * np.tanh(0.5 * arg)
    if value.ndim == 0:
        return float(value)
    return value


def transition_series(T: int, p: TransitionParams, t_start: float = 1) -> NDArray[np.float64]:
    """Evaluate the transition over t = t_start, ..., t_start + T - 1.

    Raises:
        EmptyInputError: If T < 1.
    """
    if T < 1:
        raise EmptyInputError(f"transition series needs T >= 1, got {T}")
    grid = t_start + np.arange(T, dtype=np.float64)
    return np.asarray(transition_value(grid, p), dtype=np.float64)
