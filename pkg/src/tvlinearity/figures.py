"""Transition-curve data for the smooth-transition figures (data only, no plotting)."""

from collections.abc import Sequence

import numpy as np
import pandas as pd

from .transition import EmptyInputError, TransitionParams, transition_series


# (T, gammas) of the two preset transition figures; c = T/2 in both
PRESET_FIGURES = ((200, (0.01, 0.1)), (1000, (0.01, 0.1)))


def figure_frame(T: int, gammas: Sequence[float], c: float | None = None) -> pd.DataFrame:
    """Transition values for t = 1..T, one column per gamma.

    Raises:
        EmptyInputError: If gammas is empty.
        ValueError: If T < 2.
    """
    if T < 2:
        raise ValueError(f"figure needs T >= 2, got {T}")
    if len(gammas) == 0:
        raise EmptyInputError("figure needs at least one gamma")
    c = T / 2 if c is None else c
    frame = pd.DataFrame({"t": np.arange(1, T + 1)})
    for gamma in gammas:
        frame[f"F_gamma_{gamma:g}"] = transition_series(T, TransitionParams(gamma, c), t_start=1)
    return frame


def emit_figure_data(T: int, gammas: Sequence[float], c: float | None = None) -> str:
    """CSV text with columns t, F_gamma_<g>, ...; c defaults to T/2."""
    return figure_frame(T, gammas, c).to_csv(index=False, float_format="%.10g")
