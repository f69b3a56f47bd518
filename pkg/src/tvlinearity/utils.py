"""Shared helpers: series CSV I/O, environment configuration and logging setup."""

import io
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .dgp import TimeSeries


ENV_CACHE_DIR = "TVLINEARITY_CACHE_DIR"
ENV_LOG_LEVEL = "TVLINEARITY_LOG_LEVEL"
ENV_THREADS = "TVLINEARITY_THREADS"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int | None = None) -> None:
    """Send library logs to stderr; level falls back to $TVLINEARITY_LOG_LEVEL, then WARNING."""
    if level is None:
        level = os.environ.get(ENV_LOG_LEVEL, "WARNING")
    if isinstance(level, str):
        level = level.upper()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def cache_dir() -> Path:
    """Results cache directory, created on first use (default ~/.cache/tvlinearity)."""
    path = Path(os.environ.get(ENV_CACHE_DIR) or Path.home() / ".cache" / "tvlinearity")
    path.mkdir(parents=True, exist_ok=True)
    return path


def default_threads() -> int:
    """Worker count from $TVLINEARITY_THREADS, else 1."""
    value = os.environ.get(ENV_THREADS)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {value!r}") from None


def read_series_csv(source: str | Path | io.TextIOBase) -> NDArray[np.float64]:
    """Read a series from a one-column CSV or a `t,y` CSV (header optional).

    A column named `y` wins; otherwise the last column is used.
    """
    frame = pd.read_csv(source, header=None)
    first = frame.iloc[0].astype(str).str.strip().tolist()
    has_header = any(not _is_number(v) for v in first)
    if has_header:
        frame = frame.iloc[1:].reset_index(drop=True)
        frame.columns = first
    column = "y" if has_header and "y" in frame.columns else frame.columns[-1]
    values = pd.to_numeric(frame[column], errors="raise").to_numpy(dtype=np.float64)
    return values


def series_to_csv(series: TimeSeries, diagnostics: bool = False) -> str:
    """CSV with columns t,y (and h2 when diagnostics is set), t = 1..T."""
    frame = pd.DataFrame({"t": np.arange(1, len(series) + 1), "y": series.values})
    if diagnostics and series.latent_h2 is not None:
        frame["h2"] = series.latent_h2
    return frame.to_csv(index=False, float_format="%.17g")


def _is_number(value: str) -> bool:
    try:
        float(value)
    except ValueError:
        return False
    return True
