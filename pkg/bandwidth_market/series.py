# -*- coding: utf-8 -*-

"""Regularly spaced price observations and the price CSV format."""

import logging
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger("bandwidth_market.series")

TIME_COLUMN = "t"


class SeriesError(ValueError):
    pass


class PriceSeries(NamedTuple):
    """Observations Ŝ(1..L) spaced `dt` apart, labelled by their origin."""

    values: np.ndarray
    dt: float
    label: str = "series"

    def shift(self, offset: float) -> "PriceSeries":
        return self._replace(values=self.values + offset)


def price_series(values: Sequence[float], dt: float, label: str = "series") -> PriceSeries:
    """
    Build a validated `PriceSeries`.

    Raises:
        SeriesError if there are fewer than 2 values, any value is non-finite, or dt <= 0
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise SeriesError(f"{label}: values are not numeric") from e
    if arr.ndim != 1:
        raise SeriesError(f"{label}: expected a 1-d series, got shape {arr.shape}")
    if len(arr) < 2:
        raise SeriesError(f"{label}: need at least 2 observations, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise SeriesError(f"{label}: series contains non-finite values")
    if not (np.isfinite(dt) and dt > 0):
        raise SeriesError(f"{label}: time step must be positive, got {dt}")
    return PriceSeries(arr, float(dt), label)


def time_column(n_steps: int, dt: float) -> np.ndarray:
    """Observation times (k+1)·dt for steps k = 0..n_steps-1."""
    return np.round((np.arange(n_steps) + 1) * dt, 10)


def infer_dt(times: Sequence[float]) -> float:
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        raise SeriesError("need at least 2 time stamps to infer the time step")
    steps = np.diff(times)
    dt = float(np.median(steps))
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
        raise SeriesError("time stamps are not regularly spaced")
    return dt


def read_price_csv(path: str, dt: Optional[float] = None) -> List[PriceSeries]:
    """
    Read every price column of a CSV with a `t` column into a `PriceSeries`.
    The time step is inferred from `t` unless `dt` is given.
    """
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SeriesError(f"cannot read price CSV {path}: {e}") from e

    columns = [c for c in df.columns if c != TIME_COLUMN]
    if not columns:
        raise SeriesError(f"{path} has no price columns")

    if dt is None:
        if TIME_COLUMN not in df.columns:
            raise SeriesError(
                f"{path} has no {TIME_COLUMN!r} column; pass the time step explicitly"
            )
        dt = infer_dt(df[TIME_COLUMN].to_numpy())

    logger.info(f"Read {len(columns)} price columns of length {len(df)} from {path}")
    return [price_series(df[col].to_numpy(), dt, str(col)) for col in columns]
