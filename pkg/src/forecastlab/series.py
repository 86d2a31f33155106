"""Series container, train/val/test splitting, scaling, and error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Targets with magnitude below this are excluded from percentage errors.
MAPE_EXCLUSION_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Series:
    """Uniformly spaced univariate series with explicit missing slots.

    Missing observations are stored as ``None``. Float NaNs are normalized
    to ``None`` at construction so a value is never ambiguous about its
    repair status; infinities are rejected outright.
    """

    values: tuple[float | None, ...]
    start_index: int = 0
    step: float = 1.0

    def __post_init__(self) -> None:
        norm: list[float | None] = []
        for v in self.values:
            if v is None:
                norm.append(None)
                continue
            f = float(v)
            if math.isnan(f):
                norm.append(None)
            elif not math.isfinite(f):
                raise ValueError("series values must be finite or missing")
            else:
                norm.append(f)
        if not norm:
            raise ValueError("series must contain at least one observation")
        if self.step <= 0:
            raise ValueError("step must be positive")
        object.__setattr__(self, "values", tuple(norm))

    def __len__(self) -> int:
        return len(self.values)

    def missing_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v is None)

    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)

    def observed_values(self) -> np.ndarray:
        return np.asarray([v for v in self.values if v is not None], dtype=float)

    def dense(self) -> np.ndarray:
        """Return values as a float array; raises if any slot is missing."""
        if not self.is_complete():
            raise ValueError("series contains missing values")
        return np.asarray(self.values, dtype=float)

    def window(self, start: int, stop: int) -> "Series":
        """Contiguous sub-series over positions [start, stop)."""
        if not (0 <= start < stop <= len(self.values)):
            raise ValueError(f"invalid window [{start}, {stop}) for length {len(self.values)}")
        return Series(self.values[start:stop], self.start_index + start, self.step)

    def with_values(self, values: Iterable[float | None]) -> "Series":
        return Series(tuple(values), self.start_index, self.step)


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous train/validation/test lengths, in temporal order."""

    train_len: int
    val_len: int
    test_horizon: int

    def __post_init__(self) -> None:
        if self.train_len < 1 or self.val_len < 1 or self.test_horizon < 1:
            raise ValueError("split lengths must be at least 1")

    @property
    def input_len(self) -> int:
        return self.train_len + self.val_len

    @property
    def total_len(self) -> int:
        return self.train_len + self.val_len + self.test_horizon


def default_split_spec(input_len: int, horizon: int) -> SplitSpec:
    """Split an input window: validation takes min(horizon, input_len // 4).

    Args:
        input_len: length of the modeling window (train plus validation).
        horizon: forecast horizon; also the test segment length.
    """
    if input_len < 4:
        raise ValueError("input window must hold at least 4 points")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    val_len = min(horizon, input_len // 4)
    return SplitSpec(input_len - val_len, val_len, horizon)


def split(series: Series, spec: SplitSpec) -> tuple[Series, Series, Series]:
    """Cut a series into contiguous train, validation, and test segments.

    Train and validation must be fully observed (repair happens upstream);
    the test segment is allowed to carry gaps and is validated at scoring.
    """
    if len(series) < spec.total_len:
        raise ValueError(
            f"series of length {len(series)} cannot satisfy split {spec.train_len}"
            f"+{spec.val_len}+{spec.test_horizon}"
        )
    train = series.window(0, spec.train_len)
    val = series.window(spec.train_len, spec.input_len)
    test = series.window(spec.input_len, spec.total_len)
    for name, part in (("train", train), ("validation", val)):
        if not part.is_complete():
            raise ValueError(f"{name} segment contains missing values")
    return train, val, test


@dataclass(frozen=True)
class MetricsPair:
    """Absolute and percentage error for one forecast."""

    mae: float
    mape: float


def mae(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute error over aligned sequences of equal length."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise ValueError("actual and predicted must be 1-d and equal length")
    if a.size == 0:
        raise ValueError("metrics need at least one point")
    if not (np.isfinite(a).all() and np.isfinite(p).all()):
        raise ValueError("metrics inputs must be finite")
    return float(np.mean(np.abs(a - p)))


def mape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute percentage error, in percent.

    Terms whose target magnitude falls below 1e-8 are excluded from the
    mean. If every term is excluded the metric has no value and a
    ValueError("MAPE undefined") is raised.
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise ValueError("actual and predicted must be 1-d and equal length")
    if a.size == 0:
        raise ValueError("metrics need at least one point")
    if not (np.isfinite(a).all() and np.isfinite(p).all()):
        raise ValueError("metrics inputs must be finite")
    keep = np.abs(a) >= MAPE_EXCLUSION_THRESHOLD
    if not keep.any():
        raise ValueError("MAPE undefined: every target is below the magnitude threshold")
    return float(100.0 * np.mean(np.abs((a[keep] - p[keep]) / a[keep])))


def metrics_pair(actual: Sequence[float], predicted: Sequence[float]) -> MetricsPair:
    return MetricsPair(mae=mae(actual, predicted), mape=mape(actual, predicted))


@dataclass(frozen=True)
class ZScoreScaler:
    """Affine standardization fitted on a training segment only.

    A degenerate training segment (zero spread) keeps scale 1 so the
    transform stays invertible.
    """

    loc: float
    scale: float

    @staticmethod
    def fit(train: Sequence[float]) -> "ZScoreScaler":
        x = np.asarray(train, dtype=float)
        if x.size == 0:
            raise ValueError("cannot fit scaler on empty data")
        std = float(np.std(x))
        return ZScoreScaler(loc=float(np.mean(x)), scale=std if std > 0.0 else 1.0)

    def transform(self, x: Sequence[float]) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.loc) / self.scale

    def inverse(self, x: Sequence[float]) -> np.ndarray:
        return np.asarray(x, dtype=float) * self.scale + self.loc


IDENTITY_SCALER = ZScoreScaler(loc=0.0, scale=1.0)
