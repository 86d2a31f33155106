"""Temporal structure profiling: rolling stats, decomposition, correlograms,
a unit-root stationarity test, and the aggregate profile consumed by model
selection and reporting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import Series

ADF_CRITICAL_VALUE_5PCT = -2.86
TREND_SLOPE_THRESHOLD = 0.1
DEFAULT_MAX_LAG = 40
FALLBACK_SMOOTHING_PERIOD = 12
MIN_STATIONARITY_LENGTH = 32


@dataclass(frozen=True)
class TrendInfo:
    label: str  # increasing | decreasing | stable
    strength: float


@dataclass(frozen=True)
class SeasonalityInfo:
    detected: bool
    period: int | None
    strength: float


@dataclass(frozen=True)
class StationarityInfo:
    is_stationary: bool
    statistic: float
    critical_value: float


@dataclass(frozen=True)
class DistributionInfo:
    skewness: float
    excess_kurtosis: float


@dataclass(frozen=True)
class TemporalProfile:
    """Aggregate description of a cleaned series' temporal structure."""

    trend: TrendInfo
    seasonality: SeasonalityInfo
    stationarity: StationarityInfo
    intermittency: float
    distribution: DistributionInfo

    def to_dict(self) -> dict:
        return {
            "trend": {"label": self.trend.label, "strength": self.trend.strength},
            "seasonality": {
                "detected": self.seasonality.detected,
                "period": self.seasonality.period,
                "strength": self.seasonality.strength,
            },
            "stationarity": {
                "is_stationary": self.stationarity.is_stationary,
                "statistic": self.stationarity.statistic,
                "critical_value": self.stationarity.critical_value,
            },
            "intermittency": self.intermittency,
            "distribution": {
                "skewness": self.distribution.skewness,
                "excess_kurtosis": self.distribution.excess_kurtosis,
            },
        }


@dataclass(frozen=True)
class Decomposition:
    """Additive components aligned with the input; trend and residual are
    NaN inside the centered-average margins where they are undefined."""

    observed: tuple[float, ...]
    trend: tuple[float, ...]
    seasonal: tuple[float, ...]
    residual: tuple[float, ...]
    period: int


@dataclass(frozen=True)
class CorrelogramData:
    acf: tuple[float, ...]
    pacf: tuple[float, ...]
    confidence_band: float

    def to_dict(self) -> dict:
        return {
            "acf": list(self.acf),
            "pacf": list(self.pacf),
            "confidence_band": self.confidence_band,
        }


def trend_label(x: np.ndarray) -> str:
    """Classify drift direction from the least-squares slope.

    The slope is normalized by n divided by the value range; magnitudes
    at or below 0.1 read as stable, as do degenerate inputs.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return "stable"
    rng = float(np.max(x) - np.min(x))
    if rng == 0.0:
        return "stable"
    t = np.arange(n, dtype=float)
    slope = float(np.polyfit(t, x, 1)[0])
    score = abs(slope) * n / rng
    if score <= TREND_SLOPE_THRESHOLD:
        return "stable"
    return "increasing" if slope > 0 else "decreasing"


def rolling_stats(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing mean and population std over each full window.

    Args:
        x: dense 1-d array.
        window: trailing window width, at least 2 and at most len(x).

    Returns:
        Two arrays of length ``len(x) - window + 1``; entry i describes
        the window ending at index ``window - 1 + i``.
    """
    x = np.asarray(x, dtype=float)
    if window < 2 or window > x.size:
        raise ValueError("window must satisfy 2 <= window <= len(x)")
    frames = np.lib.stride_tricks.sliding_window_view(x, window)
    return frames.mean(axis=1), frames.std(axis=1)


def _centered_trend(x: np.ndarray, period: int) -> np.ndarray:
    """Centered moving average; even periods use the 2xperiod weighted form."""
    n = x.size
    trend = np.full(n, np.nan)
    if period % 2 == 1:
        half = period // 2
        if n < period:
            return trend
        frames = np.lib.stride_tricks.sliding_window_view(x, period)
        trend[half:n - half] = frames.mean(axis=1)
    else:
        half = period // 2
        if n < period + 1:
            return trend
        weights = np.ones(period + 1)
        weights[0] = weights[-1] = 0.5
        weights /= period
        frames = np.lib.stride_tricks.sliding_window_view(x, period + 1)
        trend[half:n - half] = frames @ weights
    return trend


def decompose(x: np.ndarray, period: int) -> Decomposition:
    """Classical additive decomposition X = T + S + R.

    Trend is a centered moving average (weighted 2xperiod form for even
    periods), seasonal is the per-phase mean of the detrended interior
    re-centered to zero, and the residual closes the identity exactly at
    every index where the trend is defined.
    """
    x = np.asarray(x, dtype=float)
    if period < 2:
        raise ValueError("period must be at least 2")
    if x.size < 2 * period:
        raise ValueError("decomposition needs at least two full periods")
    trend = _centered_trend(x, period)
    interior = ~np.isnan(trend)
    detrended = x - trend

    phase_means = np.zeros(period)
    idx = np.arange(x.size)
    for phase in range(period):
        sel = interior & (idx % period == phase)
        phase_means[phase] = detrended[sel].mean() if sel.any() else 0.0
    phase_means -= phase_means.mean()
    seasonal = phase_means[idx % period]

    residual = np.where(interior, x - trend - seasonal, np.nan)
    return Decomposition(
        observed=tuple(x.tolist()),
        trend=tuple(trend.tolist()),
        seasonal=tuple(seasonal.tolist()),
        residual=tuple(residual.tolist()),
        period=period,
    )


def acf_pacf(x: np.ndarray, max_lag: int) -> CorrelogramData:
    """Autocorrelation (biased estimator) and partial autocorrelation.

    The PACF comes from the Durbin-Levinson recursion on the ACF. Both
    sequences have length max_lag + 1 with the lag-0 entry fixed at 1.
    The confidence band is 1.96 / sqrt(n).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if n <= max_lag:
        raise ValueError("series must be longer than max_lag")
    centered = x - x.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise ValueError("autocorrelation undefined for a constant series")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = float(np.dot(centered[:-k], centered[k:])) / denom

    pacf = np.zeros(max_lag + 1)
    pacf[0] = 1.0
    phi_prev = np.zeros(0)
    var_prev = 1.0
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = acf[1]
        else:
            num = acf[k] - float(np.dot(phi_prev, acf[k - 1:0:-1]))
            if abs(var_prev) < 1e-14:
                phi_kk = 0.0
            else:
                phi_kk = num / var_prev
        phi = np.empty(k)
        phi[k - 1] = phi_kk
        if k > 1:
            phi[: k - 1] = phi_prev - phi_kk * phi_prev[::-1]
        var_prev = var_prev * (1.0 - phi_kk * phi_kk)
        phi_prev = phi
        pacf[k] = phi_kk

    return CorrelogramData(
        acf=tuple(acf.tolist()),
        pacf=tuple(pacf.tolist()),
        confidence_band=float(1.96 / np.sqrt(n)),
    )


def adf_test(x: np.ndarray) -> StationarityInfo:
    """Augmented Dickey-Fuller test with a constant term.

    Regresses the first difference on the lagged level and
    floor((n - 1)^(1/3)) lagged differences; the series reads as
    stationary when the t-statistic of the level coefficient falls below
    the 5 percent critical value of -2.86.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < MIN_STATIONARITY_LENGTH:
        raise ValueError(f"stationarity test needs at least {MIN_STATIONARITY_LENGTH} points")
    if float(np.var(x)) == 0.0:
        raise ValueError("stationarity test undefined for a constant series")
    p = int(np.floor((n - 1) ** (1.0 / 3.0)))
    dx = np.diff(x)
    rows = np.arange(p + 1, n)  # indices t of x whose difference dx[t-1] is the response
    y = dx[rows - 1]
    cols = [np.ones(rows.size), x[rows - 1]]
    for i in range(1, p + 1):
        cols.append(dx[rows - 1 - i])
    design = np.column_stack(cols)
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise ValueError("stationarity regression is rank deficient")
    resid = y - design @ beta
    dof = rows.size - design.shape[1]
    if dof < 1:
        raise ValueError("stationarity test needs more observations than parameters")
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    se = float(np.sqrt(cov[1, 1]))
    if se == 0.0:
        raise ValueError("degenerate stationarity regression")
    stat = float(beta[1] / se)
    return StationarityInfo(
        is_stationary=stat < ADF_CRITICAL_VALUE_5PCT,
        statistic=stat,
        critical_value=ADF_CRITICAL_VALUE_5PCT,
    )


def _moments(x: np.ndarray) -> tuple[float, float]:
    """Population skewness and excess kurtosis; zeros when spread is zero."""
    m = x.mean()
    d = x - m
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        return 0.0, 0.0
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return m3 / m2**1.5, m4 / (m2 * m2) - 3.0


def seasonal_period(cor: CorrelogramData) -> int | None:
    """Dominant cycle length: the lag in [2, max_lag] with the largest
    autocorrelation among lags exceeding the confidence band; ties go to
    the smaller lag. None when no lag clears the band."""
    acf = np.asarray(cor.acf)
    lags = np.arange(2, acf.size)
    above = lags[acf[lags] > cor.confidence_band]
    if above.size == 0:
        return None
    best = above[np.argmax(acf[above])]
    return int(best)


def build_profile(series: Series, max_lag: int = DEFAULT_MAX_LAG) -> TemporalProfile:
    """Profile a cleaned series.

    Requires a dense series of at least 32 points with nonzero spread;
    component errors propagate. max_lag is capped at len(series) // 2 so a
    detected period always leaves two full cycles for decomposition.
    """
    x = series.dense()
    n = x.size
    lag_cap = min(max_lag, n // 2)
    cor = acf_pacf(x, lag_cap)
    period = seasonal_period(cor)
    detected = period is not None

    smoothing_period = period if detected else min(FALLBACK_SMOOTHING_PERIOD, n // 2)
    dec = decompose(x, smoothing_period)
    trend_arr = np.asarray(dec.trend)
    seas_arr = np.asarray(dec.seasonal)
    resid_arr = np.asarray(dec.residual)
    interior = ~np.isnan(trend_arr)
    var_r = float(np.var(resid_arr[interior]))

    def strength(component: np.ndarray) -> float:
        base = float(np.var(component[interior] + resid_arr[interior]))
        if base <= 0.0:
            return 0.0
        return float(min(1.0, max(0.0, 1.0 - var_r / base)))

    seasonal_strength = strength(seas_arr) if detected else 0.0
    trend_strength = strength(trend_arr)

    skew, kurt = _moments(x)
    return TemporalProfile(
        trend=TrendInfo(label=trend_label(x), strength=trend_strength),
        seasonality=SeasonalityInfo(detected=detected, period=period, strength=seasonal_strength),
        stationarity=adf_test(x),
        intermittency=float(np.mean(x == 0.0)),
        distribution=DistributionInfo(skewness=skew, excess_kurtosis=kurt),
    )
