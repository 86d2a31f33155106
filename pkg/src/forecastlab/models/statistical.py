"""Classical forecasters: random walk, trailing-mean, exponential smoothing,
ARIMA via the Hannan-Rissanen two-stage regression, theta, and Croston."""

from __future__ import annotations

import numpy as np

SMOOTHING_COARSE_GRID = tuple(round(0.1 * i, 2) for i in range(1, 10))
SMOOTHING_REFINE_OFFSETS = (-0.08, -0.06, -0.04, -0.02, 0.0, 0.02, 0.04, 0.06, 0.08)
SMOOTHING_PARAM_MIN = 0.01
SMOOTHING_PARAM_MAX = 0.99


def random_walk(x: np.ndarray, horizon: int, drift: bool = False) -> np.ndarray:
    """Repeat the last value; with drift, add the mean one-step increment."""
    last = float(x[-1])
    if not drift or x.size < 2:
        return np.full(horizon, last)
    step = (float(x[-1]) - float(x[0])) / (x.size - 1)
    return last + step * np.arange(1, horizon + 1, dtype=float)


def moving_average(x: np.ndarray, horizon: int, window: int = 3) -> np.ndarray:
    """Recursive mean of the trailing window; forecasts feed back in."""
    if x.size < window:
        raise ValueError("train shorter than the averaging window")
    buf = list(map(float, x[-window:]))
    out = np.empty(horizon)
    for h in range(horizon):
        f = sum(buf) / window
        out[h] = f
        buf.pop(0)
        buf.append(f)
    return out


def _smoothing_pass(
    x: np.ndarray,
    alpha: float,
    beta: float,
    gamma: float,
    trend: bool,
    seasonal: bool,
    period: int,
) -> tuple[float, float, float, np.ndarray]:
    """One full recursion; returns (sse, level, slope, seasonal state)."""
    n = x.size
    if seasonal:
        m = period
        level = float(np.mean(x[:m]))
        slope = (float(np.mean(x[m:2 * m])) - level) / m if trend else 0.0
        season = x[:m].astype(float) - level
        start = m
    else:
        m = 0
        level = float(x[0])
        slope = float(x[1] - x[0]) if trend else 0.0
        season = np.zeros(0)
        start = 1
    sse = 0.0
    for t in range(start, n):
        s_idx = t % m if seasonal else 0
        s_val = season[s_idx] if seasonal else 0.0
        pred = level + slope + s_val
        err = float(x[t]) - pred
        sse += err * err
        new_level = alpha * (float(x[t]) - s_val) + (1.0 - alpha) * (level + slope)
        new_slope = beta * (new_level - level) + (1.0 - beta) * slope if trend else slope
        if seasonal:
            season[s_idx] = gamma * (float(x[t]) - level - slope) + (1.0 - gamma) * s_val
        level, slope = new_level, new_slope
    return sse, level, slope, season


def _fit_free_params(
    x: np.ndarray,
    given: dict[str, float | None],
    trend: bool,
    seasonal: bool,
    period: int,
) -> dict[str, float]:
    """Grid-plus-refinement SSE minimization for unspecified smoothing params."""
    names = ["alpha"]
    if trend:
        names.append("beta")
    if seasonal:
        names.append("gamma")
    fixed = {k: v for k, v in given.items() if k in names and v is not None}
    free = [k for k in names if k not in fixed]
    best = dict(fixed)
    for k in free:
        best[k] = 0.5

    def sse_of(params: dict[str, float]) -> float:
        return _smoothing_pass(
            x,
            params.get("alpha", 0.5),
            params.get("beta", 0.0),
            params.get("gamma", 0.0),
            trend,
            seasonal,
            period,
        )[0]

    if not free:
        return best
    for grid in (SMOOTHING_COARSE_GRID, None):
        best_sse = sse_of(best)
        # cycle one free parameter at a time over its candidate values
        for k in free:
            if grid is None:
                center = best[k]
                candidates = sorted(
                    {
                        min(SMOOTHING_PARAM_MAX, max(SMOOTHING_PARAM_MIN, round(center + off, 4)))
                        for off in SMOOTHING_REFINE_OFFSETS
                    }
                )
            else:
                candidates = list(grid)
            for cand in candidates:
                trial = dict(best)
                trial[k] = cand
                s = sse_of(trial)
                if s < best_sse:
                    best_sse = s
                    best = trial
    return best


def exp_smoothing(
    x: np.ndarray,
    horizon: int,
    alpha: float | None = None,
    beta: float | None = None,
    gamma: float | None = None,
    trend: bool = False,
    seasonal: bool = False,
    period: int | None = None,
) -> np.ndarray:
    """Simple / Holt / additive Holt-Winters exponential smoothing.

    Smoothing parameters that are not supplied are fit on the training
    data by sum-of-squared-error minimization over a coarse grid followed
    by a local refinement. Seasonal mode needs at least two full periods.
    """
    if seasonal:
        if period is None or period < 2:
            raise ValueError("seasonal smoothing needs a period of at least 2")
        if x.size < 2 * period:
            raise ValueError("seasonal smoothing needs two full periods of history")
    if x.size < 2:
        raise ValueError("smoothing needs at least 2 points")
    m = period if seasonal else 0
    params = _fit_free_params(
        x, {"alpha": alpha, "beta": beta, "gamma": gamma}, trend, seasonal, m
    )
    _, level, slope, season = _smoothing_pass(
        x,
        params["alpha"],
        params.get("beta", 0.0),
        params.get("gamma", 0.0),
        trend,
        seasonal,
        m,
    )
    n = x.size
    out = np.empty(horizon)
    for h in range(1, horizon + 1):
        val = level + (slope * h if trend else 0.0)
        if seasonal:
            val += season[(n - 1 + h) % m]
        out[h - 1] = val
    return out


def _long_ar_residuals(w: np.ndarray, order: int, include_const: bool) -> np.ndarray:
    """Residuals of a long autoregression, the innovation proxy stage."""
    n = w.size
    rows = np.arange(order, n)
    cols = []
    if include_const:
        cols.append(np.ones(rows.size))
    for i in range(1, order + 1):
        cols.append(w[rows - i])
    design = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(design, w[rows], rcond=None)
    resid = np.zeros(n)
    resid[rows] = w[rows] - design @ beta
    return resid


def arima(x: np.ndarray, horizon: int, p: int = 1, d: int = 0, q: int = 0) -> np.ndarray:
    """ARIMA(p, d, q) by differencing plus Hannan-Rissanen least squares.

    The series is differenced d times; innovations are proxied by the
    residuals of a long autoregression and the ARMA coefficients come from
    a single least-squares fit. The constant term is included only when
    d = 0, which makes (0, 1, 0) coincide with the driftless random walk.
    Forecasts are recursive with future innovations at zero, then the
    differencing is inverted.
    """
    if p < 0 or d < 0 or q < 0:
        raise ValueError("orders must be nonnegative")
    tails: list[float] = []
    w = x.astype(float)
    for _ in range(d):
        tails.append(float(w[-1]))
        w = np.diff(w)
    n = w.size
    include_const = d == 0
    min_needed = p + q + 2
    if n < min_needed:
        raise ValueError("differenced series too short for the requested orders")

    if p == 0 and q == 0:
        const = float(np.mean(w)) if include_const else 0.0
        future = np.full(horizon, const)
        for last in reversed(tails):
            future = last + np.cumsum(future)
        return future

    if q > 0:
        long_order = min(max(8, 2 * (p + q)), max(1, n // 4))
        proxy = _long_ar_residuals(w, long_order, include_const)
        t0 = max(p, long_order + q)
    else:
        long_order = 0
        proxy = np.zeros(n)
        t0 = p
    rows = np.arange(t0, n)
    if rows.size < (p + q + int(include_const)):
        raise ValueError("not enough observations for the final regression")
    cols = []
    if include_const:
        cols.append(np.ones(rows.size))
    for i in range(1, p + 1):
        cols.append(w[rows - i])
    for j in range(1, q + 1):
        cols.append(proxy[rows - j])
    design = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(design, w[rows], rcond=None)
    pos = 0
    const = float(beta[pos]) if include_const else 0.0
    pos += int(include_const)
    phi = beta[pos:pos + p]
    pos += p
    theta_c = beta[pos:pos + q]

    # in-sample innovations of the fitted model, burn-in at zero
    resid = np.zeros(n)
    for t in range(p, n):
        pred = const
        for i in range(1, p + 1):
            pred += phi[i - 1] * w[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                pred += theta_c[j - 1] * resid[t - j]
        resid[t] = w[t] - pred

    w_hist = list(map(float, w))
    e_hist = list(map(float, resid))
    future = np.empty(horizon)
    for h in range(horizon):
        pred = const
        for i in range(1, p + 1):
            pred += phi[i - 1] * w_hist[-i]
        for j in range(1, q + 1):
            pred += theta_c[j - 1] * e_hist[-j]
        future[h] = pred
        w_hist.append(pred)
        e_hist.append(0.0)

    for last in reversed(tails):
        future = last + np.cumsum(future)
    return future


def theta(x: np.ndarray, horizon: int, ses_alpha: float = 0.5) -> np.ndarray:
    """Two-line theta decomposition.

    Averages the extrapolated least-squares trend (the flattened line)
    with simple exponential smoothing of the doubled-curvature line
    2x - trend, extended flat at its final level.
    """
    n = x.size
    if n < 3:
        raise ValueError("theta needs at least 3 points")
    t = np.arange(n, dtype=float)
    slope, intercept = np.polyfit(t, x, 1)
    trendline = intercept + slope * t
    amplified = 2.0 * x - trendline
    level = float(amplified[0])
    for v in amplified[1:]:
        level = ses_alpha * float(v) + (1.0 - ses_alpha) * level
    steps = np.arange(1, horizon + 1, dtype=float)
    return 0.5 * (intercept + slope * (n - 1 + steps)) + 0.5 * level


def croston(x: np.ndarray, horizon: int, alpha: float = 0.3) -> np.ndarray:
    """Croston's method for intermittent demand.

    Smooths nonzero demand sizes and inter-demand intervals separately;
    the forecast is the constant ratio of the two. A series with no
    nonzero demand forecasts zero.
    """
    nz = np.flatnonzero(x != 0.0)
    if nz.size == 0:
        return np.zeros(horizon)
    size = float(x[nz[0]])
    interval = float(nz[0] + 1)
    prev = int(nz[0])
    for i in nz[1:]:
        gap = float(int(i) - prev)
        size = alpha * float(x[i]) + (1.0 - alpha) * size
        interval = alpha * gap + (1.0 - alpha) * interval
        prev = int(i)
    return np.full(horizon, size / interval)
