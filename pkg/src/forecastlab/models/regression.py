"""Autoregressions on lag features: ordinary least squares, powered-lag
polynomial, ridge, and coordinate-descent lasso. Multi-step forecasts are
recursive, feeding predictions back in as lags."""

from __future__ import annotations

import numpy as np

LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 10000


def _lag_matrix(x: np.ndarray, num_lags: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows are (x_{t-1}, ..., x_{t-num_lags}); targets are x_t."""
    if x.size <= num_lags:
        raise ValueError("train shorter than the lag order")
    windows = np.lib.stride_tricks.sliding_window_view(x[:-1], num_lags)
    return windows[:, ::-1], x[num_lags:]


def _powered(feats: np.ndarray, degree: int) -> np.ndarray:
    """Append elementwise powers of each lag up to ``degree``."""
    if degree <= 1:
        return feats
    return np.concatenate([feats**d for d in range(1, degree + 1)], axis=1)


def _feature_row(recent: list[float], degree: int) -> np.ndarray:
    lags = np.asarray(recent[::-1], dtype=float)
    if degree <= 1:
        return lags
    return np.concatenate([lags**d for d in range(1, degree + 1)])


def _recursive_forecast(
    x: np.ndarray,
    num_lags: int,
    degree: int,
    intercept: float,
    coefs: np.ndarray,
    horizon: int,
) -> np.ndarray:
    recent = list(map(float, x[-num_lags:]))
    out = np.empty(horizon)
    for h in range(horizon):
        feats = _feature_row(recent, degree)
        yhat = intercept + float(np.dot(coefs, feats))
        out[h] = yhat
        recent.pop(0)
        recent.append(yhat)
    return out


def linear_regression(x: np.ndarray, horizon: int, num_lags: int = 8) -> np.ndarray:
    """Least-squares autoregression with an intercept."""
    feats, y = _lag_matrix(x, num_lags)
    design = np.column_stack([np.ones(len(y)), feats])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return _recursive_forecast(x, num_lags, 1, float(beta[0]), beta[1:], horizon)


def polynomial_regression(
    x: np.ndarray, horizon: int, num_lags: int = 8, degree: int = 2
) -> np.ndarray:
    """Least squares on powered lag terms up to ``degree``."""
    if degree < 1:
        raise ValueError("degree must be at least 1")
    feats, y = _lag_matrix(x, num_lags)
    feats = _powered(feats, degree)
    design = np.column_stack([np.ones(len(y)), feats])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return _recursive_forecast(x, num_lags, degree, float(beta[0]), beta[1:], horizon)


def ridge_regression(
    x: np.ndarray, horizon: int, num_lags: int = 8, lam: float = 1.0
) -> np.ndarray:
    """L2-penalized autoregression; the intercept is not penalized.

    Features and target are centered before solving so the fit is shift
    equivariant along with the rest of the library.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    feats, y = _lag_matrix(x, num_lags)
    mu = feats.mean(axis=0)
    ybar = float(y.mean())
    fc = feats - mu
    yc = y - ybar
    gram = fc.T @ fc + lam * np.eye(fc.shape[1])
    coefs = np.linalg.solve(gram, fc.T @ yc)
    intercept = ybar - float(mu @ coefs)
    return _recursive_forecast(x, num_lags, 1, intercept, coefs, horizon)


def _soft_threshold(v: float, threshold: float) -> float:
    if v > threshold:
        return v - threshold
    if v < -threshold:
        return v + threshold
    return 0.0


def lasso_regression(
    x: np.ndarray, horizon: int, num_lags: int = 8, lam: float = 1.0
) -> np.ndarray:
    """L1-penalized autoregression by cyclic coordinate descent.

    Minimizes (1 / 2m) * RSS + lambda * sum(|beta|) on internally
    standardized features; coefficients are mapped back to the raw scale
    and the intercept is not penalized. Iteration stops when the largest
    coefficient update falls below 1e-8 or after 10000 sweeps.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    feats, y = _lag_matrix(x, num_lags)
    m, k = feats.shape
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    fs = (feats - mu) / sd
    ybar = float(y.mean())
    yc = y - ybar

    col_sq = (fs * fs).sum(axis=0) / m
    beta = np.zeros(k)
    resid = yc.copy()
    for _ in range(LASSO_MAX_SWEEPS):
        max_delta = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = float(fs[:, j] @ resid) / m + col_sq[j] * old
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != old:
                resid -= (new - old) * fs[:, j]
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < LASSO_TOL:
            break
    coefs = beta / sd
    intercept = ybar - float(mu @ coefs)
    return _recursive_forecast(x, num_lags, 1, intercept, coefs, horizon)
