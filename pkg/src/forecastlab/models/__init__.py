"""Model registry: identifiers, hyperparameter grids, minimum history
requirements, and the single fit-and-forecast entry point."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from ..series import Series
from . import regression, statistical

MODEL_IDS: tuple[str, ...] = (
    "random_walk",
    "moving_average",
    "exp_smoothing",
    "arima",
    "theta",
    "croston",
    "linear_regression",
    "polynomial_regression",
    "ridge_regression",
    "lasso_regression",
)


class ModelFailureError(RuntimeError):
    """A model could not produce a usable forecast for this input."""


def _check_unit_interval(params: Mapping[str, Any], key: str, allow_none: bool = False) -> None:
    v = params.get(key)
    if v is None and allow_none:
        return
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not (0.0 < float(v) <= 1.0):
        raise ValueError(f"{key} must lie in (0, 1]")


def _check_int(params: Mapping[str, Any], key: str, lo: int, hi: int) -> None:
    v = params.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or not (lo <= v <= hi):
        raise ValueError(f"{key} must be an integer in [{lo}, {hi}]")


def _check_bool(params: Mapping[str, Any], key: str) -> None:
    if not isinstance(params.get(key), bool):
        raise ValueError(f"{key} must be a bool")


_ALLOWED_KEYS: dict[str, frozenset[str]] = {
    "random_walk": frozenset({"drift"}),
    "moving_average": frozenset({"window"}),
    "exp_smoothing": frozenset({"alpha", "beta", "gamma", "trend", "seasonal", "period"}),
    "arima": frozenset({"p", "d", "q"}),
    "theta": frozenset({"ses_alpha"}),
    "croston": frozenset({"alpha"}),
    "linear_regression": frozenset({"num_lags"}),
    "polynomial_regression": frozenset({"num_lags", "degree"}),
    "ridge_regression": frozenset({"num_lags", "lambda"}),
    "lasso_regression": frozenset({"num_lags", "lambda"}),
}


def allowed_hyperparameter_keys(model_id: str) -> frozenset[str]:
    """Valid hyperparameter names for one model id."""
    if model_id not in _ALLOWED_KEYS:
        raise ValueError(f"unknown model {model_id!r}")
    return _ALLOWED_KEYS[model_id]


def validate_hyperparameters(model_id: str, params: Mapping[str, Any]) -> None:
    """Check parameter names and value domains against the declared space."""
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}")
    unknown = set(params) - _ALLOWED_KEYS[model_id]
    if unknown:
        raise ValueError(f"{model_id} does not accept {sorted(unknown)}")
    if model_id == "random_walk":
        if "drift" in params:
            _check_bool(params, "drift")
    elif model_id == "moving_average":
        if "window" in params:
            _check_int(params, "window", 1, 10000)
    elif model_id == "exp_smoothing":
        for key in ("alpha", "beta", "gamma"):
            if key in params:
                _check_unit_interval(params, key, allow_none=True)
        for key in ("trend", "seasonal"):
            if key in params:
                _check_bool(params, key)
        if params.get("seasonal"):
            if params.get("period") is None:
                raise ValueError("seasonal smoothing requires a period")
            _check_int(params, "period", 2, 10000)
        elif params.get("period") is not None:
            _check_int(params, "period", 2, 10000)
    elif model_id == "arima":
        for key, hi in (("p", 5), ("d", 2), ("q", 5)):
            if key in params:
                _check_int(params, key, 0, hi)
    elif model_id == "theta":
        if "ses_alpha" in params:
            _check_unit_interval(params, "ses_alpha")
    elif model_id == "croston":
        if "alpha" in params:
            _check_unit_interval(params, "alpha")
    else:  # lag regressions
        if "num_lags" in params:
            _check_int(params, "num_lags", 1, 10000)
        if "degree" in params:
            _check_int(params, "degree", 1, 6)
        if "lambda" in params:
            v = params.get("lambda")
            if not isinstance(v, (int, float)) or isinstance(v, bool) or float(v) < 0.0:
                raise ValueError("lambda must be nonnegative")


@dataclass(frozen=True)
class ModelSpec:
    """A model identifier plus a concrete hyperparameter assignment."""

    model_id: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_hyperparameters(self.model_id, self.hyperparameters)

    def params_label(self) -> str:
        """Stable single-line rendering, for tables and logs."""
        items = sorted(self.hyperparameters.items())
        return ";".join(f"{k}={v}" for k, v in items) if items else "default"


@dataclass(frozen=True)
class Forecast:
    """A finite point forecast of fixed horizon."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("forecast must contain at least one step")
        arr = np.asarray(self.values, dtype=float)
        if not np.isfinite(arr).all():
            raise ValueError("forecast values must be finite")
        object.__setattr__(self, "values", tuple(float(v) for v in arr))

    @property
    def horizon(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def hyperparameter_space(model_id: str, seasonal_period: int | None = None) -> dict[str, list]:
    """Candidate grid for one model, in fixed key order.

    The exp_smoothing grid only offers the seasonal component when a
    profile period is supplied; the period axis is then pinned to it.
    """
    if model_id == "random_walk":
        return {"drift": [False, True]}
    if model_id == "moving_average":
        return {"window": [3, 6, 12, 24]}
    if model_id == "exp_smoothing":
        return {
            "alpha": [0.2, 0.5, 0.8],
            "trend": [False, True],
            "seasonal": [False, True] if seasonal_period else [False],
            "period": [seasonal_period] if seasonal_period else [None],
        }
    if model_id == "arima":
        return {"p": [0, 1, 2], "d": [0, 1], "q": [0, 1, 2]}
    if model_id == "theta":
        return {"ses_alpha": [0.2, 0.5, 0.8]}
    if model_id == "croston":
        return {"alpha": [0.1, 0.3, 0.5]}
    if model_id == "linear_regression":
        return {"num_lags": [4, 8, 24]}
    if model_id == "polynomial_regression":
        return {"num_lags": [4, 8, 24], "degree": [2, 3]}
    if model_id in ("ridge_regression", "lasso_regression"):
        return {"num_lags": [4, 8, 24], "lambda": [0.1, 1.0, 10.0]}
    raise ValueError(f"unknown model {model_id!r}")


def minimum_train_length(spec: ModelSpec) -> int:
    """Shortest training history the spec can be fit on."""
    p = spec.hyperparameters
    mid = spec.model_id
    if mid == "random_walk":
        return 1
    if mid == "moving_average":
        return int(p.get("window", 3))
    if mid == "exp_smoothing":
        if p.get("seasonal"):
            return 2 * int(p["period"])
        return 4 if p.get("trend") else 2
    if mid == "arima":
        return int(p.get("p", 1)) + int(p.get("d", 0)) + int(p.get("q", 0)) + 12
    if mid == "theta":
        return 4
    if mid == "croston":
        return 2
    return int(p.get("num_lags", 8)) + 2


_DISPATCH: dict[str, Callable[..., np.ndarray]] = {
    "random_walk": statistical.random_walk,
    "moving_average": statistical.moving_average,
    "exp_smoothing": statistical.exp_smoothing,
    "arima": statistical.arima,
    "theta": statistical.theta,
    "croston": statistical.croston,
    "linear_regression": regression.linear_regression,
    "polynomial_regression": regression.polynomial_regression,
    "ridge_regression": regression.ridge_regression,
    "lasso_regression": regression.lasso_regression,
}

# "lambda" is a keyword, so it maps to the lam argument of the solvers.
_KEY_RENAMES = {"lambda": "lam"}


def fit_forecast(spec: ModelSpec, train: Series, horizon: int) -> Forecast:
    """Fit a model spec on training history and forecast ``horizon`` steps.

    Raises ModelFailureError when the history is shorter than the spec's
    minimum, when the underlying solver rejects the input, or when the
    output is not finite.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    x = train.dense()
    need = minimum_train_length(spec)
    if x.size < need:
        raise ModelFailureError(
            f"{spec.model_id} needs {need} points, got {x.size}"
        )
    kwargs = {
        _KEY_RENAMES.get(k, k): v for k, v in spec.hyperparameters.items()
    }
    try:
        with np.errstate(all="ignore"):
            values = _DISPATCH[spec.model_id](x, horizon, **kwargs)
    except (
        ValueError,
        OverflowError,
        ZeroDivisionError,
        FloatingPointError,
        np.linalg.LinAlgError,
    ) as exc:
        raise ModelFailureError(f"{spec.model_id} failed: {exc}") from exc
    values = np.asarray(values, dtype=float)
    if values.shape != (horizon,) or not np.isfinite(values).all():
        raise ModelFailureError(f"{spec.model_id} produced a non-finite forecast")
    return Forecast(values=tuple(values.tolist()))
