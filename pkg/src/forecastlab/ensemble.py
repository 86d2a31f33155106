"""Ensemble decision and combination.

Backtested members are scored by a min-max normalized blend of their
validation errors; a relative-gap rule picks a single leader when it is
clearly ahead, high member disagreement falls back to per-step median
pooling, and otherwise temperatured inverse-loss weights with uniform
shrinkage produce a weighted average. Combination happens in the modeling
(scaled) space and is inverted afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .series import ZScoreScaler

STRATEGIES = ("single_best", "weighted_average", "median", "trimmed_mean")
DISAGREEMENT_THRESHOLD = 0.25

# wire names follow the decision JSON contract; single_best travels as best_model
_STRATEGY_TO_WIRE = {
    "single_best": "best_model",
    "weighted_average": "weighted_average",
    "median": "median",
    "trimmed_mean": "trimmed_mean",
}
_WIRE_TO_STRATEGY = {v: k for k, v in _STRATEGY_TO_WIRE.items()}


@dataclass(frozen=True)
class EnsembleConfig:
    """Knobs for scoring, the gap rule, weighting, and robust pooling."""

    delta: float = 0.05
    beta: float = 1.0
    tau: float = 1.0
    shrinkage: float = 0.1
    weight_floor: float = 0.02
    weight_cap: float = 0.80
    trim_fraction: float = 0.1
    epsilon: float = 1e-8
    mae_weight: float = 0.5
    mape_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.beta <= 0 or self.tau <= 0:
            raise ValueError("beta and tau must be positive")
        if not (0.0 <= self.shrinkage <= 1.0):
            raise ValueError("shrinkage must lie in [0, 1]")
        if not (0.0 < self.weight_floor <= self.weight_cap <= 1.0):
            raise ValueError("need 0 < weight_floor <= weight_cap <= 1")
        if not (0.0 <= self.trim_fraction < 0.5):
            raise ValueError("trim_fraction must lie in [0, 0.5)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.mae_weight < 0 or self.mape_weight < 0 or self.mae_weight + self.mape_weight <= 0:
            raise ValueError("metric weights must be nonnegative and sum above zero")


@dataclass(frozen=True)
class EnsembleDecision:
    """Frozen integration choice made before the test window is touched."""

    strategy: str
    member_ids: tuple[str, ...]
    weights: tuple[float, ...] | None
    selected_model: str | None
    rationale: str
    confidence: str
    gap: float
    disagreement: float
    trim_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "weighted_average":
            if self.weights is None or len(self.weights) != len(self.member_ids):
                raise ValueError("weighted_average needs one weight per member")
        if self.strategy == "single_best" and self.selected_model is None:
            raise ValueError("single_best needs a selected model")

    def weights_by_model(self) -> dict[str, float]:
        if self.weights is None:
            return {}
        return dict(zip(self.member_ids, self.weights))

    def to_wire(self) -> dict:
        """Serialize to the decision JSON shape used on the advisor wire."""
        return {
            "integration_strategy": _STRATEGY_TO_WIRE[self.strategy],
            "weights": self.weights_by_model() if self.weights is not None else None,
            "selected_model": self.selected_model,
            "reasoning": self.rationale,
            "confidence": self.confidence,
        }


def aggregate_scores(
    maes: Sequence[float], mapes: Sequence[float], config: EnsembleConfig
) -> np.ndarray:
    """Blend min-max normalized MAE and MAPE into one score per member.

    A degenerate metric (identical across members) contributes zero, so
    equal-error members all score 0.
    """
    maes = np.asarray(maes, dtype=float)
    mapes = np.asarray(mapes, dtype=float)
    if maes.shape != mapes.shape or maes.ndim != 1 or maes.size == 0:
        raise ValueError("need one mae and one mape per member")

    def norm(v: np.ndarray) -> np.ndarray:
        span = float(v.max() - v.min())
        if span == 0.0:
            return np.zeros_like(v)
        return (v - v.min()) / span

    total = config.mae_weight + config.mape_weight
    return (config.mae_weight * norm(maes) + config.mape_weight * norm(mapes)) / total


def gap_test(sorted_scores: Sequence[float], delta: float) -> tuple[bool, float]:
    """Relative lead of the best score over the runner-up.

    Returns (passes, gap) where gap = (s2 - s1) / s1. A zero best score
    makes the gap infinite when the runner-up is worse and zero when the
    two are tied.
    """
    s = np.asarray(sorted_scores, dtype=float)
    if s.size < 2:
        raise ValueError("gap test needs at least two scores")
    s1, s2 = float(s[0]), float(s[1])
    if s2 < s1:
        raise ValueError("scores must be sorted ascending")
    if s1 == 0.0:
        gap = float("inf") if s2 > 0.0 else 0.0
    else:
        gap = (s2 - s1) / s1
    return gap >= delta, gap


def performance_weights(scores: Sequence[float], config: EnsembleConfig) -> np.ndarray:
    """Temperatured inverse-score weights with floor/cap and shrinkage.

    Raw weights (s_i + eps)^(-beta) are tempered by 1/tau and normalized,
    clipped into [floor, cap], blended with the uniform vector by the
    shrinkage factor, and renormalized to sum to one.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("need at least one score")
    if (s < 0).any():
        raise ValueError("scores must be nonnegative")
    k = s.size
    raw = (s + config.epsilon) ** (-config.beta)
    tempered = raw ** (1.0 / config.tau)
    perf = tempered / tempered.sum()
    clipped = np.clip(perf, config.weight_floor, config.weight_cap)
    blended = (1.0 - config.shrinkage) * clipped + config.shrinkage / k
    return blended / blended.sum()


def robust_aggregate(members: np.ndarray, mode: str, trim_fraction: float = 0.1) -> np.ndarray:
    """Per-step median or symmetric trimmed mean across members.

    members is (k, H). Trimming removes floor(trim_fraction * k) values
    from each end per step and errors out when that would consume every
    member.
    """
    members = np.asarray(members, dtype=float)
    if members.ndim != 2 or members.size == 0:
        raise ValueError("members must be a nonempty (k, H) array")
    if mode == "median":
        return np.median(members, axis=0)
    if mode != "trimmed_mean":
        raise ValueError(f"unknown robust mode {mode!r}")
    k = members.shape[0]
    cut = int(np.floor(trim_fraction * k))
    if 2 * cut >= k:
        raise ValueError("trim fraction leaves no members")
    ordered = np.sort(members, axis=0)
    return ordered[cut:k - cut].mean(axis=0)


def disagreement_index(member_forecasts: Mapping[str, Sequence[float]], val_actual: Sequence[float]) -> float:
    """Mean per-step member spread relative to the validation target IQR.

    A degenerate IQR maps to +inf when members differ at any step and 0
    when they all agree, steering the decision toward robust pooling.
    """
    ids = list(member_forecasts)
    if not ids:
        raise ValueError("need at least one member forecast")
    mat = np.asarray([member_forecasts[i] for i in ids], dtype=float)
    if mat.ndim != 2:
        raise ValueError("member forecasts must share one horizon")
    if mat.shape[0] == 1:
        return 0.0
    spread = mat.max(axis=0) - mat.min(axis=0)
    actual = np.asarray(val_actual, dtype=float)
    q1, q3 = np.quantile(actual, [0.25, 0.75])
    iqr = float(q3 - q1)
    if iqr <= 0.0:
        return float("inf") if float(spread.max()) > 0.0 else 0.0
    return float(np.mean(spread / iqr))


def decide(
    member_ids: Sequence[str],
    maes: Sequence[float],
    mapes: Sequence[float],
    disagreement: float,
    config: EnsembleConfig | None = None,
) -> EnsembleDecision:
    """Choose the integration strategy from validation behavior only.

    Order of rules: a single member is used as-is; a leader whose
    relative score gap clears delta wins alone; disagreement beyond 0.25
    selects per-step median pooling; otherwise performance weights.
    """
    config = config or EnsembleConfig()
    ids = tuple(member_ids)
    if len(ids) != len(set(ids)):
        raise ValueError("member ids must be distinct")
    if len(ids) == 0:
        raise ValueError("need at least one member")
    scores = aggregate_scores(maes, mapes, config)
    order = np.lexsort((np.arange(len(ids)), scores))
    leader = ids[int(order[0])]

    if len(ids) == 1:
        return EnsembleDecision(
            strategy="single_best",
            member_ids=ids,
            weights=None,
            selected_model=leader,
            rationale=f"only one usable member ({leader}); using it directly",
            confidence="medium",
            gap=0.0,
            disagreement=disagreement,
            trim_fraction=config.trim_fraction,
        )

    sorted_scores = scores[order]
    passes, gap = gap_test(sorted_scores, config.delta)
    if passes:
        confidence = "high" if gap >= 2.0 * config.delta else "medium"
        return EnsembleDecision(
            strategy="single_best",
            member_ids=ids,
            weights=None,
            selected_model=leader,
            rationale=(
                f"validation leader {leader} is ahead by relative gap {gap:.4g}"
                f" >= delta {config.delta:.4g}; a lone strong member beats dilution"
            ),
            confidence=confidence,
            gap=gap,
            disagreement=disagreement,
            trim_fraction=config.trim_fraction,
        )
    if disagreement > DISAGREEMENT_THRESHOLD:
        return EnsembleDecision(
            strategy="median",
            member_ids=ids,
            weights=None,
            selected_model=None,
            rationale=(
                f"member spread {disagreement:.4g} of the validation IQR exceeds"
                f" {DISAGREEMENT_THRESHOLD}; per-step median resists outlying members"
            ),
            confidence="low",
            gap=gap,
            disagreement=disagreement,
            trim_fraction=config.trim_fraction,
        )
    weights = performance_weights(scores, config)
    return EnsembleDecision(
        strategy="weighted_average",
        member_ids=ids,
        weights=tuple(float(w) for w in weights),
        selected_model=None,
        rationale=(
            f"scores within delta (gap {gap:.4g} < {config.delta:.4g}) and spread"
            f" {disagreement:.4g} <= {DISAGREEMENT_THRESHOLD}; inverse-loss weights"
            f" with shrinkage {config.shrinkage:.4g}"
        ),
        confidence="medium",
        gap=gap,
        disagreement=disagreement,
        trim_fraction=config.trim_fraction,
    )


def combine(
    decision: EnsembleDecision,
    member_forecasts: Mapping[str, Sequence[float]],
    scaler: ZScoreScaler | None = None,
) -> np.ndarray:
    """Apply a frozen decision to member forecasts.

    Forecasts are expected in the space the members were fit in; when a
    scaler is given the pooled result is mapped back through it. The
    member set must match the decision exactly.
    """
    if set(member_forecasts) != set(decision.member_ids):
        raise ValueError("member forecasts do not match the decision's members")
    mat = np.asarray([member_forecasts[mid] for mid in decision.member_ids], dtype=float)
    if mat.ndim != 2:
        raise ValueError("member forecasts must share one horizon")
    if decision.strategy == "single_best":
        pooled = mat[decision.member_ids.index(decision.selected_model)].copy()
    elif decision.strategy == "weighted_average":
        w = np.asarray(decision.weights, dtype=float)
        pooled = w @ mat
    else:
        pooled = robust_aggregate(mat, decision.strategy, decision.trim_fraction)
    if scaler is not None:
        pooled = scaler.inverse(pooled)
    return pooled
