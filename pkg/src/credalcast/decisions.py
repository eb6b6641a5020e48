"""MinMax action selection, tailored scores, and the IP score of a forecast.

The tie-break over the action argmin is deterministic: actions within
``tie_tol`` of the minimal worst-case loss form the argmin set, and the
lowest action index wins.  The index order of the loss matrix is the total
order this relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError
from .losses import LossMatrix
from .spaces import CredalSet, Gamble, OutcomeSpace

DEFAULT_TIE_TOL = 1e-10


@dataclass(frozen=True)
class ActionChoice:
    """Resolved MinMax decision: chosen action, its worst-case expected loss,
    and every action tied within tolerance."""

    action_index: int
    worst_case_value: float
    argmin_set: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Forecast:
    """Map from feature values to credal sets; a single credal set means a
    constant forecast.

    Forecasts may put mass on outcomes whose feature value differs from the
    conditioning value; no masking is applied.
    """

    space: OutcomeSpace
    by_feature: Mapping[int, CredalSet] | CredalSet

    def __post_init__(self):
        if isinstance(self.by_feature, CredalSet):
            mapping = {x: self.by_feature for x in range(self.space.n_features)}
        else:
            mapping = {int(x): c for x, c in self.by_feature.items()}
        for x in range(self.space.n_features):
            if x not in mapping:
                raise InvalidInputError(f"no credal set assigned to feature value {x}")
        for credal in mapping.values():
            if credal.space.k != self.space.k:
                raise DimensionMismatchError("forecast credal set on wrong space")
        object.__setattr__(self, "by_feature", mapping)

    def credal_at(self, x: int) -> CredalSet:
        try:
            return self.by_feature[int(x)]
        except KeyError:
            raise InvalidInputError(f"feature value {x} out of range") from None

    def is_constant(self) -> bool:
        sets = list(self.by_feature.values())
        return all(c is sets[0] for c in sets)

    def to_dict(self) -> dict:
        doc = self.space.to_dict()
        doc["by_feature"] = {
            str(x): [[float(p) for p in v.p] for v in c.vertices]
            for x, c in self.by_feature.items()
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Forecast":
        space = OutcomeSpace.from_dict(doc)
        mapping = {
            int(x): CredalSet(space, tuple(np.asarray(v) for v in verts))
            for x, verts in doc["by_feature"].items()
        }
        return cls(space, mapping)


def constant_forecast(credal: CredalSet) -> Forecast:
    """The constant forecast announcing one credal set for every feature value."""
    return Forecast(credal.space, credal)


def minmax_action(credal: CredalSet, loss: LossMatrix,
                  tie_tol: float = DEFAULT_TIE_TOL) -> ActionChoice:
    """Action minimizing the upper expected loss under the credal set."""
    if loss.k != credal.space.k:
        raise DimensionMismatchError("loss matrix and credal set disagree on k")
    worst = np.max(loss.entries @ credal.matrix.T, axis=1)
    threshold = worst.min() + tie_tol
    argmin_set = tuple(int(a) for a in np.flatnonzero(worst <= threshold))
    chosen = argmin_set[0]
    return ActionChoice(chosen, float(worst[chosen]), argmin_set)


def recommended_actions(forecast: Forecast, loss: LossMatrix,
                        tie_tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Chosen action per feature value (length J array)."""
    return np.array([
        minmax_action(forecast.credal_at(x), loss, tie_tol).action_index
        for x in range(forecast.space.n_features)
    ])


def score_gamble(forecast: Forecast, loss: LossMatrix,
                 tie_tol: float = DEFAULT_TIE_TOL) -> Gamble:
    """Tailored score as a gamble: entry at omega is the loss of the action
    recommended at X(omega) when omega materializes."""
    loss.check_space(forecast.space)
    actions = recommended_actions(forecast, loss, tie_tol)
    feature_of = forecast.space.feature_array
    values = loss.entries[actions[feature_of], np.arange(forecast.space.k)]
    return Gamble(values)


def tailored_score(forecast: Forecast, loss: LossMatrix, outcome_index: int,
                   tie_tol: float = DEFAULT_TIE_TOL) -> float:
    """Loss incurred at one outcome when following the forecast's MinMax
    recommendation for that outcome's feature value."""
    if not 0 <= outcome_index < forecast.space.k:
        raise InvalidInputError(f"outcome index {outcome_index} out of range")
    return float(score_gamble(forecast, loss, tie_tol).values[outcome_index])


def ip_score(forecast: Forecast, loss: LossMatrix, data: CredalSet,
             tie_tol: float = DEFAULT_TIE_TOL) -> float:
    """Upper expectation, under the data model, of the tailored score gamble."""
    if data.space.k != forecast.space.k:
        raise DimensionMismatchError("data model and forecast disagree on k")
    return data.upper_expectation(score_gamble(forecast, loss, tie_tol))
