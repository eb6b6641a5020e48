"""IP calibration: residuals per partition block, the action-induced
partition, the GBR-normalized per-action diagnostic, and the closed-form
marginal-gamble residual for binary interval forecasts.

The price charged by the forecaster at omega is the upper expectation,
under the forecast at X(omega), of the full tailored score gamble over all
outcomes — including outcomes with other feature values, since forecasts
are not forced to trust the conditioning information.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .decisions import DEFAULT_TIE_TOL, Forecast, recommended_actions, score_gamble
from .errors import InvalidInputError
from .gbr import LOWER_PROB_MIN, Partition, gbr_upper, trivial_partition
from .losses import LossMatrix
from .spaces import CredalSet, Gamble

logger = logging.getLogger(__name__)

#: default residual tolerance for analytic/fixture data; CLI evaluations of
#: empirical distributions default to 1e-3 instead (sampling noise)
ANALYTIC_TOL = 1e-9
EMPIRICAL_TOL = 1e-3


@dataclass(frozen=True)
class BlockReport:
    residual: float
    diagnostic_II: float | None
    is_calibrated: bool
    is_subcalibrated: bool


@dataclass(frozen=True)
class CalibrationReport:
    per_block: dict[str, BlockReport]
    tolerance: float
    forecast_id: str = ""
    loss_id: str = ""
    data_model_id: str = ""

    @property
    def is_calibrated(self) -> bool:
        return all(b.is_calibrated for b in self.per_block.values())

    @property
    def is_subcalibrated(self) -> bool:
        return all(b.is_subcalibrated for b in self.per_block.values())


def price_gamble(forecast: Forecast, loss: LossMatrix,
                 tie_tol: float = DEFAULT_TIE_TOL) -> Gamble:
    """Per-outcome insurance price R_{Q(X(omega))}(score gamble)."""
    tailored = score_gamble(forecast, loss, tie_tol)
    per_feature = [
        forecast.credal_at(x).upper_expectation(tailored)
        for x in range(forecast.space.n_features)
    ]
    feature_of = forecast.space.feature_array
    return Gamble(np.asarray(per_feature)[feature_of])


def entropy_price(forecast: Forecast, loss: LossMatrix, outcome_index: int,
                  tie_tol: float = DEFAULT_TIE_TOL) -> float:
    """Price at one outcome (the forecaster's own entropy assessment)."""
    if not 0 <= outcome_index < forecast.space.k:
        raise InvalidInputError(f"outcome index {outcome_index} out of range")
    return float(price_gamble(forecast, loss, tie_tol).values[outcome_index])


def action_partition(forecast: Forecast, loss: LossMatrix,
                     tie_tol: float = DEFAULT_TIE_TOL) -> Partition:
    """Partition of the outcome space by recommended action; actions that
    are never recommended yield no block (logged)."""
    space = forecast.space
    actions = recommended_actions(forecast, loss, tie_tol)
    feature_of = space.feature_array
    per_outcome = actions[feature_of]
    blocks, labels, action_ids = [], [], []
    for action in range(loss.n_actions):
        members = np.flatnonzero(per_outcome == action)
        if members.size == 0:
            logger.info("action %s (%s) is never recommended; no block emitted",
                        action, loss.action_labels[action])
            continue
        blocks.append(tuple(int(i) for i in members))
        labels.append(loss.action_labels[action])
        action_ids.append(action)
    return Partition(space, tuple(blocks), tuple(labels), tuple(action_ids))


def diagnostic_II(forecast: Forecast, loss: LossMatrix, data: CredalSet,
                  action_index: int,
                  tie_tol: float = DEFAULT_TIE_TOL) -> float | None:
    """GBR-normalized calibration diagnostic for one action.

    Conditional upper expectation, given that the action is recommended, of
    the loss row minus the forecaster's price for that row.  ``None`` when
    the action's block is empty or has zero lower probability.
    """
    if not 0 <= action_index < loss.n_actions:
        raise InvalidInputError(f"action index {action_index} out of range")
    space = forecast.space
    actions = recommended_actions(forecast, loss, tie_tol)
    feature_of = space.feature_array
    block = np.flatnonzero(actions[feature_of] == action_index)
    if block.size == 0:
        return None
    event = [int(i) for i in block]
    if data.lower_probability(event) <= LOWER_PROB_MIN:
        return None
    row = Gamble(loss.entries[action_index])
    per_feature = [
        forecast.credal_at(x).upper_expectation(row)
        for x in range(space.n_features)
    ]
    price = np.asarray(per_feature)[feature_of]
    return gbr_upper(data, Gamble(row.values - price), event)


def calibration_residual(forecast: Forecast, loss: LossMatrix, data: CredalSet,
                         partition: Partition | None = None,
                         tolerance: float = ANALYTIC_TOL,
                         forecast_id: str = "", loss_id: str = "",
                         data_model_id: str = "",
                         tie_tol: float = DEFAULT_TIE_TOL,
                         with_diagnostics: bool = True) -> CalibrationReport:
    """Per-block residual R_data( chi_B (score - price) ) with flags.

    ``partition=None`` means calibration without groups (one block).  For
    blocks tagged with an inducing action the diagnostic column holds the
    per-action GBR diagnostic; for untagged blocks it holds the
    GBR-conditioned residual, or None on zero lower probability.  Pass
    ``with_diagnostics=False`` to skip the conditional diagnostics (bulk
    residual sweeps).
    """
    if partition is None:
        partition = trivial_partition(forecast.space)
    tailored = score_gamble(forecast, loss, tie_tol)
    price = price_gamble(forecast, loss, tie_tol)
    deviation = tailored.values - price.values
    per_block: dict[str, BlockReport] = {}
    for index in range(len(partition)):
        chi = partition.indicator(index)
        residual = data.upper_expectation(chi * deviation)
        if not with_diagnostics:
            diag = None
        elif partition.action_indices is not None:
            diag = diagnostic_II(forecast, loss, data,
                                 partition.action_indices[index], tie_tol)
        else:
            event = list(partition.blocks[index])
            if data.lower_probability(event) > LOWER_PROB_MIN:
                diag = gbr_upper(data, Gamble(deviation), event)
            else:
                diag = None
        per_block[partition.labels[index]] = BlockReport(
            residual=float(residual),
            diagnostic_II=diag,
            is_calibrated=bool(abs(residual) <= tolerance),
            is_subcalibrated=bool(residual <= tolerance),
        )
    return CalibrationReport(per_block, tolerance, forecast_id, loss_id,
                             data_model_id)


def marginal_gamble_residual(mu: float, c_width: float, c_loss: float,
                             action: int, outcome: int) -> float:
    """Loss left to the agent after the marginally desirable side bet.

    For the binary interval forecast [mu - c_width, mu + c_width] and the
    cost-sensitive loss, the residual l(a, omega) - MG(omega) with stakes
    b = l(a,1) - l(a,0) is constant in omega: (1-c) * upper endpoint for
    a = 0 and c * (1 - lower endpoint) for a = 1.
    """
    if c_width < 0 or mu - c_width < 0.0 or mu + c_width > 1.0:
        raise InvalidInputError("interval [mu-c_width, mu+c_width] must lie in [0,1]")
    if not 0.0 < c_loss < 1.0:
        raise InvalidInputError("cost parameter must lie strictly in (0,1)")
    if action not in (0, 1) or outcome not in (0, 1):
        raise InvalidInputError("action and outcome must be binary")
    loss_now = (1.0 - c_loss) * outcome if action == 0 else c_loss * (1 - outcome)
    stakes = (1.0 - c_loss) if action == 0 else -c_loss
    side_bet = stakes * (outcome - mu) - abs(stakes) * c_width
    return float(loss_now - side_bet)
