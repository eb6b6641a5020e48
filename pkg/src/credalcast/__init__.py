"""credalcast: imprecise probabilistic forecasts with coherent upper
expectations, tailored scoring rules, maximum-entropy optimal forecasts,
the generalized Bayes rule, IP calibration diagnostics, and group-DRO
training of linear-sigmoid forecasters."""

from .calibration import (
    BlockReport,
    CalibrationReport,
    action_partition,
    calibration_residual,
    diagnostic_II,
    entropy_price,
    marginal_gamble_residual,
    price_gamble,
)
from .decisions import (
    ActionChoice,
    Forecast,
    constant_forecast,
    ip_score,
    minmax_action,
    recommended_actions,
    score_gamble,
    tailored_score,
)
from .entropy import (
    LiftedAction,
    MaxentResult,
    entropy_conditional,
    entropy_unconditional,
    enumerate_lifted_actions,
    imprecise_entropy,
    lifted_loss_gamble,
    solve_maxent,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    CredalcastError,
    DimensionMismatchError,
    GBRUndefinedError,
    InvalidInputError,
    TrainingError,
)
from .gbr import (
    Partition,
    condition_credal,
    feature_partition,
    gbr_forecast,
    gbr_lower,
    gbr_upper,
    merge_blocks,
    trivial_partition,
)
from .losses import (
    LossMatrix,
    ParametricBinaryLoss,
    cost_sensitive_matrix,
    discretize_action_space,
    winkler_gradient,
    winkler_loss,
)
from .nslp import (
    GroupedDataset,
    NSLPSpec,
    dataset_from_outcomes,
    empirical_group_credal,
    sample_nslp,
)
from .spaces import (
    CredalSet,
    Gamble,
    OutcomeSpace,
    ProbVec,
    binary_interval,
    binary_space,
    singleton,
)
from .training import (
    DROForecaster,
    ERMForecaster,
    GBRForecaster,
    ModelParams,
    TrainConfig,
    fit_gbr,
    model_forecast,
    predict,
    train_dro,
    train_erm,
)

__version__ = "0.1.0"
