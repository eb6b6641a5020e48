"""Gradient training of linear-sigmoid forecasters: ERM, group-DRO via
exponentiated-gradient max-min, and per-group fitting whose model list is
consumed as an imprecise forecast.

The outer DRO player maximizes the weighted group loss, so the group
weights are updated by multiplicative ASCENT, lam <- lam * exp(+eta * group
losses): weight concentrates on hard groups.  Inner optimizer state is
reset at every outer round (a fresh inner approximation per weighting).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import rng as _rng
from .data import Standardizer
from .decisions import Forecast
from .errors import InvalidInputError, TrainingError
from .losses import ParametricBinaryLoss
from .nslp import GroupedDataset
from .spaces import CredalSet, OutcomeSpace, ProbVec

#: predictions are clamped into [PRED_CLAMP, 1 - PRED_CLAMP]
PRED_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Linear-sigmoid forecaster weights."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise InvalidInputError("model parameters must be finite")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    def to_dict(self, standardizer: Standardizer | None = None) -> dict:
        doc = {"weights": [float(v) for v in self.weights], "bias": self.bias}
        if standardizer is not None:
            doc["standardizer"] = standardizer.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> tuple["ModelParams", Standardizer | None]:
        params = cls(np.asarray(doc["weights"], dtype=float), float(doc["bias"]))
        standardizer = (Standardizer.from_dict(doc["standardizer"])
                        if "standardizer" in doc else None)
        return params, standardizer


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; the defaults are the reference training procedure
    (2000 outer rounds at eta=0.1 over 500-step inner loops, Adam at 1e-3
    with decay 0.9/0.999 and eps 1e-8, batch 512, 10 gradient batches,
    5000 ERM iterations)."""

    n_outer: int = 2000
    eta: float = 0.1
    n_inner: int = 500
    lr: float = 1e-3
    batch: int = 512
    full_batch: bool = False
    grad_batches: int = 10
    erm_iters: int = 5000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        positive = {
            "n_outer": self.n_outer, "eta": self.eta, "n_inner": self.n_inner,
            "lr": self.lr, "batch": self.batch, "grad_batches": self.grad_batches,
            "erm_iters": self.erm_iters, "eps": self.eps,
        }
        for name, value in positive.items():
            if not value > 0 or not np.isfinite(value):
                raise InvalidInputError(f"{name} must be positive and finite")

    def override(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


def predict(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """sigma(Xw + b), clamped away from {0,1} for log-loss evaluation."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.weights.shape[0]:
        raise InvalidInputError("feature dimension does not match the model")
    z = X @ params.weights + params.bias
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    expz = np.exp(z[~pos])
    out[~pos] = expz / (1.0 + expz)
    return np.clip(out, PRED_CLAMP, 1.0 - PRED_CLAMP)


def _loss_and_grads(params: ModelParams, X: np.ndarray, y: np.ndarray,
                    loss: ParametricBinaryLoss):
    """Mean loss over the rows and its gradient in (weights, bias)."""
    a = predict(params, X)
    values = loss.value(a, y)
    dl_da = loss.grad(a, y)
    dz = dl_da * a * (1.0 - a)
    grad_w = X.T @ dz / X.shape[0]
    grad_b = float(dz.mean())
    return float(np.mean(values)), grad_w, grad_b


class _Adam:
    """Adaptive-moment steps with fixed decay rates."""

    def __init__(self, dim: int, cfg: TrainConfig):
        self.cfg = cfg
        self.m = np.zeros(dim + 1)
        self.v = np.zeros(dim + 1)
        self.t = 0

    def step(self, params: ModelParams, grad_w: np.ndarray,
             grad_b: float) -> ModelParams:
        cfg = self.cfg
        g = np.concatenate([grad_w, [grad_b]])
        self.t += 1
        self.m = cfg.beta1 * self.m + (1.0 - cfg.beta1) * g
        self.v = cfg.beta2 * self.v + (1.0 - cfg.beta2) * g * g
        m_hat = self.m / (1.0 - cfg.beta1**self.t)
        v_hat = self.v / (1.0 - cfg.beta2**self.t)
        delta = cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        return ModelParams(params.weights - delta[:-1], params.bias - delta[-1])


def _draw(generator, n: int, cfg: TrainConfig) -> np.ndarray:
    if cfg.full_batch:
        return np.arange(n)
    return generator.integers(0, n, size=min(cfg.batch, n))


def _check_finite(value: float, where: str) -> None:
    if not np.isfinite(value):
        raise TrainingError(f"non-finite loss during {where}")


def train_erm(ds: GroupedDataset, loss: ParametricBinaryLoss, cfg: TrainConfig,
              stream_label: str = "erm") -> ModelParams:
    """Adam on the mean loss of the stacked data of all groups."""
    if ds.n_rows == 0:
        raise TrainingError("empty dataset")
    generator = _rng.stream(cfg.seed, stream_label)
    params = ModelParams(np.zeros(ds.n_features), 0.0)
    adam = _Adam(ds.n_features, cfg)
    for _ in range(cfg.erm_iters):
        rows = _draw(generator, ds.n_rows, cfg)
        value, grad_w, grad_b = _loss_and_grads(
            params, ds.features[rows], ds.labels[rows], loss)
        _check_finite(value, "ERM training")
        params = adam.step(params, grad_w, grad_b)
    return params


def train_dro(ds: GroupedDataset, loss: ParametricBinaryLoss, cfg: TrainConfig,
              on_round=None) -> tuple[ModelParams, np.ndarray]:
    """Exponentiated-gradient max-min training.

    Returns the final model and the full trace of group weights, one row
    per outer round plus the initial uniform row.
    """
    ds.require_nonempty_groups()
    n_groups = ds.n_groups
    if n_groups == 0:
        raise TrainingError("empty dataset")
    group_X = [ds.features[ds.group_rows(g)] for g in range(n_groups)]
    group_y = [ds.labels[ds.group_rows(g)] for g in range(n_groups)]
    generator = _rng.stream(cfg.seed, "dro")
    params = ModelParams(np.zeros(ds.n_features), 0.0)
    log_lam = np.zeros(n_groups)
    lam = np.full(n_groups, 1.0 / n_groups)
    trace = [lam.copy()]
    for outer in range(cfg.n_outer):
        adam = _Adam(ds.n_features, cfg)
        for _ in range(cfg.n_inner):
            grad_w = np.zeros(ds.n_features)
            grad_b = 0.0
            weighted = 0.0
            for g in range(n_groups):
                rows = _draw(generator, group_y[g].size, cfg)
                value, gw, gb = _loss_and_grads(
                    params, group_X[g][rows], group_y[g][rows], loss)
                weighted += lam[g] * value
                grad_w += lam[g] * gw
                grad_b += lam[g] * gb
            _check_finite(weighted, "DRO inner loop")
            params = adam.step(params, grad_w, grad_b)
        group_losses = np.zeros(n_groups)
        for g in range(n_groups):
            if cfg.full_batch:
                a = predict(params, group_X[g])
                group_losses[g] = float(np.mean(loss.value(a, group_y[g])))
            else:
                acc = 0.0
                for _ in range(cfg.grad_batches):
                    rows = _draw(generator, group_y[g].size, cfg)
                    a = predict(params, group_X[g][rows])
                    acc += float(np.mean(loss.value(a, group_y[g][rows])))
                group_losses[g] = acc / cfg.grad_batches
        _check_finite(float(group_losses.sum()), "DRO weight update")
        # multiplicative ascent in log space; the floor keeps every weight
        # strictly positive through float underflow
        log_lam = log_lam + cfg.eta * group_losses
        log_lam = log_lam - log_lam.max()
        lam = np.maximum(np.exp(log_lam), 1e-300)
        lam = lam / lam.sum()
        trace.append(lam.copy())
        if on_round is not None:
            on_round({
                "iter": outer,
                "weighted_loss": float(lam @ group_losses),
                "group_losses": group_losses.copy(),
                "lam": lam.copy(),
            })
    return params, np.vstack(trace)


def fit_gbr(ds: GroupedDataset, loss: ParametricBinaryLoss,
            cfg: TrainConfig) -> list[ModelParams]:
    """One ERM fit per group; the list acts as an imprecise forecast."""
    ds.require_nonempty_groups()
    models = []
    for g in range(ds.n_groups):
        rows = ds.group_rows(g)
        models.append(train_erm(ds.subset(rows), loss, cfg, stream_label=f"gbr/g{g}"))
    return models


def model_forecast(space: OutcomeSpace, models, feature_matrix: np.ndarray) -> Forecast:
    """Forecast on a finite outcome space from linear-sigmoid models.

    ``feature_matrix`` holds, per feature value x, the feature vector fed to
    the models.  Each model contributes one vertex per x: the distribution
    concentrated on the X = x outcomes with conditional label probability
    q = model(x).  Requires exactly one outcome per (x, label) pair.
    """
    if isinstance(models, ModelParams):
        models = [models]
    feature_matrix = np.asarray(feature_matrix, dtype=float)
    if feature_matrix.shape[0] != space.n_features:
        raise InvalidInputError("one feature vector per feature value required")
    labels = space.binary_labels()
    mapping = {}
    for x in range(space.n_features):
        block = space.feature_block(x)
        pos = block[labels[block] == 1]
        neg = block[labels[block] == 0]
        if pos.size != 1 or neg.size != 1:
            raise InvalidInputError(
                "model forecasts need exactly one outcome per (feature, label)")
        vertices = []
        for model in models:
            q = float(predict(model, feature_matrix[x])[0])
            p = np.zeros(space.k)
            p[pos[0]] = q
            p[neg[0]] = 1.0 - q
            vertices.append(ProbVec(p))
        mapping[x] = CredalSet(space, tuple(vertices))
    return Forecast(space, mapping)


# -- sklearn-style estimator facade --------------------------------------


def _as_loss(loss) -> ParametricBinaryLoss:
    if isinstance(loss, ParametricBinaryLoss):
        return loss
    if isinstance(loss, str):
        return ParametricBinaryLoss(kind=loss)
    if isinstance(loss, dict):
        return ParametricBinaryLoss.from_dict(loss)
    raise InvalidInputError("loss must be a kind name, a dict, or a loss object")


class _LinearSigmoidEstimator(BaseEstimator):
    """Shared plumbing for the fit/predict facade."""

    def __init__(self, loss="log", config=None):
        self.loss = loss
        self.config = config

    def _config(self) -> TrainConfig:
        if self.config is None:
            return TrainConfig()
        if isinstance(self.config, TrainConfig):
            return self.config
        return TrainConfig(**self.config)

    def _dataset(self, X, y, groups=None) -> GroupedDataset:
        X, y = check_X_y(X, y)
        if not np.all((y == 0) | (y == 1)):
            raise InvalidInputError("labels must be binary")
        if groups is None:
            groups = np.zeros(X.shape[0], dtype=int)
        groups = np.asarray(groups, dtype=int)
        names = tuple(f"f{i}" for i in range(X.shape[1]))
        return GroupedDataset(X, y, groups, names)

    def _predict_one(self, params: ModelParams, X) -> np.ndarray:
        X = check_array(X)
        return predict(params, X)


class ERMForecaster(_LinearSigmoidEstimator):
    """Linear-sigmoid forecaster trained on the stacked data."""

    def fit(self, X, y):
        ds = self._dataset(X, y)
        self.params_ = train_erm(ds, _as_loss(self.loss), self._config())
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        q = self._predict_one(self.params_, X)
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


class DROForecaster(_LinearSigmoidEstimator):
    """Worst-group trainer; exposes the group-weight trace after fitting."""

    def fit(self, X, y, groups):
        ds = self._dataset(X, y, groups)
        self.params_, self.lambda_trace_ = train_dro(
            ds, _as_loss(self.loss), self._config())
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        q = self._predict_one(self.params_, X)
        return np.column_stack([1.0 - q, q])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


class GBRForecaster(_LinearSigmoidEstimator):
    """Per-group models whose prediction set is the imprecise forecast."""

    def fit(self, X, y, groups):
        ds = self._dataset(X, y, groups)
        self.params_list_ = fit_gbr(ds, _as_loss(self.loss), self._config())
        return self

    def predict_proba_per_group(self, X):
        check_is_fitted(self, "params_list_")
        return np.column_stack(
            [self._predict_one(p, X) for p in self.params_list_])

    def predict_interval(self, X):
        per_group = self.predict_proba_per_group(X)
        return np.column_stack([per_group.min(axis=1), per_group.max(axis=1)])
