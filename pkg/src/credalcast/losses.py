"""Loss families: generic loss matrices, cost-sensitive losses, the
asymmetric strictly proper Winkler-Brier family (with sigmoid smoothing of
its step normalizer), log-loss, and grid discretization of [0,1] actions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError
from .spaces import OutcomeSpace

#: probabilities are clamped to [PROB_CLAMP, 1-PROB_CLAMP] for log-loss
PROB_CLAMP = 1e-12
#: default slope of the sigmoid replacing the Winkler step normalizer
DEFAULT_SMOOTH_F = 1000.0

LOSS_KINDS = ("log", "brier", "cost_sensitive", "winkler")


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """|A| x k table of losses l(a, omega) with a fixed action order.

    The index order of ``action_labels`` is the total order used for
    tie-breaking in MinMax decisions.
    """

    entries: np.ndarray
    action_labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2:
            raise InvalidInputError("loss entries must be a 2-D table")
        if arr.shape[0] < 2:
            raise InvalidInputError("need at least two actions")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("loss entries must be finite")
        labels = tuple(str(s) for s in self.action_labels)
        if len(labels) != arr.shape[0]:
            raise InvalidInputError("one label per action required")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "action_labels", labels)

    @property
    def n_actions(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    def row(self, action: int) -> np.ndarray:
        return self.entries[action]

    def check_space(self, space: OutcomeSpace) -> None:
        if self.k != space.k:
            raise DimensionMismatchError("loss matrix columns differ from |Omega|")

    def scaled(self, alpha: float, beta: float = 0.0) -> "LossMatrix":
        if alpha <= 0:
            raise InvalidInputError("scale factor must be positive")
        return LossMatrix(alpha * self.entries + beta, self.action_labels)

    def to_dict(self) -> dict:
        return {
            "actions": list(self.action_labels),
            "entries": [[float(v) for v in row] for row in self.entries],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LossMatrix":
        return cls(np.asarray(doc["entries"], dtype=float), tuple(doc["actions"]))


def cost_sensitive_matrix(c: float, space: OutcomeSpace) -> LossMatrix:
    """Binary cost-sensitive loss: a=0 costs 1-c on Y=1, a=1 costs c on Y=0."""
    if not 0.0 < c < 1.0:
        raise InvalidInputError("cost parameter must lie strictly in (0,1)")
    y = space.binary_labels()
    entries = np.vstack([(1.0 - c) * y, c * (1.0 - y)])
    return LossMatrix(entries, ("a=0", "a=1"))


# -- Winkler-Brier asymmetric family ------------------------------------


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    expz = np.exp(flat[~pos])
    out[~pos] = expz / (1.0 + expz)
    return out.reshape(z.shape)


def _brier(a, y):
    return (a - y) ** 2


def winkler_loss(c: float, a, y, smoothed: bool = False,
                 smooth_f: float = DEFAULT_SMOOTH_F):
    """Asymmetric strictly proper score built from the Brier loss.

    ``1 - (l2(a,y) - l2(c,y)) / T`` where the normalizer T steps between
    -l2(c,1) (a >= c) and -l2(c,0) (a < c); with ``smoothed=True`` the step
    is replaced by a sigmoid blend of slope ``smooth_f``.
    """
    if not 0.0 < c < 1.0:
        raise InvalidInputError("Winkler parameter c must lie strictly in (0,1)")
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if smoothed:
        if smooth_f <= 0:
            raise InvalidInputError("smoothing slope must be positive")
        alpha = _sigmoid(smooth_f * (a - c))
        t = -alpha * _brier(c, 1.0) - (1.0 - alpha) * _brier(c, 0.0)
    else:
        t = np.where(a >= c, -_brier(c, 1.0), -_brier(c, 0.0))
    value = 1.0 - (_brier(a, y) - _brier(c, y)) / t
    value = np.asarray(value)
    return value if value.shape else float(value)


def winkler_gradient(c: float, a, y, smooth_f: float = DEFAULT_SMOOTH_F):
    """Analytic d/da of the smoothed Winkler loss (including the sigmoid term)."""
    if not 0.0 < c < 1.0:
        raise InvalidInputError("Winkler parameter c must lie strictly in (0,1)")
    if smooth_f <= 0:
        raise InvalidInputError("smoothing slope must be positive")
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = _sigmoid(smooth_f * (a - c))
    t = -alpha * _brier(c, 1.0) - (1.0 - alpha) * _brier(c, 0.0)
    dt = alpha * (1.0 - alpha) * smooth_f * (_brier(c, 0.0) - _brier(c, 1.0))
    numer = _brier(a, y) - _brier(c, y)
    grad = -(2.0 * (a - y) * t - numer * dt) / t**2
    grad = np.asarray(grad)
    return grad if grad.shape else float(grad)


@dataclass(frozen=True)
class ParametricBinaryLoss:
    """Binary-label loss family over actions a in [0,1].

    kinds: ``log`` (clamped at 1e-12), ``brier``, ``cost_sensitive`` (linear
    in a, matching the 2-action matrix at a in {0,1}) and ``winkler``
    (sigmoid-smoothed normalizer of slope ``smooth_f``).
    """

    kind: str
    c: float | None = None
    smooth_f: float = DEFAULT_SMOOTH_F

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidInputError(f"unknown loss kind {self.kind!r}")
        if self.kind in ("cost_sensitive", "winkler"):
            if self.c is None or not 0.0 < self.c < 1.0:
                raise InvalidInputError("parameter c must lie strictly in (0,1)")
        if self.smooth_f <= 0:
            raise InvalidInputError("smoothing slope must be positive")

    @property
    def loss_id(self) -> str:
        if self.kind in ("log", "brier"):
            return self.kind
        return f"{self.kind}({self.c:g})"

    def value(self, a, y):
        a = np.asarray(a, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "log":
            q = np.clip(a, PROB_CLAMP, 1.0 - PROB_CLAMP)
            out = -y * np.log(q) - (1.0 - y) * np.log(1.0 - q)
        elif self.kind == "brier":
            out = _brier(a, y)
        elif self.kind == "cost_sensitive":
            out = (1.0 - a) * (1.0 - self.c) * y + a * self.c * (1.0 - y)
        else:
            out = winkler_loss(self.c, a, y, smoothed=True, smooth_f=self.smooth_f)
        out = np.asarray(out)
        return out if out.shape else float(out)

    def grad(self, a, y):
        """Analytic d(value)/da, used by the gradient trainers."""
        a = np.asarray(a, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "log":
            q = np.clip(a, PROB_CLAMP, 1.0 - PROB_CLAMP)
            out = -y / q + (1.0 - y) / (1.0 - q)
        elif self.kind == "brier":
            out = 2.0 * (a - y)
        elif self.kind == "cost_sensitive":
            out = -(1.0 - self.c) * y + self.c * (1.0 - y)
        else:
            out = winkler_gradient(self.c, a, y, smooth_f=self.smooth_f)
        out = np.asarray(out)
        return out if out.shape else float(out)

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.c is not None:
            doc["c"] = float(self.c)
        if self.kind == "winkler":
            doc["smooth_f"] = float(self.smooth_f)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ParametricBinaryLoss":
        return cls(
            kind=doc["kind"],
            c=doc.get("c"),
            smooth_f=float(doc.get("smooth_f", DEFAULT_SMOOTH_F)),
        )


def discretize_action_space(loss: ParametricBinaryLoss, grid_n: int,
                            space: OutcomeSpace) -> LossMatrix:
    """Loss matrix over the action grid a_j = j/(grid_n-1), j = 0..grid_n-1."""
    if grid_n < 2:
        raise InvalidInputError("need at least two grid actions")
    y = space.binary_labels().astype(float)
    grid = np.linspace(0.0, 1.0, grid_n)
    entries = np.asarray(loss.value(grid[:, None], y[None, :]))
    labels = tuple(f"a={a:.10g}" for a in grid)
    return LossMatrix(entries, labels)
