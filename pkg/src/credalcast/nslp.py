"""Synthetic data under the non-stationary locally precise model: each draw
comes from one generating vertex of a credal set, and the group tag records
which one.

Streams are reproducible from the documented recipe: a Philox-4x64-10
stream derived from (seed, "nslp") yields first the vertex-selection
integers (only for the iid policy), then one uniform per draw, mapped
through the selected vertex's inverse CDF.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import InvalidInputError
from .spaces import CredalSet, OutcomeSpace, ProbVec

SELECTION_POLICIES = ("fixed_sequence", "iid_uniform", "cyclic")


@dataclass(frozen=True, eq=False)
class GroupedDataset:
    """Rows of (feature vector, binary label, group tag).

    ``outcome_index`` is carried when rows come from a finite outcome space
    (the synthetic generator keeps it; CSV ingestion of raw feature data
    does not).
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    group_labels: tuple[str, ...] | None = None
    outcome_index: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        g = np.asarray(self.groups)
        if X.ndim != 2:
            raise InvalidInputError("features must be a 2-D array")
        n = X.shape[0]
        if y.shape != (n,) or g.shape != (n,):
            raise InvalidInputError("labels/groups must align with feature rows")
        if not np.all((y == 0) | (y == 1)):
            raise InvalidInputError("labels must be binary")
        if len(self.feature_names) != X.shape[1]:
            raise InvalidInputError("one name per feature column required")
        for arr in (X,):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("features must be finite")
        g = g.astype(int)
        if g.size and g.min() < 0:
            raise InvalidInputError("group tags must be nonnegative")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(int))
        object.__setattr__(self, "groups", g)
        if self.outcome_index is not None:
            idx = np.asarray(self.outcome_index, dtype=int)
            if idx.shape != (n,):
                raise InvalidInputError("outcome_index must align with rows")
            object.__setattr__(self, "outcome_index", idx)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_groups(self) -> int:
        return int(self.groups.max()) + 1 if self.groups.size else 0

    def group_rows(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.groups == group)

    def require_nonempty_groups(self) -> None:
        for group in range(self.n_groups):
            if self.group_rows(group).size == 0:
                raise InvalidInputError(f"group {group} has no rows")

    def subset(self, rows: np.ndarray) -> "GroupedDataset":
        return GroupedDataset(
            self.features[rows], self.labels[rows], self.groups[rows],
            self.feature_names, self.group_labels,
            None if self.outcome_index is None else self.outcome_index[rows],
        )

    def with_features(self, features: np.ndarray,
                      feature_names: tuple[str, ...]) -> "GroupedDataset":
        return GroupedDataset(features, self.labels, self.groups, feature_names,
                              self.group_labels, self.outcome_index)


@dataclass(frozen=True, eq=False)
class NSLPSpec:
    """Sampling plan: which vertex generates each draw, and how many."""

    data_model: CredalSet
    n: int
    seed: int
    selection: str = "cyclic"
    sequence: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.selection not in SELECTION_POLICIES:
            raise InvalidInputError(f"unknown selection policy {self.selection!r}")
        if self.n < 1:
            raise InvalidInputError("sample count must be at least 1")
        if self.selection == "fixed_sequence":
            if self.sequence is None or len(self.sequence) != self.n:
                raise InvalidInputError("fixed_sequence needs one index per draw")
            seq = tuple(int(i) for i in self.sequence)
            if any(not 0 <= i < self.data_model.n_vertices for i in seq):
                raise InvalidInputError("fixed_sequence index out of range")
            object.__setattr__(self, "sequence", seq)

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "selection": self.selection,
            "rng": _rng.RNG_ALGORITHM,
            "rng_stream_label": "nslp",
            "n_vertices": self.data_model.n_vertices,
        }


def sample_nslp(spec: NSLPSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw outcome indices and their group tags (= generating vertex)."""
    generator = _rng.stream(spec.seed, "nslp")
    n_vertices = spec.data_model.n_vertices
    if spec.selection == "fixed_sequence":
        chosen = np.asarray(spec.sequence, dtype=int)
    elif spec.selection == "cyclic":
        chosen = np.arange(spec.n) % n_vertices
    else:
        chosen = generator.integers(0, n_vertices, size=spec.n)
    uniforms = generator.random(spec.n)
    cdfs = np.cumsum(spec.data_model.matrix, axis=1)
    cdfs[:, -1] = 1.0
    outcomes = np.empty(spec.n, dtype=int)
    for vertex in range(n_vertices):
        rows = np.flatnonzero(chosen == vertex)
        if rows.size:
            outcomes[rows] = np.searchsorted(cdfs[vertex], uniforms[rows], side="right")
    return outcomes, chosen


def dataset_from_outcomes(outcomes: np.ndarray, groups: np.ndarray,
                          space: OutcomeSpace) -> GroupedDataset:
    """One-hot feature columns (one per feature value) plus binary labels."""
    outcomes = np.asarray(outcomes, dtype=int)
    labels = space.binary_labels()[outcomes]
    feature_of = space.feature_array
    x_val = feature_of[outcomes]
    features = np.zeros((outcomes.size, space.n_features))
    features[np.arange(outcomes.size), x_val] = 1.0
    names = tuple(f"x{j}" for j in range(space.n_features))
    return GroupedDataset(features, labels, np.asarray(groups, dtype=int), names,
                          outcome_index=outcomes)


def empirical_group_credal(ds: GroupedDataset, space: OutcomeSpace) -> CredalSet:
    """One empirical distribution per group, as the vertices of a credal set."""
    if ds.outcome_index is None:
        raise InvalidInputError(
            "dataset carries no outcome indices; empirical credal sets need a "
            "finite outcome alphabet")
    vertices = []
    for group in range(ds.n_groups):
        rows = ds.group_rows(group)
        if rows.size == 0:
            raise InvalidInputError(f"group {group} has no rows")
        counts = np.bincount(ds.outcome_index[rows], minlength=space.k).astype(float)
        vertices.append(ProbVec(counts / counts.sum()))
    return CredalSet(space, tuple(vertices))
