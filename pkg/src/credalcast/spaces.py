"""Finite outcome spaces, gambles, probability vectors and credal sets.

A credal set is represented by a finite list of generating probability
vectors (its vertices) and is understood up to closed convex hull: every
functional computed here (upper/lower expectations and probabilities) is
attained at a vertex, so no hull construction is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng as _rng
from . import serialize
from .errors import DimensionMismatchError, InvalidInputError

#: entries this far below zero are clamped; anything lower is rejected
NEG_CLAMP = 1e-12
#: raw probability vectors whose mass deviates more than this are rejected
SUM_TOL = 1e-6
#: default agreement tolerance for support-function comparisons
HULL_TOL = 1e-9


@dataclass(frozen=True)
class OutcomeSpace:
    """Finite possibility space with a feature map X and optional label map Y.

    ``feature_of[i]`` is the feature-value index of outcome ``i``; feature
    values must be exactly ``0..J-1`` with every value attained.
    ``label_of[i]``, when given, is the real label of outcome ``i``.
    """

    labels: tuple[str, ...]
    feature_of: tuple[int, ...]
    label_of: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.labels) < 2:
            raise InvalidInputError("outcome space needs k >= 2 outcomes")
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "feature_of", tuple(int(x) for x in self.feature_of))
        if len(self.feature_of) != self.k:
            raise InvalidInputError("feature_of must assign a value to every outcome")
        values = set(self.feature_of)
        if min(values) != 0 or values != set(range(len(values))):
            raise InvalidInputError("feature values must be contiguous 0..J-1")
        if self.label_of is not None:
            labels = tuple(float(y) for y in self.label_of)
            if len(labels) != self.k or not all(np.isfinite(labels)):
                raise InvalidInputError("label_of must be k finite reals")
            object.__setattr__(self, "label_of", labels)
        feature_array = np.asarray(self.feature_of)
        feature_array.setflags(write=False)
        blocks = tuple(np.flatnonzero(feature_array == x)
                       for x in range(max(values) + 1))
        for block in blocks:
            block.setflags(write=False)
        object.__setattr__(self, "_feature_array", feature_array)
        object.__setattr__(self, "_blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return max(self.feature_of) + 1

    @property
    def feature_array(self) -> np.ndarray:
        """The feature map as a read-only integer array."""
        return self._feature_array

    def feature_block(self, x: int) -> np.ndarray:
        """Outcome indices with X = x."""
        if not 0 <= x < self.n_features:
            raise InvalidInputError(f"feature value {x} out of range")
        return self._blocks[x]

    def feature_blocks(self) -> tuple[np.ndarray, ...]:
        return self._blocks

    def indicator(self, event: Iterable[int]) -> Gamble:
        """Indicator gamble of an event (a set of outcome indices)."""
        chi = np.zeros(self.k)
        for i in event:
            if not 0 <= int(i) < self.k:
                raise InvalidInputError(f"outcome index {i} out of range")
            chi[int(i)] = 1.0
        return Gamble(chi)

    def binary_labels(self) -> np.ndarray:
        """The label map as an int array, requiring labels in {0, 1}."""
        if self.label_of is None:
            raise InvalidInputError("outcome space carries no label map")
        y = np.asarray(self.label_of)
        if not np.all((y == 0.0) | (y == 1.0)):
            raise InvalidInputError("label map is not binary")
        return y.astype(int)

    def to_dict(self) -> dict:
        doc = {"outcomes": list(self.labels), "feature_of": list(self.feature_of)}
        if self.label_of is not None:
            doc["label_of"] = [float(y) for y in self.label_of]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "OutcomeSpace":
        return cls(
            labels=tuple(doc["outcomes"]),
            feature_of=tuple(doc["feature_of"]),
            label_of=tuple(doc["label_of"]) if "label_of" in doc else None,
        )


def _as_vector(values, k: int | None = None) -> np.ndarray:
    arr = np.asarray(values.values if isinstance(values, Gamble) else values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("expected a one-dimensional vector")
    if k is not None and arr.shape[0] != k:
        raise DimensionMismatchError(f"expected length {k}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class Gamble:
    """Bounded real function on the outcome space, stored per outcome."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.values)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("gamble entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __neg__(self) -> "Gamble":
        return Gamble(-self.values)

    def __add__(self, other) -> "Gamble":
        other_values = other.values if isinstance(other, Gamble) else other
        return Gamble(self.values + other_values)

    def __sub__(self, other) -> "Gamble":
        other_values = other.values if isinstance(other, Gamble) else other
        return Gamble(self.values - other_values)

    def __mul__(self, scalar: float) -> "Gamble":
        return Gamble(self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ProbVec:
    """Point of the probability simplex, normalized at construction.

    Entries in [-1e-12, 0) are clamped to zero; more negative entries and
    total mass off by more than 1e-6 are rejected.
    """

    p: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.p)
        if arr.shape[0] < 2:
            raise InvalidInputError("probability vector needs k >= 2 entries")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("probabilities must be finite")
        if np.any(arr < -NEG_CLAMP):
            raise InvalidInputError("negative probability entry")
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {total}, not 1")
        arr = arr / total
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def __len__(self) -> int:
        return self.p.shape[0]

    def expectation(self, gamble) -> float:
        z = _as_vector(gamble, len(self))
        return float(self.p @ z)


@dataclass(frozen=True, eq=False)
class CredalSet:
    """Imprecise probability generated by finitely many vertices.

    The set is identified with the closed convex hull of its vertices;
    upper expectations are computed exactly as a maximum over vertices.
    """

    space: OutcomeSpace
    vertices: tuple[ProbVec, ...]
    _matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        verts = tuple(
            v if isinstance(v, ProbVec) else ProbVec(np.asarray(v, dtype=float))
            for v in self.vertices
        )
        if not verts:
            raise InvalidInputError("credal set needs at least one vertex")
        for v in verts:
            if len(v) != self.space.k:
                raise DimensionMismatchError("vertex length differs from |Omega|")
        object.__setattr__(self, "vertices", verts)
        matrix = np.vstack([v.p for v in verts])
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)

    @property
    def matrix(self) -> np.ndarray:
        """Vertices stacked as an (m, k) array."""
        return self._matrix

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def is_singleton(self) -> bool:
        return self.n_vertices == 1

    # -- coherent upper/lower functionals -------------------------------

    def upper_expectation(self, gamble) -> float:
        z = _as_vector(gamble, self.space.k)
        return float(np.max(self._matrix @ z))

    def lower_expectation(self, gamble) -> float:
        z = _as_vector(gamble, self.space.k)
        return -float(np.max(self._matrix @ (-z)))

    def upper_probability(self, event: Iterable[int]) -> float:
        return self.upper_expectation(self.space.indicator(event))

    def lower_probability(self, event: Iterable[int]) -> float:
        return self.lower_expectation(self.space.indicator(event))

    # -- hull realizations ----------------------------------------------

    def mixture(self, weights: Sequence[float]) -> ProbVec:
        """Convex combination of the vertices (a point of the hull)."""
        w = _as_vector(weights, self.n_vertices)
        if np.any(w < -1e-9):
            raise InvalidInputError("mixture weight negative beyond tolerance")
        if abs(w.sum() - 1.0) > 1e-6:
            raise InvalidInputError("mixture weights must sum to one")
        w = np.clip(w, 0.0, None)
        return ProbVec(w @ self._matrix / w.sum())

    def hull_equivalent(self, other: "CredalSet", tol: float = HULL_TOL) -> bool:
        """Support-function agreement on a deterministic gamble battery.

        Sound but approximate: agreement on the battery is necessary for
        hull equality, and any disagreement certifies the hulls differ.
        """
        if other.space.k != self.space.k:
            raise DimensionMismatchError("credal sets on different spaces")
        for z in _hull_battery(self.space.k):
            if abs(self.upper_expectation(z) - other.upper_expectation(z)) > tol:
                return False
        return True

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        doc = self.space.to_dict()
        doc["vertices"] = [[float(p) for p in v.p] for v in self.vertices]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CredalSet":
        space = OutcomeSpace.from_dict(doc)
        return cls(space, tuple(ProbVec(np.asarray(v)) for v in doc["vertices"]))

    def to_json(self) -> str:
        return serialize.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CredalSet":
        import json

        return cls.from_dict(json.loads(text))


_BATTERY_CACHE: dict[int, np.ndarray] = {}


def _hull_battery(k: int) -> np.ndarray:
    """Deterministic test gambles: all nontrivial indicators (k <= 12) plus
    256 seeded standard-normal gambles."""
    if k not in _BATTERY_CACHE:
        rows = []
        if k <= 12:
            for mask in range(1, 2**k - 1):
                rows.append([(mask >> i) & 1 for i in range(k)])
        generator = _rng.stream(0, f"hull-battery/k={k}")
        rows.extend(generator.standard_normal((256, k)))
        battery = np.asarray(rows, dtype=float)
        battery.setflags(write=False)
        _BATTERY_CACHE[k] = battery
    return _BATTERY_CACHE[k]


def singleton(space: OutcomeSpace, p) -> CredalSet:
    """Credal set holding a single probability vector."""
    return CredalSet(space, (p if isinstance(p, ProbVec) else ProbVec(np.asarray(p)),))


def binary_space(feature_trivial: bool = True) -> OutcomeSpace:
    """Two-outcome space {Y=0, Y=1} with a trivial feature map."""
    del feature_trivial
    return OutcomeSpace(labels=("y=0", "y=1"), feature_of=(0, 0), label_of=(0.0, 1.0))


def binary_interval(low: float, high: float) -> CredalSet:
    """Interval [low, high] of probabilities for Y=1 on the binary space."""
    if not 0.0 <= low <= high <= 1.0:
        raise InvalidInputError("need 0 <= low <= high <= 1")
    space = binary_space()
    return CredalSet(space, (ProbVec([1.0 - low, low]), ProbVec([1.0 - high, high])))
