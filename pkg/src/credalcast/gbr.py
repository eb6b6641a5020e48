"""Generalized Bayes rule: conditioning credal sets on events of positive
lower probability.

Conditional upper expectations are computed two ways on every call —
vertex-wise conditioning, and the root of alpha -> R( chi_B (Z - alpha) )
which depends only on the hull — and cross-checked.  The redundancy turns a
subtle correctness risk into a runtime assertion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .decisions import Forecast
from .errors import CredalcastError, GBRUndefinedError, InvalidInputError
from .losses import LossMatrix
from .spaces import CredalSet, OutcomeSpace, ProbVec

#: strict positivity threshold on the lower probability of the event
LOWER_PROB_MIN = 1e-12
#: the two conditional-expectation routes must agree this closely
ROUTE_TOL = 1e-6
_BISECT_ITERS = 200


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint cover of the outcome space by nonempty labelled blocks.

    ``action_indices``, when set, records which action induced each block
    (filled by the action partition of the calibration module).
    """

    space: OutcomeSpace
    blocks: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]
    action_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.labels) != len(blocks):
            raise InvalidInputError("one label per block required")
        seen: set[int] = set()
        for block in blocks:
            if not block:
                raise InvalidInputError("empty partition block")
            for i in block:
                if not 0 <= i < self.space.k:
                    raise InvalidInputError(f"outcome index {i} out of range")
                if i in seen:
                    raise InvalidInputError(f"outcome {i} appears in two blocks")
                seen.add(i)
        if len(seen) != self.space.k:
            raise InvalidInputError("blocks do not cover the outcome space")
        if self.action_indices is not None and len(self.action_indices) != len(blocks):
            raise InvalidInputError("one action index per block required")

    def __len__(self) -> int:
        return len(self.blocks)

    def indicator(self, index: int) -> np.ndarray:
        chi = np.zeros(self.space.k)
        chi[list(self.blocks[index])] = 1.0
        return chi


def feature_partition(space: OutcomeSpace) -> Partition:
    """Partition of the outcome space by feature value."""
    blocks = tuple(tuple(map(int, b)) for b in space.feature_blocks())
    labels = tuple(f"x={x}" for x in range(space.n_features))
    return Partition(space, blocks, labels)


def trivial_partition(space: OutcomeSpace) -> Partition:
    return Partition(space, (tuple(range(space.k)),), ("all",))


def merge_blocks(partition: Partition, grouping: Sequence[Sequence[int]],
                 labels: Sequence[str] | None = None) -> Partition:
    """Coarsen a partition by merging blocks (grouping indexes blocks)."""
    used = [i for group in grouping for i in group]
    if sorted(used) != list(range(len(partition))):
        raise InvalidInputError("grouping must use every block exactly once")
    blocks = tuple(
        tuple(sorted(i for b in group for i in partition.blocks[b]))
        for group in grouping
    )
    if labels is None:
        labels = tuple("+".join(partition.labels[b] for b in group) for group in grouping)
    return Partition(partition.space, blocks, tuple(labels))


def condition_credal(credal: CredalSet, event: Iterable[int]) -> CredalSet:
    """Credal set of the vertex-wise conditionals P(.|B).

    Requires strictly positive lower probability of the event; near-zero
    lower probabilities make conditionals numerically explosive.
    """
    event = sorted(set(int(i) for i in event))
    if credal.lower_probability(event) <= LOWER_PROB_MIN:
        raise GBRUndefinedError("GBR undefined: zero lower probability")
    chi = credal.space.indicator(event).values
    conditioned = []
    for vertex in credal.vertices:
        masked = vertex.p * chi
        conditioned.append(ProbVec(masked / masked.sum()))
    return CredalSet(credal.space, tuple(conditioned))


def _alpha_root(credal: CredalSet, z: np.ndarray, chi: np.ndarray) -> float:
    """Bisection root of the strictly decreasing alpha -> R(chi_B (Z-alpha))."""
    lo, hi = float(z.min()), float(z.max())
    if hi - lo == 0.0:
        return lo
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if credal.upper_expectation(chi * (z - mid)) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gbr_upper(credal: CredalSet, gamble, event: Iterable[int]) -> float:
    """Conditional upper expectation GBR(Z|B), dual-route checked."""
    event = sorted(set(int(i) for i in event))
    conditioned = condition_credal(credal, event)
    direct = conditioned.upper_expectation(gamble)
    z = np.asarray(gamble.values if hasattr(gamble, "values") else gamble, dtype=float)
    root = _alpha_root(credal, z, credal.space.indicator(event).values)
    if abs(direct - root) > ROUTE_TOL:
        raise CredalcastError(
            f"conditional expectation routes disagree: {direct!r} vs {root!r}")
    return direct


def gbr_lower(credal: CredalSet, gamble, event: Iterable[int]) -> float:
    z = np.asarray(gamble.values if hasattr(gamble, "values") else gamble, dtype=float)
    return -gbr_upper(credal, -z, event)


def gbr_forecast(credal: CredalSet, space: OutcomeSpace | None = None) -> Forecast:
    """Forecast mapping each feature value to the conditioned data model."""
    space = credal.space if space is None else space
    mapping = {}
    for x in range(space.n_features):
        block = [int(i) for i in space.feature_block(x)]
        if credal.lower_probability(block) <= LOWER_PROB_MIN:
            raise GBRUndefinedError(
                f"GBR forecast undefined: feature value {x} has zero lower probability")
        mapping[x] = condition_credal(credal, block)
    return Forecast(space, mapping)
