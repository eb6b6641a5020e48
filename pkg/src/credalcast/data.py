"""CSV ingestion, standardization, interaction features, stratified splits."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as _rng
from .errors import InvalidInputError
from .nslp import GroupedDataset


def load_csv(path, label_col: str = "label", group_col: str = "group",
             feature_cols: list[str] | None = None) -> GroupedDataset:
    """Parse a comma-separated file with a header row into a dataset.

    Labels must be 0/1; group values (any strings) are mapped to contiguous
    ids in sorted order; unparsable numbers are reported with their row
    index.  Row order is preserved.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for col in (label_col, group_col):
            if col not in header:
                raise InvalidInputError(f"missing column {col!r}")
        if feature_cols is None:
            feature_cols = [c for c in header if c not in (label_col, group_col)]
        for col in feature_cols:
            if col not in header:
                raise InvalidInputError(f"missing column {col!r}")
        rows, labels, group_values = [], [], []
        for index, record in enumerate(reader):
            raw_label = (record[label_col] or "").strip()
            if raw_label not in ("0", "1"):
                raise InvalidInputError(
                    f"row {index}: label {raw_label!r} is not binary")
            labels.append(int(raw_label))
            try:
                rows.append([float(record[col]) for col in feature_cols])
            except (TypeError, ValueError):
                raise InvalidInputError(
                    f"row {index}: unparsable number in feature columns") from None
            group_values.append((record[group_col] or "").strip())
    if not rows:
        raise InvalidInputError(f"{path} contains no data rows")
    unique_groups = sorted(set(group_values))
    group_id = {name: i for i, name in enumerate(unique_groups)}
    groups = np.asarray([group_id[v] for v in group_values])
    return GroupedDataset(
        np.asarray(rows, dtype=float), np.asarray(labels), groups,
        tuple(feature_cols), tuple(unique_groups))


def save_csv(ds: GroupedDataset, path) -> None:
    """Write a dataset back out; floats printed with 17 significant digits so
    a reload is bit-exact."""
    path = Path(path)
    group_name = (lambda g: ds.group_labels[g]) if ds.group_labels else str
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(ds.feature_names) + ["label", "group"])
        for i in range(ds.n_rows):
            row = [f"{v:.17g}" for v in ds.features[i]]
            writer.writerow(row + [str(int(ds.labels[i])), group_name(int(ds.groups[i]))])


def interaction_features(features: np.ndarray,
                         names: tuple[str, ...] | None = None,
                         enabled: bool = True):
    """Append all pairwise products x_i * x_j (i < j); no squares, no bias."""
    X = np.asarray(features, dtype=float)
    if names is None:
        names = tuple(f"f{i}" for i in range(X.shape[1]))
    if not enabled:
        return X, tuple(names)
    columns = [X]
    new_names = list(names)
    for i in range(X.shape[1]):
        for j in range(i + 1, X.shape[1]):
            columns.append((X[:, i] * X[:, j])[:, None])
            new_names.append(f"{names[i]}*{names[j]}")
    return np.hstack(columns), tuple(new_names)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature affine map fit on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean],
                "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Standardizer":
        return cls(np.asarray(doc["mean"], dtype=float),
                   np.asarray(doc["std"], dtype=float))


def fit_standardizer(X: np.ndarray) -> Standardizer:
    """Mean/std per column; constant columns keep std = 1 (with a warning)."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = std == 0.0
    if np.any(constant):
        warnings.warn(
            f"{int(constant.sum())} constant feature column(s); std set to 1",
            stacklevel=2)
        std = np.where(constant, 1.0, std)
    return Standardizer(mean, std)


def split(ds: GroupedDataset, test_fraction: float,
          seed: int) -> tuple[GroupedDataset, GroupedDataset]:
    """Seeded shuffle split, stratified by group; errors if a group empties."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError("test fraction must lie strictly in (0,1)")
    ds.require_nonempty_groups()
    generator = _rng.stream(seed, "split")
    train_rows, test_rows = [], []
    for group in range(ds.n_groups):
        rows = ds.group_rows(group)
        permuted = rows[generator.permutation(rows.size)]
        n_test = int(round(test_fraction * rows.size))
        if n_test == 0 or n_test == rows.size:
            raise InvalidInputError(
                f"group {group} would be emptied by a {test_fraction} split")
        test_rows.append(np.sort(permuted[:n_test]))
        train_rows.append(np.sort(permuted[n_test:]))
    return (ds.subset(np.concatenate(train_rows)),
            ds.subset(np.concatenate(test_rows)))
