"""Classification data with a sensitive attribute.

A dataset is a fixed collection of examples (features, sensitive group,
label).  Features always carry a trailing constant-1 intercept coordinate,
appended at load/synthesis time, so that downstream ridge regularization
covers the intercept and strong convexity holds for the full parameter
matrix.  Categorical sensitive/label values are mapped to dense integer ids
in first-appearance order; the mapping is stored on the dataset so CSV
round-trips reproduce it exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

from .exceptions import DataError, EmptyDatasetError, ParseError, SchemaError


class Example(NamedTuple):
    features: np.ndarray
    sensitive: int
    label: int


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled dataset.

    Attributes
    ----------
    features : (n, p) float64 array, last column the constant intercept
    sensitive : (n,) integer ids in [0, num_sensitive)
    labels : (n,) integer ids in [0, num_labels)
    label_values, sensitive_values : original categorical values, indexed
        by dense id (first-appearance order)
    feature_names : CSV column names, excluding the intercept
    """

    features: np.ndarray
    sensitive: np.ndarray
    labels: np.ndarray
    num_labels: int
    num_sensitive: int
    label_values: tuple[str, ...]
    sensitive_values: tuple[str, ...]
    feature_names: tuple[str, ...]
    sensitive_col: str = "s"
    label_col: str = "y"

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        sensitive = np.asarray(self.sensitive, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise EmptyDatasetError("dataset must contain at least one example")
        n = features.shape[0]
        if sensitive.shape != (n,) or labels.shape != (n,):
            raise ValueError("features, sensitive and labels must have matching length")
        if not np.all(np.isfinite(features)):
            raise ValueError("all feature entries must be finite")
        if labels.min() < 0 or labels.max() >= self.num_labels:
            raise ValueError("label id out of declared range")
        if sensitive.min() < 0 or sensitive.max() >= self.num_sensitive:
            raise ValueError("sensitive id out of declared range")
        for arr in (features, sensitive, labels):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "sensitive", sensitive)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        """Feature dimension, intercept included."""
        return self.features.shape[1]

    @property
    def feature_norm_bound(self) -> float:
        """Largest Euclidean row norm, max_i ||x_i||_2."""
        return float(np.max(np.linalg.norm(self.features, axis=1)))

    def example(self, i: int) -> Example:
        return Example(self.features[i], int(self.sensitive[i]), int(self.labels[i]))

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Example]:
        return (self.example(i) for i in range(self.n))

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Dataset restricted to ``indices``; id mappings are inherited."""
        indices = np.asarray(indices)
        return replace(
            self,
            features=self.features[indices],
            sensitive=self.sensitive[indices],
            labels=self.labels[indices],
        )


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint cover of a dataset's examples by K groups."""

    num_groups: int
    assignment: np.ndarray
    proportions: np.ndarray
    descriptions: tuple[str, ...]

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        proportions = np.asarray(self.proportions, dtype=np.float64)
        if proportions.shape != (self.num_groups,):
            raise ValueError("proportions must have one entry per group")
        if abs(proportions.sum() - 1.0) > 1e-12:
            raise ValueError("group proportions must sum to 1")
        if assignment.size and (assignment.min() < 0 or assignment.max() >= self.num_groups):
            raise ValueError("group assignment out of range")
        assignment.setflags(write=False)
        proportions.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "proportions", proportions)

    def members(self, k: int) -> np.ndarray:
        """Indices of examples assigned to group k."""
        return np.flatnonzero(self.assignment == k)

    def is_empty(self, k: int) -> bool:
        return self.proportions[k] == 0.0


def _format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(x))


def load_csv(path: str, sensitive_col: str, label_col: str) -> Dataset:
    """Load a UTF-8 comma-separated file with a mandatory header row.

    One column is the sensitive attribute, one is the label; every other
    column must be numeric and becomes a feature.  An intercept coordinate
    (constant 1) is appended after the named feature columns.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty")
        if sensitive_col not in header:
            raise SchemaError(f"{path}: no column named {sensitive_col!r} for the sensitive role")
        if label_col not in header:
            raise SchemaError(f"{path}: no column named {label_col!r} for the label role")
        if sensitive_col == label_col:
            raise SchemaError("sensitive and label roles must name distinct columns")
        s_idx = header.index(sensitive_col)
        y_idx = header.index(label_col)
        feat_idx = [j for j in range(len(header)) if j not in (s_idx, y_idx)]
        feature_names = tuple(header[j] for j in feat_idx)

        rows: list[list[float]] = []
        sens_raw: list[str] = []
        lab_raw: list[str] = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {row_num} has {len(row)} cells, expected {len(header)}")
            try:
                rows.append([float(row[j]) for j in feat_idx])
            except ValueError as exc:
                raise ParseError(f"{path}: row {row_num}: non-numeric feature cell ({exc})")
            sens_raw.append(row[s_idx])
            lab_raw.append(row[y_idx])

    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")

    sens_values: list[str] = []
    lab_values: list[str] = []
    sens_ids = [_dense_id(v, sens_values) for v in sens_raw]
    lab_ids = [_dense_id(v, lab_values) for v in lab_raw]

    features = np.asarray(rows, dtype=np.float64)
    features = np.hstack([features, np.ones((features.shape[0], 1))])
    return Dataset(
        features=features,
        sensitive=np.asarray(sens_ids),
        labels=np.asarray(lab_ids),
        num_labels=len(lab_values),
        num_sensitive=len(sens_values),
        label_values=tuple(lab_values),
        sensitive_values=tuple(sens_values),
        feature_names=feature_names,
        sensitive_col=sensitive_col,
        label_col=label_col,
    )


def _dense_id(value: str, seen: list[str]) -> int:
    try:
        return seen.index(value)
    except ValueError:
        seen.append(value)
        return len(seen) - 1


def write_csv(d: Dataset, path: str) -> None:
    """Inverse of :func:`load_csv`: drops the intercept, restores original
    categorical values, prints features at full round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(d.feature_names) + [d.sensitive_col, d.label_col])
        for i in range(d.n):
            feats = [_format_float(v) for v in d.features[i, :-1]]
            writer.writerow(feats + [d.sensitive_values[d.sensitive[i]], d.label_values[d.labels[i]]])


@dataclass(frozen=True)
class CellSpec:
    """Gaussian cell of a synthetic dataset: one (label, sensitive) pair."""

    count: int
    mean: np.ndarray
    cov: np.ndarray  # (p,) diagonal or (p, p) full, positive semi-definite


@dataclass(frozen=True)
class SyntheticSpec:
    num_features: int
    cells: dict[tuple[int, int], CellSpec]  # keyed by (label, sensitive)


def synthesize(spec: SyntheticSpec, seed: int) -> Dataset:
    """Draw a dataset from per-cell Gaussians, deterministically per seed.

    Cell counts are honored exactly; rows appear in sorted (label, sensitive)
    cell order.  Counts of zero are allowed (the cell simply contributes no
    rows); a zero total raises EmptyDatasetError.
    """
    total = sum(c.count for c in spec.cells.values())
    if total == 0:
        raise EmptyDatasetError("synthetic spec has zero total count")
    for key, cell in spec.cells.items():
        if cell.count < 0:
            raise ValueError(f"cell {key}: negative count")

    rng = np.random.default_rng(seed)
    blocks: list[np.ndarray] = []
    sens: list[np.ndarray] = []
    labs: list[np.ndarray] = []
    for (label, sensitive), cell in sorted(spec.cells.items()):
        if cell.count == 0:
            continue
        mean = np.asarray(cell.mean, dtype=np.float64)
        cov = np.asarray(cell.cov, dtype=np.float64)
        if mean.shape != (spec.num_features,):
            raise ValueError(f"cell ({label},{sensitive}): mean has wrong length")
        if cov.ndim == 1:
            if cov.shape != (spec.num_features,) or np.any(cov < 0):
                raise ValueError(f"cell ({label},{sensitive}): bad diagonal covariance")
            block = mean + np.sqrt(cov) * rng.standard_normal((cell.count, spec.num_features))
        else:
            block = rng.multivariate_normal(mean, cov, size=cell.count)
        blocks.append(block)
        sens.append(np.full(cell.count, sensitive))
        labs.append(np.full(cell.count, label))

    features = np.vstack(blocks)
    features = np.hstack([features, np.ones((features.shape[0], 1))])
    num_labels = max(k[0] for k in spec.cells) + 1
    num_sensitive = max(k[1] for k in spec.cells) + 1
    return Dataset(
        features=features,
        sensitive=np.concatenate(sens),
        labels=np.concatenate(labs),
        num_labels=num_labels,
        num_sensitive=num_sensitive,
        label_values=tuple(str(v) for v in range(num_labels)),
        sensitive_values=tuple(str(v) for v in range(num_sensitive)),
        feature_names=tuple(f"f{j}" for j in range(spec.num_features)),
    )


def split(d: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random disjoint (train, test) split; deterministic per seed.

    ``fraction`` is the train share.  Both parts keep the parent's id
    mappings and appear in the parent's row order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("split fraction must lie strictly between 0 and 1")
    n_train = int(round(fraction * d.n))
    if n_train == 0 or n_train == d.n:
        raise ValueError(f"fraction {fraction} leaves an empty part for n={d.n}")
    perm = np.random.default_rng(seed).permutation(d.n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return d.subset(train_idx), d.subset(test_idx)


def partition(d: Dataset, grouping: str) -> GroupPartition:
    """Group the examples ``by_sensitive`` (K = |S|) or
    ``by_label_and_sensitive`` (K = |Y|*|S|, index = label*|S| + sensitive)."""
    if grouping == "by_sensitive":
        num_groups = d.num_sensitive
        assignment = d.sensitive.copy()
        descriptions = tuple(f"{d.sensitive_col}={v}" for v in d.sensitive_values)
    elif grouping == "by_label_and_sensitive":
        num_groups = d.num_labels * d.num_sensitive
        assignment = d.labels * d.num_sensitive + d.sensitive
        descriptions = tuple(
            f"{d.label_col}={ly},{d.sensitive_col}={sv}"
            for ly in d.label_values
            for sv in d.sensitive_values
        )
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    counts = np.bincount(assignment, minlength=num_groups)
    return GroupPartition(
        num_groups=num_groups,
        assignment=assignment,
        proportions=counts / d.n,
        descriptions=descriptions,
    )


def single_group_partition(d: Dataset) -> GroupPartition:
    """Trivial partition with every example in one group (used for plain
    accuracy bounds)."""
    return GroupPartition(
        num_groups=1,
        assignment=np.zeros(d.n, dtype=np.int64),
        proportions=np.array([1.0]),
        descriptions=("all",),
    )
