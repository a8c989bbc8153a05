"""Evaluation-subset selection by conditions on labels or classifier outputs.

Selection happens before binning: adaptive bins are recomputed on the
selected subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .core import Dataset
from .errors import InvalidClassIndex, InvalidSpec

EQUALITY_TOLERANCE = 1e-9

_COMPARATORS = ("<", "<=", ">", ">=", "=")
_PROJECTIONS = ("maxprob", "classprob", "scalar")


@dataclass(frozen=True)
class AllSelector:
    """Tautology: keeps every record."""

    def spec_text(self) -> str:
        return "all"


@dataclass(frozen=True)
class LabelEquals:
    label: int

    def __post_init__(self):
        if int(self.label) < 0:
            raise InvalidClassIndex(f"label must be non-negative, got {self.label}")
        object.__setattr__(self, "label", int(self.label))

    def spec_text(self) -> str:
        return f"label={self.label}"


@dataclass(frozen=True)
class LabelInGroup:
    labels: frozenset[int]

    def __post_init__(self):
        labels = frozenset(int(i) for i in self.labels)
        if not labels:
            raise InvalidSpec("label group must be non-empty")
        if any(i < 0 for i in labels):
            raise InvalidClassIndex("label group contains a negative index")
        object.__setattr__(self, "labels", labels)

    def spec_text(self) -> str:
        return "label-in=" + ",".join(str(i) for i in sorted(self.labels))


@dataclass(frozen=True)
class OutputCompare:
    """Compare a scalar projection of the raw output vector to a threshold.

    Projections: ``maxprob`` (largest probability), ``classprob`` (the
    probability of ``class_index``), ``scalar`` (class-1 probability of a
    binary problem, the scalar convention).  Equality uses a 1e-9
    tolerance because outputs are floats.
    """

    projection: str
    comparator: str
    threshold: float
    class_index: int | None = None

    def __post_init__(self):
        if self.projection not in _PROJECTIONS:
            raise InvalidSpec(f"unknown projection {self.projection!r}")
        if self.comparator not in _COMPARATORS:
            raise InvalidSpec(f"unknown comparator {self.comparator!r}")
        t = float(self.threshold)
        if not 0.0 <= t <= 1.0:
            raise InvalidSpec(f"threshold must be in [0, 1], got {t!r}")
        object.__setattr__(self, "threshold", t)
        if self.projection == "classprob":
            if self.class_index is None or int(self.class_index) < 0:
                raise InvalidClassIndex("classprob projection needs a class index")
            object.__setattr__(self, "class_index", int(self.class_index))
        elif self.class_index is not None:
            raise InvalidSpec(f"{self.projection} projection takes no class index")

    def spec_text(self) -> str:
        name = f"p{self.class_index}" if self.projection == "classprob" else self.projection
        return f"{name}{self.comparator}{self.threshold!r}"


@dataclass(frozen=True)
class Conjunction:
    """Logical AND of selectors."""

    clauses: tuple["SelectorSpec", ...]

    def __post_init__(self):
        clauses = tuple(self.clauses)
        if not clauses:
            raise InvalidSpec("conjunction must have at least one clause")
        object.__setattr__(self, "clauses", clauses)

    def spec_text(self) -> str:
        return ",".join(c.spec_text() for c in self.clauses)


SelectorSpec = Union[AllSelector, LabelEquals, LabelInGroup, OutputCompare, Conjunction]


def conjunction(clauses: Iterable[SelectorSpec]) -> SelectorSpec:
    """AND the clauses together, collapsing the single-clause case."""
    clauses = tuple(clauses)
    if len(clauses) == 1:
        return clauses[0]
    return Conjunction(clauses)


def selection_mask(selector: SelectorSpec, dataset: Dataset) -> np.ndarray:
    """Boolean keep-mask over the dataset's records."""
    if isinstance(selector, AllSelector):
        return np.ones(len(dataset), dtype=bool)
    if isinstance(selector, LabelEquals):
        if selector.label >= dataset.k:
            raise InvalidClassIndex(f"label {selector.label} outside [0, {dataset.k})")
        return dataset.labels == selector.label
    if isinstance(selector, LabelInGroup):
        bad = [i for i in selector.labels if i >= dataset.k]
        if bad:
            raise InvalidClassIndex(f"labels {sorted(bad)} outside [0, {dataset.k})")
        return np.isin(dataset.labels, sorted(selector.labels))
    if isinstance(selector, OutputCompare):
        values = _project(selector, dataset)
        return _compare(selector.comparator, values, selector.threshold)
    mask = np.ones(len(dataset), dtype=bool)
    for clause in selector.clauses:
        mask &= selection_mask(clause, dataset)
    return mask


def select(selector: SelectorSpec, dataset: Dataset) -> Dataset:
    """Subset of records satisfying the selector, original order kept.

    An empty result is returned as-is; the estimator decides whether
    emptiness is an error.
    """
    mask = selection_mask(selector, dataset)
    if mask.all():
        return dataset
    return dataset.take(np.flatnonzero(mask))


def _project(selector: OutputCompare, dataset: Dataset) -> np.ndarray:
    if selector.projection == "maxprob":
        return dataset.probs.max(axis=1)
    if selector.projection == "classprob":
        if selector.class_index >= dataset.k:
            raise InvalidClassIndex(f"class {selector.class_index} outside [0, {dataset.k})")
        return dataset.probs[:, selector.class_index]
    if dataset.k != 2:
        raise InvalidSpec("scalar projection requires a binary (k=2) problem")
    return dataset.probs[:, 1]


def _compare(op: str, values: np.ndarray, threshold: float) -> np.ndarray:
    if op == "<":
        return values < threshold
    if op == "<=":
        return values <= threshold
    if op == ">":
        return values > threshold
    if op == ">=":
        return values >= threshold
    return np.abs(values - threshold) <= EQUALITY_TOLERANCE
