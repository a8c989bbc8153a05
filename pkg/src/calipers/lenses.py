"""Output/target transformation pairs that induce smaller classification problems.

A lens rewrites each (probability vector, one-hot target) pair into a
lower-dimensional pair whose calibration is then measured: identity,
top-k selection, class grouping, or a single-class slice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .core import Dataset
from .errors import EmptyGroup, InvalidLensForK, InvalidSpec, PartialMap


@dataclass(frozen=True)
class FullLens:
    """Identity transform: the induced problem is the original one."""

    def spec_text(self) -> str:
        return "full"


@dataclass(frozen=True)
class TopKLens:
    """Keep the ``k_sel`` largest outputs (descending) and the targets at
    those argmax positions.  Ties break toward the lowest class index so
    repeated calls bin identically."""

    k_sel: int

    def __post_init__(self):
        if int(self.k_sel) < 1:
            raise InvalidSpec(f"top-k size must be positive, got {self.k_sel}")
        object.__setattr__(self, "k_sel", int(self.k_sel))

    def spec_text(self) -> str:
        return f"topk:{self.k_sel}"


@dataclass(frozen=True)
class GroupingLens:
    """Sum outputs and targets within each group of class indices."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        if not groups:
            raise InvalidSpec("grouping needs at least one group")
        seen: set[int] = set()
        for g in groups:
            if not g:
                raise EmptyGroup("grouping contains an empty group")
            if seen & set(g):
                raise InvalidSpec("groups must be pairwise disjoint")
            seen.update(g)
        if any(i < 0 for i in seen):
            raise InvalidSpec("class indices must be non-negative")
        object.__setattr__(self, "groups", groups)

    def spec_text(self) -> str:
        return "group:" + "|".join(",".join(str(i) for i in g) for g in self.groups)


@dataclass(frozen=True)
class ClassConditionalLens:
    """Slice out a single class: scalar output g[c] against target y[c]."""

    index: int

    def __post_init__(self):
        if int(self.index) < 0:
            raise InvalidSpec(f"class index must be non-negative, got {self.index}")
        object.__setattr__(self, "index", int(self.index))

    def spec_text(self) -> str:
        return f"class:{self.index}"


LensSpec = Union[FullLens, TopKLens, GroupingLens, ClassConditionalLens]


@dataclass(frozen=True, eq=False)
class LensedPair:
    """Transformed (output, target) vectors of equal length k'."""

    output: np.ndarray
    target: np.ndarray


def make_grouping(group_map: Mapping[int, int], k: int) -> GroupingLens:
    """Build a grouping lens from a class-index -> group-index map.

    Group indices are compacted to 0..|G|-1 in order of first appearance
    over class indices 0..k-1 so reports are stable.
    """
    missing = [c for c in range(k) if c not in group_map]
    if missing:
        raise PartialMap(f"group map does not cover classes {missing}")
    order: dict[int, list[int]] = {}
    for c in range(k):
        order.setdefault(int(group_map[c]), []).append(c)
    return GroupingLens(tuple(tuple(members) for members in order.values()))


def _check_lens(lens: LensSpec, k: int) -> None:
    if isinstance(lens, TopKLens) and lens.k_sel > k:
        raise InvalidLensForK(f"top-{lens.k_sel} lens on a {k}-class problem")
    if isinstance(lens, ClassConditionalLens) and lens.index >= k:
        raise InvalidLensForK(f"class {lens.index} lens on a {k}-class problem")
    if isinstance(lens, GroupingLens):
        covered = sorted(i for g in lens.groups for i in g)
        if covered != list(range(k)):
            raise InvalidLensForK(f"groups must partition 0..{k - 1}, cover {covered}")


def _membership_matrix(lens: GroupingLens, k: int) -> np.ndarray:
    m = np.zeros((k, len(lens.groups)))
    for j, g in enumerate(lens.groups):
        m[list(g), j] = 1.0
    return m


def lensed_width(lens: LensSpec, k: int) -> int:
    """Induced output dimension k' of ``lens`` on a k-class problem."""
    _check_lens(lens, k)
    if isinstance(lens, FullLens):
        return k
    if isinstance(lens, TopKLens):
        return lens.k_sel
    if isinstance(lens, GroupingLens):
        return len(lens.groups)
    return 1


def apply_lens_dataset(lens: LensSpec, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized lens application: (n, k') outputs and targets."""
    _check_lens(lens, dataset.k)
    probs = dataset.probs
    targets = dataset.one_hot_targets()
    if isinstance(lens, FullLens):
        return probs, targets
    if isinstance(lens, TopKLens):
        # stable sort on -p keeps the lowest class index first among ties
        order = np.argsort(-probs, axis=1, kind="stable")[:, : lens.k_sel]
        return (
            np.take_along_axis(probs, order, axis=1),
            np.take_along_axis(targets, order, axis=1),
        )
    if isinstance(lens, GroupingLens):
        m = _membership_matrix(lens, dataset.k)
        return probs @ m, targets @ m
    return probs[:, [lens.index]], targets[:, [lens.index]]


def apply_lens(lens: LensSpec, g: np.ndarray, y: np.ndarray) -> LensedPair:
    """Transform a single (probability vector, target vector) pair."""
    g = np.asarray(g, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if g.shape != y.shape or g.ndim != 1:
        raise InvalidSpec("output and target must be 1-d vectors of equal length")
    _check_lens(lens, g.size)
    if isinstance(lens, FullLens):
        return LensedPair(output=g.copy(), target=y.copy())
    if isinstance(lens, TopKLens):
        order = np.argsort(-g, kind="stable")[: lens.k_sel]
        return LensedPair(output=g[order], target=y[order])
    if isinstance(lens, GroupingLens):
        m = _membership_matrix(lens, g.size)
        return LensedPair(output=g @ m, target=y @ m)
    return LensedPair(output=g[[lens.index]], target=y[[lens.index]])
