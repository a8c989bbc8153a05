"""Synthetic datasets with known calibration error, plus a reference estimator.

The generators are seed-deterministic fixtures whose true error is known
in closed form; ``oracle_gece`` recomputes the histogram estimate with
plain Python loops and shares no code with the estimator module, so the
two can validate each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Dataset
from .distances import InterInterval, L2, TVD, Weighted
from .errors import EmptySelection, InvalidSpec
from .lenses import ClassConditionalLens, FullLens, GroupingLens, TopKLens
from .selectors import (
    AllSelector,
    Conjunction,
    EQUALITY_TOLERANCE,
    LabelEquals,
    LabelInGroup,
    OutputCompare,
)


@dataclass(frozen=True)
class CalibratedSpec:
    """g ~ Dirichlet(alpha * 1), y ~ Categorical(g): true error is zero."""

    alpha: float
    k: int
    n: int
    seed: int

    def __post_init__(self):
        if float(self.alpha) <= 0:
            raise InvalidSpec("alpha must be positive")
        if int(self.k) < 2:
            raise InvalidSpec("need at least two classes")
        if int(self.n) < 1:
            raise InvalidSpec("need at least one record")


@dataclass(frozen=True)
class TwoPointBinarySpec:
    """Half the outputs at class-1 probability 0.3, half at 0.7; labels
    Bernoulli(0.5) regardless.  True binary full error is exactly 0.2."""

    n: int
    seed: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidSpec("need at least one record")


@dataclass(frozen=True)
class SharpenedSpec:
    """Overconfident variant: outputs softmax(inv_temp * log g) while
    labels still come from the original calibrated g."""

    base: CalibratedSpec
    inv_temp: float

    def __post_init__(self):
        if float(self.inv_temp) <= 1.0:
            raise InvalidSpec("inverse temperature must exceed 1")


@dataclass(frozen=True)
class ConstantBinarySpec:
    """Every record outputs p; labels Bernoulli(rate).  True error |p - rate|."""

    p: float
    rate: float
    n: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= float(self.p) <= 1.0 or not 0.0 <= float(self.rate) <= 1.0:
            raise InvalidSpec("p and rate must lie in [0, 1]")
        if int(self.n) < 1:
            raise InvalidSpec("need at least one record")


GeneratorSpec = Union[CalibratedSpec, TwoPointBinarySpec, SharpenedSpec, ConstantBinarySpec]


def _dirichlet(rng: np.random.Generator, alpha: float, k: int, n: int) -> np.ndarray:
    # k independent Gamma draws normalized; portable across platforms
    draws = rng.gamma(alpha, 1.0, size=(n, k))
    sums = draws.sum(axis=1)
    degenerate = sums <= 0.0
    if np.any(degenerate):
        draws[degenerate] = 1.0
        sums = draws.sum(axis=1)
    return draws / sums[:, None]


def _categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    labels = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(labels, probs.shape[1] - 1)


def generate(spec: GeneratorSpec) -> Dataset:
    """Materialize the dataset described by ``spec``; seed-deterministic."""
    if isinstance(spec, CalibratedSpec):
        rng = np.random.default_rng(spec.seed)
        probs = _dirichlet(rng, float(spec.alpha), spec.k, spec.n)
        labels = _categorical(rng, probs)
        return Dataset(labels, probs=probs)
    if isinstance(spec, TwoPointBinarySpec):
        rng = np.random.default_rng(spec.seed)
        n_low = spec.n // 2
        p1 = np.concatenate([np.full(n_low, 0.3), np.full(spec.n - n_low, 0.7)])
        probs = np.column_stack([1.0 - p1, p1])
        labels = (rng.random(spec.n) < 0.5).astype(np.int64)
        return Dataset(labels, probs=probs)
    if isinstance(spec, SharpenedSpec):
        rng = np.random.default_rng(spec.base.seed)
        base_probs = _dirichlet(rng, float(spec.base.alpha), spec.base.k, spec.base.n)
        labels = _categorical(rng, base_probs)
        logits = spec.inv_temp * np.log(np.clip(base_probs, 1e-300, None))
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        return Dataset(labels, probs=e / e.sum(axis=1, keepdims=True))
    if isinstance(spec, ConstantBinarySpec):
        rng = np.random.default_rng(spec.seed)
        probs = np.tile([1.0 - spec.p, spec.p], (spec.n, 1))
        labels = (rng.random(spec.n) < spec.rate).astype(np.int64)
        return Dataset(labels, probs=probs)
    raise InvalidSpec(f"unknown generator spec {spec!r}")


# ---------------------------------------------------------------------------
# Reference estimator.  Deliberately re-implements selection, lensing,
# binning and the distances with per-record Python loops; used in tests
# to cross-check the vectorized estimator.  Keep it boring.
# ---------------------------------------------------------------------------


def oracle_gece(dataset, lens, selector, dist, binning) -> float:
    probs = dataset.probs.tolist()
    labels = dataset.labels.tolist()
    k = dataset.k

    selected = [i for i in range(len(labels)) if _oracle_keep(selector, probs[i], labels[i], k)]
    if not selected:
        raise EmptySelection("oracle: selector matched no records")

    outs, tgts = [], []
    for i in selected:
        o, t = _oracle_lens(lens, probs[i], labels[i], k)
        outs.append(o)
        tgts.append(t)

    groups = _oracle_bins(binning, outs)

    n = len(selected)
    total = 0.0
    for members in groups:
        kp = len(outs[0])
        mean_o = [sum(outs[m][j] for m in members) / len(members) for j in range(kp)]
        mean_t = [sum(tgts[m][j] for m in members) / len(members) for j in range(kp)]
        total += (len(members) / n) * _oracle_distance(dist, mean_o, mean_t)
    return total


def _oracle_keep(selector, g, label, k) -> bool:
    if isinstance(selector, AllSelector):
        return True
    if isinstance(selector, LabelEquals):
        return label == selector.label
    if isinstance(selector, LabelInGroup):
        return label in selector.labels
    if isinstance(selector, OutputCompare):
        if selector.projection == "maxprob":
            v = max(g)
        elif selector.projection == "classprob":
            v = g[selector.class_index]
        else:
            v = g[1]
        t = selector.threshold
        if selector.comparator == "<":
            return v < t
        if selector.comparator == "<=":
            return v <= t
        if selector.comparator == ">":
            return v > t
        if selector.comparator == ">=":
            return v >= t
        return abs(v - t) <= EQUALITY_TOLERANCE
    if isinstance(selector, Conjunction):
        return all(_oracle_keep(c, g, label, k) for c in selector.clauses)
    raise InvalidSpec(f"oracle: unknown selector {selector!r}")


def _oracle_lens(lens, g, label, k):
    y = [1.0 if j == label else 0.0 for j in range(k)]
    if isinstance(lens, FullLens):
        return list(g), y
    if isinstance(lens, TopKLens):
        ranked = sorted(range(k), key=lambda j: (-g[j], j))[: lens.k_sel]
        return [g[j] for j in ranked], [y[j] for j in ranked]
    if isinstance(lens, GroupingLens):
        return (
            [sum(g[j] for j in grp) for grp in lens.groups],
            [sum(y[j] for j in grp) for grp in lens.groups],
        )
    if isinstance(lens, ClassConditionalLens):
        return [g[lens.index]], [y[lens.index]]
    raise InvalidSpec(f"oracle: unknown lens {lens!r}")


def _oracle_bins(binning, outs):
    n = len(outs)
    dim = len(outs[0])
    if hasattr(binning, "bins"):  # uniform grid
        width = (binning.high - binning.low) / binning.bins
        cells: dict[tuple, list[int]] = {}
        for i, o in enumerate(outs):
            key = []
            for x in o:
                x = min(max(x, binning.low), binning.high)
                j = int(math.floor((x - binning.low) / width))
                key.append(min(j, binning.bins - 1))
            cells.setdefault(tuple(key), []).append(i)
        return [cells[key] for key in sorted(cells)]
    cap = math.ceil(binning.gamma * n)
    bins: list[list[int]] = []

    def divide(members, depth):
        if len(members) <= cap:
            bins.append(sorted(members))
            return
        axis = depth % dim
        ordered = sorted(members, key=lambda i: (outs[i][axis], i))
        half = (len(ordered) + 1) // 2
        divide(ordered[:half], depth + 1)
        divide(ordered[half:], depth + 1)

    divide(list(range(n)), 0)
    return bins


def _oracle_distance(dist, mean_o, mean_t) -> float:
    if isinstance(dist, TVD):
        if len(mean_o) == 1:
            return abs(mean_o[0] - mean_t[0])
        return 0.5 * sum(abs(a - b) for a, b in zip(mean_o, mean_t))
    if isinstance(dist, L2):
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(mean_o, mean_t)))
    if isinstance(dist, InterInterval):
        ybar = mean_t[0]
        return max(0.0, dist.low - ybar, ybar - dist.high)
    if isinstance(dist, Weighted):
        d = [a - b for a, b in zip(mean_o, mean_t)]
        m = dist.matrix.tolist()
        quad = sum(d[i] * m[i][j] * d[j] for i in range(len(d)) for j in range(len(d)))
        return math.sqrt(max(0.0, quad))
    raise InvalidSpec(f"oracle: unknown distance {dist!r}")
