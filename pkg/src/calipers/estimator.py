"""Binning schemes over the lensed output space and the plug-in error estimate.

The metric is a weighted sum over occupied bins: each bin contributes
(count / n_selected) times the distance between its mean lensed output
and mean lensed target.  Per-bin means use exact summation so the value
is independent of record order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import Dataset
from .distances import DistanceSpec, InterInterval, Weighted, distance
from .errors import DistanceLensMismatch, EmptySelection, InvalidSpec
from .lenses import LensSpec, TopKLens, apply_lens_dataset
from .selectors import AllSelector, SelectorSpec, select


@dataclass(frozen=True)
class UniformBinning:
    """Per-axis grid of ``bins`` equal-width cells over [low, high].

    A point exactly on an interior boundary goes to the higher bin; the
    top edge closes the last bin.  Points outside the range are clamped
    to the boundary.
    """

    bins: int
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if int(self.bins) < 1:
            raise InvalidSpec(f"bin count must be at least 1, got {self.bins}")
        object.__setattr__(self, "bins", int(self.bins))
        lo, hi = float(self.low), float(self.high)
        if not lo < hi:
            raise InvalidSpec(f"need low < high, got [{lo!r}, {hi!r}]")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    def spec_text(self) -> str:
        if (self.low, self.high) == (0.0, 1.0):
            return f"uniform:{self.bins}"
        return f"uniform:{self.bins}:{self.low!r}:{self.high!r}"


@dataclass(frozen=True)
class AdaptiveBinning:
    """Recursive median-split (k-d) partition.

    No bin holds more than ceil(gamma * n) points.  Split dimensions
    cycle in coordinate order; the lower median goes to the left child;
    ties on the split coordinate break by original point index.
    """

    gamma: float

    def __post_init__(self):
        g = float(self.gamma)
        if not 0.0 < g <= 1.0:
            raise InvalidSpec(f"gamma must be in (0, 1], got {g!r}")
        object.__setattr__(self, "gamma", g)

    def spec_text(self) -> str:
        return f"adaptive:{self.gamma!r}"


BinningSpec = Union[UniformBinning, AdaptiveBinning]


@dataclass(frozen=True, eq=False)
class Bin:
    """One cell: member row indices (ascending) and its axis-aligned box."""

    member_indices: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mean_output: np.ndarray | None = None
    mean_target: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Binning:
    """A partition of the lensed points into disjoint, covering bins."""

    bins: tuple[Bin, ...]
    n_points: int

    def occupancies(self) -> np.ndarray:
        return np.array([b.member_indices.size for b in self.bins], dtype=np.int64)


@dataclass(frozen=True)
class BinReport:
    count: int
    mean_output: tuple[float, ...]
    mean_target: tuple[float, ...]
    distance: float


@dataclass(frozen=True, eq=False)
class MetricResult:
    """A metric value with its per-bin breakdown and provenance."""

    value: float
    per_bin: tuple[BinReport, ...]
    n_selected: int
    config: dict

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "n": self.n_selected,
            "bins": [
                {
                    "count": b.count,
                    "mean_output": list(b.mean_output),
                    "mean_target": list(b.mean_target),
                    "distance": b.distance,
                }
                for b in self.per_bin
            ],
            "config": dict(self.config),
        }


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidSpec("points must form a non-empty (n, d) array")
    return pts


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def bin_uniform(points, bins: int, bounds: tuple[float, float] = (0.0, 1.0)) -> Binning:
    """Grid-bin the points; empty cells are never materialized."""
    spec = UniformBinning(bins, bounds[0], bounds[1])
    pts = _as_points(points)
    n, dim = pts.shape
    width = (spec.high - spec.low) / spec.bins
    clipped = np.clip(pts, spec.low, spec.high)
    cells = np.floor((clipped - spec.low) / width).astype(np.int64)
    np.minimum(cells, spec.bins - 1, out=cells)  # close the top edge
    unique, inverse = np.unique(cells, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    out = []
    for j, cell in enumerate(unique):
        members = np.flatnonzero(inverse == j)
        lower = spec.low + cell * width
        upper = spec.low + (cell + 1) * width
        out.append(Bin(_readonly(members), _readonly(lower.astype(np.float64)), _readonly(upper.astype(np.float64))))
    return Binning(bins=tuple(out), n_points=n)


def bin_adaptive(points, gamma: float) -> Binning:
    """Median-split the points until every leaf holds <= ceil(gamma * n)."""
    spec = AdaptiveBinning(gamma)
    pts = _as_points(points)
    n, dim = pts.shape
    cap = math.ceil(spec.gamma * n)
    out = []
    stack = [(np.arange(n, dtype=np.int64), 0, np.zeros(dim), np.ones(dim))]
    while stack:
        idx, depth, lower, upper = stack.pop()
        if idx.size <= cap:
            out.append(Bin(_readonly(np.sort(idx)), _readonly(lower), _readonly(upper)))
            continue
        axis = depth % dim
        order = np.lexsort((idx, pts[idx, axis]))
        half = (idx.size + 1) // 2  # lower median stays left
        left, right = idx[order[:half]], idx[order[half:]]
        boundary = float(pts[idx[order[half]], axis])
        left_upper = upper.copy()
        left_upper[axis] = boundary
        right_lower = lower.copy()
        right_lower[axis] = boundary
        stack.append((right, depth + 1, right_lower, upper))
        stack.append((left, depth + 1, lower, left_upper))
    return Binning(bins=tuple(out), n_points=n)


def _exact_mean(rows: np.ndarray) -> np.ndarray:
    """Column means via fsum: exactly rounded, hence order-independent."""
    n = rows.shape[0]
    return np.array([math.fsum(rows[:, j]) / n for j in range(rows.shape[1])])


def summarize_bins(binning: Binning, outputs, targets) -> Binning:
    """Attach per-bin mean outputs and mean targets."""
    outs = _as_points(outputs)
    tgts = _as_points(targets)
    enriched = []
    for b in binning.bins:
        idx = b.member_indices
        enriched.append(
            Bin(
                member_indices=idx,
                lower=b.lower,
                upper=b.upper,
                mean_output=_readonly(_exact_mean(outs[idx])),
                mean_target=_readonly(_exact_mean(tgts[idx])),
            )
        )
    return Binning(bins=tuple(enriched), n_points=binning.n_points)


def _build_binning(spec: BinningSpec, outputs: np.ndarray) -> Binning:
    if isinstance(spec, UniformBinning):
        return bin_uniform(outputs, spec.bins, (spec.low, spec.high))
    return bin_adaptive(outputs, spec.gamma)


def gece(
    dataset: Dataset,
    lens: LensSpec,
    selector: SelectorSpec,
    dist: DistanceSpec,
    binning: BinningSpec,
    *,
    seed: int | None = None,
) -> MetricResult:
    """Histogram estimate of the expected calibration error.

    Pipeline: select records, lens each (output, target) pair, bin the
    lensed outputs, then sum (count / n) * distance(mean output, mean
    target) over occupied bins.  Deterministic given its inputs; ``seed``
    is echoed into the provenance only.
    """
    selected = select(selector, dataset)
    if len(selected) == 0:
        raise EmptySelection(f"selector {selector.spec_text()!r} matched no records")
    outputs, targets = apply_lens_dataset(lens, selected)
    kprime = outputs.shape[1]
    if isinstance(dist, InterInterval) and kprime != 1:
        raise DistanceLensMismatch(f"interval distance needs a scalar lens, got k'={kprime}")
    if isinstance(dist, Weighted) and dist.matrix.shape[0] != kprime:
        raise DistanceLensMismatch(
            f"weight matrix is {dist.matrix.shape[0]}-dimensional but the lens yields k'={kprime}"
        )
    result = summarize_bins(_build_binning(binning, outputs), outputs, targets)
    n = len(selected)
    reports = []
    for b in result.bins:
        reports.append(
            BinReport(
                count=int(b.member_indices.size),
                mean_output=tuple(float(x) for x in b.mean_output),
                mean_target=tuple(float(x) for x in b.mean_target),
                distance=distance(dist, b.mean_output, b.mean_target),
            )
        )
    value = math.fsum(r.count / n * r.distance for r in reports)
    config = {
        "lens": lens.spec_text(),
        "selector": selector.spec_text(),
        "distance": dist.spec_text(),
        "binning": binning.spec_text(),
        "seed": seed,
    }
    return MetricResult(value=value, per_bin=tuple(reports), n_selected=n, config=config)


def traditional_ece(dataset: Dataset, *, seed: int | None = None) -> MetricResult:
    """Top-1 preset: max-output lens, TVD, 15 uniform bins over [0, 1]."""
    from .distances import TVD

    return gece(
        dataset,
        TopKLens(1),
        AllSelector(),
        TVD(),
        UniformBinning(15, 0.0, 1.0),
        seed=seed,
    )
