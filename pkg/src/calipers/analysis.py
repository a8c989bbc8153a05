"""Bootstrap diagnostics for the estimator and descriptive output profiles.

Resampling streams are split per (grid index, resample index) with
``np.random.SeedSequence(seed, spawn_key=(i, j))`` so resamples can run
in parallel and still reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset
from .distances import DistanceSpec
from .errors import EmptySelection, FractionTooSmall, InvalidSpec
from .estimator import AdaptiveBinning, Binning, gece
from .lenses import GroupingLens, LensSpec, apply_lens_dataset
from .selectors import AllSelector, LabelInGroup, SelectorSpec, select

# Powers of two from 1 down to 2^-8, coarse to fine.
DEFAULT_GAMMA_GRID: tuple[float, ...] = tuple(2.0 ** -i for i in range(9))

DEFAULT_STABILITY_EPSILON = 0.005
FALLBACK_GAMMA = 0.1


@dataclass(frozen=True)
class SweepResult:
    """Bootstrap mean/std of the adaptive-binning metric per gamma."""

    gammas: tuple[float, ...]
    mean_ece: tuple[float, ...]
    std_ece: tuple[float, ...]
    n_resamples: int
    recommended_gamma: float
    plateau_found: bool
    seed: int

    def to_dict(self) -> dict:
        return {
            "gammas": list(self.gammas),
            "mean_ece": list(self.mean_ece),
            "std_ece": list(self.std_ece),
            "n_resamples": self.n_resamples,
            "recommended_gamma": self.recommended_gamma,
            "plateau_found": self.plateau_found,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class VarianceProfile:
    """Bootstrap std of the metric at shrinking sample fractions."""

    fractions: tuple[float, ...]
    std_ece: tuple[float, ...]
    n_resamples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "fractions": list(self.fractions),
            "std_ece": list(self.std_ece),
            "n_resamples": self.n_resamples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class BinStats:
    median: float
    min: int
    max: int


def _resample_rng(seed: int, grid_index: int, resample_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(grid_index, resample_index))
    )


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # two-pass, population std: a single resample has std exactly 0
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def gamma_sweep(
    dataset: Dataset,
    lens: LensSpec,
    selector: SelectorSpec,
    dist: DistanceSpec,
    gamma_grid: Sequence[float] = DEFAULT_GAMMA_GRID,
    n_resamples: int = 1000,
    seed: int = 0,
    *,
    stability_epsilon: float = DEFAULT_STABILITY_EPSILON,
) -> SweepResult:
    """Bootstrap the adaptive-binning metric over a coarse-to-fine gamma grid.

    Each resample draws n records with replacement from the n selected
    records.  The recommended gamma is the coarsest one whose mean is
    within ``stability_epsilon`` of the next finer gamma's mean; when no
    such plateau exists the baseline 0.1 is returned.
    """
    grid = tuple(float(g) for g in gamma_grid)
    if not grid:
        raise InvalidSpec("gamma grid must be non-empty")
    if any(not 0.0 < g <= 1.0 for g in grid):
        raise InvalidSpec("gammas must lie in (0, 1]")
    if any(a <= b for a, b in zip(grid[1:], grid[2:])) or (len(grid) > 1 and grid[0] <= grid[1]):
        raise InvalidSpec("gamma grid must be sorted descending (coarse to fine)")
    if n_resamples < 1:
        raise InvalidSpec("need at least one resample")

    base = select(selector, dataset)
    if len(base) == 0:
        raise EmptySelection(f"selector {selector.spec_text()!r} matched no records")
    n = len(base)

    means, stds = [], []
    for i, gamma in enumerate(grid):
        values = []
        for j in range(n_resamples):
            rng = _resample_rng(seed, i, j)
            sample = base.take(rng.integers(0, n, size=n))
            values.append(gece(sample, lens, AllSelector(), dist, AdaptiveBinning(gamma)).value)
        m, s = _mean_std(values)
        means.append(m)
        stds.append(s)

    recommended, found = FALLBACK_GAMMA, False
    for i in range(len(grid) - 1):
        if abs(means[i] - means[i + 1]) < stability_epsilon:
            recommended, found = grid[i], True
            break

    return SweepResult(
        gammas=grid,
        mean_ece=tuple(means),
        std_ece=tuple(stds),
        n_resamples=n_resamples,
        recommended_gamma=recommended,
        plateau_found=found,
        seed=seed,
    )


def variance_profile(
    dataset: Dataset,
    lens: LensSpec,
    selector: SelectorSpec,
    dist: DistanceSpec,
    gamma: float,
    fractions: Sequence[float],
    n_resamples: int = 1000,
    seed: int = 0,
) -> VarianceProfile:
    """Bootstrap std of the metric when drawing floor(f * n) records."""
    fracs = tuple(float(f) for f in fractions)
    if not fracs or any(not 0.0 < f <= 1.0 for f in fracs):
        raise InvalidSpec("fractions must be a non-empty subset of (0, 1]")
    if n_resamples < 1:
        raise InvalidSpec("need at least one resample")
    binning = AdaptiveBinning(gamma)

    base = select(selector, dataset)
    if len(base) == 0:
        raise EmptySelection(f"selector {selector.spec_text()!r} matched no records")
    n = len(base)

    stds = []
    for i, frac in enumerate(fracs):
        draws = int(math.floor(frac * n))
        if draws == 0:
            raise FractionTooSmall(f"fraction {frac!r} of {n} records draws nothing")
        values = []
        for j in range(n_resamples):
            rng = _resample_rng(seed, i, j)
            sample = base.take(rng.integers(0, n, size=draws))
            values.append(gece(sample, lens, AllSelector(), dist, binning).value)
        stds.append(_mean_std(values)[1])

    return VarianceProfile(fractions=fracs, std_ece=tuple(stds), n_resamples=n_resamples, seed=seed)


def bin_stats(binning: Binning) -> BinStats:
    """Median, min and max points per bin."""
    occ = binning.occupancies()
    if occ.size == 0:
        raise InvalidSpec("binning has no bins")
    return BinStats(median=float(np.median(occ)), min=int(occ.min()), max=int(occ.max()))


def confidence_profile(dataset: Dataset, ks: Sequence[int]) -> tuple[float, ...]:
    """Mean of the k-th largest output, for each k in ``ks`` (1-based)."""
    ks = [int(k) for k in ks]
    if any(k < 1 or k > dataset.k for k in ks):
        raise InvalidSpec(f"ks must lie in [1, {dataset.k}]")
    if not ks:
        return ()
    ranked = -np.sort(-dataset.probs, axis=1)
    means = ranked.mean(axis=0)
    return tuple(float(means[k - 1]) for k in ks)


def topk_accuracy(dataset: Dataset, ks: Sequence[int]) -> tuple[float, ...]:
    """Fraction of records whose label ranks among the k largest outputs."""
    ks = [int(k) for k in ks]
    if any(k < 1 or k > dataset.k for k in ks):
        raise InvalidSpec(f"ks must lie in [1, {dataset.k}]")
    if not ks:
        return ()
    order = np.argsort(-dataset.probs, axis=1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(dataset.k)[None, :], axis=1)
    label_rank = rank[np.arange(len(dataset)), dataset.labels]
    return tuple(float(np.mean(label_rank < k)) for k in ks)


def mean_entropy(dataset: Dataset) -> float:
    """Mean output entropy in nats, with 0 * ln 0 = 0."""
    p = dataset.probs
    terms = np.where(p > 0.0, -p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(terms.sum(axis=1).mean())


def group_conditional_confidence(
    dataset: Dataset, grouping: GroupingLens, group: int
) -> np.ndarray:
    """Mean grouped output over records whose label falls in ``group``."""
    if not isinstance(grouping, GroupingLens):
        raise InvalidSpec("group-conditional confidence needs a grouping lens")
    if not 0 <= int(group) < len(grouping.groups):
        raise InvalidSpec(f"group {group} outside [0, {len(grouping.groups)})")
    members = grouping.groups[int(group)]
    selected = select(LabelInGroup(frozenset(members)), dataset)
    if len(selected) == 0:
        raise EmptySelection(f"no records labeled within group {group}")
    outputs, _ = apply_lens_dataset(grouping, selected)
    return outputs.mean(axis=0)
