"""Scalar discrepancy functions between mean lensed outputs and targets.

The total variation distance on length-1 pairs follows the binary scalar
convention: a scalar v stands for the pair [1-v, v], whose half-l1
distance collapses to |g - y|.  Longer vectors use the plain formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InterIntervalOnNonScalar,
    InvalidSpec,
    NonFiniteInput,
    NonPSDMatrix,
)

PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class TVD:
    """Total variation distance, half the l1 norm of the difference."""

    def spec_text(self) -> str:
        return "tvd"


@dataclass(frozen=True)
class L2:
    """Euclidean norm of the difference."""

    def spec_text(self) -> str:
        return "l2"


@dataclass(frozen=True)
class InterInterval:
    """Hinge distance for a confidence band [low, high].

    Zero while the mean target stays inside the band, then grows
    linearly with the excursion.  Only the mean target matters; the mean
    output argument is kept for interface uniformity.
    """

    low: float
    high: float

    def __post_init__(self):
        lo, hi = float(self.low), float(self.high)
        if not (0.0 <= lo < hi <= 1.0):
            raise InvalidSpec(f"need 0 <= low < high <= 1, got [{lo!r}, {hi!r}]")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    def spec_text(self) -> str:
        return f"interval:{self.low!r}:{self.high!r}"


@dataclass(frozen=True, eq=False)
class Weighted:
    """Generalized Mahalanobis distance sqrt(d^T M d).

    The matrix is symmetrized as (M + M^T)/2 on construction and must be
    positive semi-definite within tolerance; off-diagonal weights price
    specific confusions between classes.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.size == 0:
            raise InvalidSpec("weight matrix must be square and non-empty")
        if not np.all(np.isfinite(m)):
            raise NonFiniteInput("weight matrix contains NaN or infinity")
        sym = (m + m.T) / 2.0
        smallest = float(np.linalg.eigvalsh(sym)[0])
        if smallest < -PSD_TOLERANCE:
            raise NonPSDMatrix(f"smallest eigenvalue {smallest!r} below -{PSD_TOLERANCE!r}")
        sym.flags.writeable = False
        object.__setattr__(self, "matrix", sym)

    def spec_text(self) -> str:
        return "weighted:" + ";".join(
            ",".join(repr(float(x)) for x in row) for row in self.matrix
        )


DistanceSpec = Union[TVD, L2, InterInterval, Weighted]


def validate_weight_matrix(matrix: Sequence[Sequence[float]]) -> Weighted:
    """Symmetrize and PSD-check a user-supplied weight matrix."""
    return Weighted(np.asarray(matrix, dtype=np.float64))


def distance(spec: DistanceSpec, g_bar: Sequence[float], y_bar: Sequence[float]) -> float:
    """Nonnegative discrepancy between mean output and mean target."""
    g = np.asarray(g_bar, dtype=np.float64)
    y = np.asarray(y_bar, dtype=np.float64)
    if g.shape != y.shape or g.ndim != 1 or g.size == 0:
        raise DimensionMismatch(f"shapes {g.shape} and {y.shape} are incompatible")
    if isinstance(spec, TVD):
        if g.size == 1:
            return abs(float(g[0]) - float(y[0]))
        return 0.5 * float(np.abs(g - y).sum())
    if isinstance(spec, L2):
        return float(np.linalg.norm(g - y))
    if isinstance(spec, InterInterval):
        if g.size != 1:
            raise InterIntervalOnNonScalar(f"interval distance needs k'=1, got {g.size}")
        ybar = float(y[0])
        return max(0.0, spec.low - ybar, ybar - spec.high)
    if spec.matrix.shape[0] != g.size:
        raise DimensionMismatch(
            f"weight matrix is {spec.matrix.shape[0]}x{spec.matrix.shape[0]}, vectors have length {g.size}"
        )
    d = g - y
    return math.sqrt(max(0.0, float(d @ spec.matrix @ d)))
