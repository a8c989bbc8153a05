"""Canonical data model: simplex vectors, one-hot targets, prediction records.

A dataset is a batch of prediction records sharing one class count k.
Probabilities live on the simplex; binary problems are stored as k=2
vectors and the scalar convention p == [1-p, p] is applied only at I/O.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    EntryOutOfRange,
    InconsistentWidth,
    IndexOutOfRange,
    InvalidSpec,
    NonFiniteInput,
    ProbsLogitsMismatch,
    SumOutOfTolerance,
)

# Ingested prediction dumps routinely miss exact normalization (32-bit
# pipelines); internal arithmetic is held to the tighter bound.
INGEST_TOLERANCE = 1e-6
INTERNAL_TOLERANCE = 1e-9

_RENORM_THRESHOLD = 1e-15


def validate_simplex(values: Sequence[float], tolerance: float = INTERNAL_TOLERANCE) -> np.ndarray:
    """Validate a probability vector, renormalizing tiny deviations.

    Entries may stray below 0 / above 1 and the sum may deviate from 1
    by at most ``tolerance``; anything worse raises instead of being
    silently repaired.  Vectors that already sum to 1 at machine
    precision are returned with their values untouched.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidSpec("probability vector must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("probability vector contains NaN or infinity")
    if np.any(v < -tolerance) or np.any(v > 1.0 + tolerance):
        bad = float(v[np.argmax(np.abs(v - 0.5))])
        raise EntryOutOfRange(f"entry {bad!r} outside [0, 1] beyond tolerance {tolerance!r}")
    total = float(v.sum())
    if abs(total - 1.0) > tolerance:
        raise SumOutOfTolerance(f"entries sum to {total!r}, expected 1 within {tolerance!r}")
    out = np.clip(v, 0.0, 1.0) if (np.any(v < 0.0) or np.any(v > 1.0)) else v.copy()
    total = float(out.sum())
    if abs(total - 1.0) > _RENORM_THRESHOLD:
        out = out / total
    out.flags.writeable = False
    return out


def one_hot(label: int, k: int) -> np.ndarray:
    """One-hot target vector of length ``k`` with a 1 at ``label``."""
    label = int(label)
    if k < 2:
        raise InvalidSpec(f"class count must be at least 2, got {k}")
    if not 0 <= label < k:
        raise IndexOutOfRange(f"label {label} outside [0, {k})")
    out = np.zeros(k, dtype=np.float64)
    out[label] = 1.0
    out.flags.writeable = False
    return out


def softmax(logits: Sequence[float]) -> np.ndarray:
    """Numerically stable softmax of a single logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise InvalidSpec("softmax needs at least two logits")
    if not np.all(np.isfinite(z)):
        raise NonFiniteInput("logits contain NaN or infinity")
    e = np.exp(z - z.max())
    out = e / e.sum()
    out.flags.writeable = False
    return out


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax for an (n, k) logit matrix."""
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class PredictionRecord:
    """One instance: probability vector and/or logits plus the true class."""

    label: int
    probs: np.ndarray | None = None
    logits: np.ndarray | None = None


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class Dataset:
    """Immutable batch of prediction records with aligned arrays.

    ``probs`` is always populated (computed from logits when only logits
    were supplied); ``logits`` is kept when available so calibrators can
    be fit.  Instances are safe to share across threads.
    """

    __slots__ = ("_probs", "_logits", "_labels", "_class_names", "_targets")

    def __init__(
        self,
        labels: Sequence[int],
        probs: np.ndarray | Sequence[Sequence[float]] | None = None,
        logits: np.ndarray | Sequence[Sequence[float]] | None = None,
        class_names: Sequence[str] | None = None,
        *,
        tolerance: float = INGEST_TOLERANCE,
    ):
        lab = np.asarray(labels)
        if lab.ndim != 1 or lab.size == 0:
            raise InvalidSpec("dataset must contain at least one record")
        if not np.issubdtype(lab.dtype, np.integer):
            rounded = np.rint(lab)
            if not np.all(np.isfinite(lab)) or np.any(rounded != lab):
                raise InvalidSpec("labels must be integers")
            lab = rounded
        lab = lab.astype(np.int64)
        n = lab.size

        if probs is None and logits is None:
            raise InvalidSpec("each record needs probs or logits")

        z = None
        if logits is not None:
            z = np.asarray(logits, dtype=np.float64)
            if z.ndim != 2 or z.shape[0] != n:
                raise InconsistentWidth("logits must be an (n, k) matrix aligned with labels")
            if z.shape[1] < 2:
                raise InvalidSpec("need at least two classes")
            if not np.all(np.isfinite(z)):
                raise NonFiniteInput("logits contain NaN or infinity")

        if probs is not None:
            p = np.asarray(probs, dtype=np.float64)
            if p.ndim != 2 or p.shape[0] != n:
                raise InconsistentWidth("probs must be an (n, k) matrix aligned with labels")
            if p.shape[1] < 2:
                raise InvalidSpec("need at least two classes")
            if z is not None and z.shape[1] != p.shape[1]:
                raise InconsistentWidth("probs and logits disagree on class count")
            p = _validate_rows(p, tolerance)
            if z is not None:
                gap = float(np.max(np.abs(p - softmax_rows(z))))
                if gap > INGEST_TOLERANCE:
                    raise ProbsLogitsMismatch(
                        f"probs differ from softmax(logits) by {gap:.3g} (> {INGEST_TOLERANCE!r})"
                    )
        else:
            p = softmax_rows(z)

        k = p.shape[1]
        if np.any(lab < 0) or np.any(lab >= k):
            bad = int(lab[np.argmax((lab < 0) | (lab >= k))])
            raise IndexOutOfRange(f"label {bad} outside [0, {k})")

        names = None
        if class_names is not None:
            names = tuple(str(c) for c in class_names)
            if len(names) != k:
                raise InconsistentWidth(f"expected {k} class names, got {len(names)}")

        object.__setattr__(self, "_labels", _readonly(lab))
        object.__setattr__(self, "_probs", _readonly(p))
        object.__setattr__(self, "_logits", _readonly(z) if z is not None else None)
        object.__setattr__(self, "_class_names", names)
        object.__setattr__(self, "_targets", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("Dataset is immutable")

    @classmethod
    def _unchecked(cls, labels, probs, logits, class_names) -> "Dataset":
        ds = object.__new__(cls)
        object.__setattr__(ds, "_labels", _readonly(labels))
        object.__setattr__(ds, "_probs", _readonly(probs))
        object.__setattr__(ds, "_logits", _readonly(logits) if logits is not None else None)
        object.__setattr__(ds, "_class_names", class_names)
        object.__setattr__(ds, "_targets", None)
        return ds

    @classmethod
    def from_records(
        cls, records: Sequence[PredictionRecord], class_names: Sequence[str] | None = None
    ) -> "Dataset":
        """Build a dataset from records.

        Logits are kept only when every record carries them; otherwise
        they are dropped and probabilities (computed where needed) are
        stored alone.
        """
        if not records:
            raise InvalidSpec("dataset must contain at least one record")
        widths = set()
        for r in records:
            if r.probs is None and r.logits is None:
                raise InvalidSpec("each record needs probs or logits")
            if r.probs is not None:
                widths.add(len(r.probs))
            if r.logits is not None:
                widths.add(len(r.logits))
        if len(widths) != 1:
            raise InconsistentWidth(f"records disagree on class count: {sorted(widths)}")

        labels = [r.label for r in records]
        all_logits = all(r.logits is not None for r in records)
        logits = np.asarray([r.logits for r in records], dtype=np.float64) if all_logits else None
        if all(r.probs is not None for r in records):
            probs = np.asarray([r.probs for r in records], dtype=np.float64)
        elif all_logits:
            probs = None
        else:
            probs = np.asarray(
                [r.probs if r.probs is not None else softmax(r.logits) for r in records],
                dtype=np.float64,
            )
            logits = None
        return cls(labels, probs=probs, logits=logits, class_names=class_names)

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def logits(self) -> np.ndarray | None:
        return self._logits

    @property
    def class_names(self) -> tuple[str, ...] | None:
        return self._class_names

    @property
    def has_logits(self) -> bool:
        return self._logits is not None

    @property
    def k(self) -> int:
        return int(self._probs.shape[1])

    def __len__(self) -> int:
        return int(self._labels.size)

    def one_hot_targets(self) -> np.ndarray:
        """(n, k) one-hot matrix of the true labels (cached)."""
        cached = self._targets
        if cached is None:
            t = np.zeros_like(self._probs)
            t[np.arange(len(self)), self._labels] = 1.0
            cached = _readonly(t)
            object.__setattr__(self, "_targets", cached)
        return cached

    def record(self, i: int) -> PredictionRecord:
        return PredictionRecord(
            label=int(self._labels[i]),
            probs=self._probs[i],
            logits=self._logits[i] if self._logits is not None else None,
        )

    def records(self) -> Iterator[PredictionRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Row subset (or bootstrap resample) without re-validation."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset._unchecked(
            self._labels[idx],
            self._probs[idx],
            self._logits[idx] if self._logits is not None else None,
            self._class_names,
        )


def _validate_rows(p: np.ndarray, tolerance: float) -> np.ndarray:
    """Vectorized row-wise simplex validation and renormalization."""
    if not np.all(np.isfinite(p)):
        row = int(np.argmax(~np.all(np.isfinite(p), axis=1)))
        raise NonFiniteInput(f"record {row}: probabilities contain NaN or infinity")
    low = p < -tolerance
    high = p > 1.0 + tolerance
    if np.any(low) or np.any(high):
        row = int(np.argmax(np.any(low | high, axis=1)))
        raise EntryOutOfRange(f"record {row}: probability outside [0, 1] beyond tolerance {tolerance!r}")
    sums = p.sum(axis=1)
    off = np.abs(sums - 1.0) > tolerance
    if np.any(off):
        row = int(np.argmax(off))
        raise SumOutOfTolerance(
            f"record {row}: probabilities sum to {float(sums[row])!r}, expected 1 within {tolerance!r}"
        )
    out = np.clip(p, 0.0, 1.0)
    sums = out.sum(axis=1)
    fix = np.abs(sums - 1.0) > _RENORM_THRESHOLD
    if np.any(fix):
        out = out.copy()
        out[fix] = out[fix] / sums[fix, None]
    return out


def scalar_to_binary(p: float) -> np.ndarray:
    """Expand the binary scalar convention p into the simplex pair [1-p, p]."""
    p = float(p)
    return validate_simplex(np.array([1.0 - p, p]), tolerance=INGEST_TOLERANCE)
