"""Exception types shared across the package.

Each class names one failure mode so callers (and the CLI's exit-code
mapping) can distinguish them; all inherit from :class:`CalipersError`.
"""

from __future__ import annotations


class CalipersError(Exception):
    """Base class for every error raised by this package."""


class SimplexViolation(CalipersError):
    """A vector failed probability-simplex validation."""


class EntryOutOfRange(SimplexViolation):
    """An entry lies outside [0, 1] beyond tolerance."""


class SumOutOfTolerance(SimplexViolation):
    """Entries do not sum to 1 within tolerance."""


class NonFiniteInput(CalipersError):
    """NaN or infinity where a finite number is required."""


class IndexOutOfRange(CalipersError):
    """A label index outside [0, k)."""


class ProbsLogitsMismatch(CalipersError):
    """Stored probabilities disagree with softmax of stored logits."""


class InconsistentWidth(CalipersError):
    """Records in one dataset do not share the same class count."""


class InvalidLensForK(CalipersError):
    """A lens is incompatible with the dataset's class count."""


class PartialMap(CalipersError):
    """A grouping map does not cover every class index."""


class EmptyGroup(CalipersError):
    """A grouping contains an empty group."""


class InvalidClassIndex(CalipersError):
    """A selector refers to a class index outside [0, k)."""


class DimensionMismatch(CalipersError):
    """Vectors or matrices of incompatible dimensions."""


class InterIntervalOnNonScalar(CalipersError):
    """The interval distance only applies to scalar (k'=1) pairs."""


class NonPSDMatrix(CalipersError):
    """A weight matrix is not positive semi-definite within tolerance."""


class EmptySelection(CalipersError):
    """A selector left no records to evaluate."""


class DistanceLensMismatch(CalipersError):
    """The distance function cannot consume the lens's output dimension."""


class FractionTooSmall(CalipersError):
    """A resampling fraction rounds down to zero draws."""


class MissingLogits(CalipersError):
    """An operation requires logits but the records carry none."""


class MissingProbs(CalipersError):
    """An operation requires probabilities but the records carry none."""


class DegenerateValidation(CalipersError):
    """A validation split with a single class cannot fit a calibrator."""


class InvalidSpec(CalipersError):
    """A configuration value is malformed or out of range."""


class ParseError(CalipersError):
    """An input file could not be parsed; the message names the line."""
