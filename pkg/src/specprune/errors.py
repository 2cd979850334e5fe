"""Exception types raised by specprune.

Everything derives from SpecpruneError so callers can catch the package's
failures with one except clause. The CLI maps subfamilies to exit codes:
file problems exit 3, solver divergence exits 4, other validation exits 2.
"""

__all__ = [
    "SpecpruneError",
    "DimensionMismatch",
    "DimensionError",
    "NonFiniteData",
    "NonFiniteIterate",
    "MissingFile",
    "HeaderParse",
    "SizeMismatch",
    "IoFailure",
    "RaggedRows",
    "EmptyLibrary",
    "ZeroNormAtom",
    "SingularRegression",
    "InvalidP",
    "InfeasiblePurity",
    "IndexOutOfRange",
    "EmptyTrials",
]


class SpecpruneError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SpecpruneError):
    """Array shapes are inconsistent (band counts, atom counts, row counts)."""


# some call sites name the same failure differently; keep one class
DimensionError = DimensionMismatch


class NonFiniteData(SpecpruneError):
    """An input array contains NaN or infinity."""


class NonFiniteIterate(SpecpruneError):
    """The ADMM iteration diverged (iterate magnitude above the guard)."""


class MissingFile(SpecpruneError):
    """A required file does not exist."""


class HeaderParse(SpecpruneError):
    """A cube header is not valid JSON or violates the header schema."""


class SizeMismatch(SpecpruneError):
    """Raw payload size disagrees with the header dimensions."""


class IoFailure(SpecpruneError):
    """An OS level read or write failed."""


class RaggedRows(SpecpruneError):
    """CSV rows do not all have the same number of columns."""


class EmptyLibrary(SpecpruneError):
    """A spectral library holds fewer than two atoms."""


class ZeroNormAtom(SpecpruneError):
    """A library atom (or metric input vector) has zero Euclidean norm."""


class SingularRegression(SpecpruneError):
    """A per-band normal matrix is singular and no ridge damping was requested."""


class InvalidP(SpecpruneError):
    """Requested selection size is outside 1..K."""


class InfeasiblePurity(SpecpruneError):
    """max_purity below 1/p: no point on the simplex satisfies the cap."""


class IndexOutOfRange(SpecpruneError):
    """An index set refers outside the library."""


class EmptyTrials(SpecpruneError):
    """detection_probability needs at least one trial."""
