class KFreeError(Exception):
    """Base class for errors raised by this package."""


class GeometryError(KFreeError):
    """Numeric breakdown while acting on upper half-space."""


class IndeterminateClassificationError(KFreeError):
    """An element sits within tolerance of the elliptic/parabolic boundary."""


class NotPurelyLoxodromicError(KFreeError):
    """A nontrivial element of a word ball is not loxodromic."""


class DiscretenessError(KFreeError):
    """Elements sharing an axis have incommensurable translation lengths."""


class OutOfTruncationError(KFreeError):
    """A requested object lies outside the enumerated word ball."""


class SubsetCapError(KFreeError):
    """Too many generators for an exhaustive subset scan."""


class NotConnectedError(KFreeError):
    """A simplex set is not connected under the face relation."""


class UncertifiedNerveError(KFreeError):
    """The intersection oracle could not decide a subfamily."""

    def __init__(self, family):
        self.family = tuple(family)
        super().__init__(f"intersection undecided for family {self.family}")


class DimensionCapError(KFreeError):
    """A complex grew past the configured dimension cap."""


class ComplexError(KFreeError):
    """Malformed simplicial complex input."""


class ScenarioError(KFreeError):
    """Invalid scenario file."""
