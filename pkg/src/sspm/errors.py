"""Exception hierarchy for sspm."""


class SketchError(ValueError):
    """Base class for every error raised by this package."""


class NegativeFrequency(SketchError):
    def __init__(self, item, position):
        super().__init__(f"item {item} deleted below zero at position {position}")
        self.item = item
        self.position = position


class AlphaViolated(SketchError):
    def __init__(self, inserts, deletes, alpha):
        super().__init__(
            f"D={deletes} exceeds (1 - 1/alpha) * I for I={inserts}, alpha={alpha}"
        )
        self.inserts = inserts
        self.deletes = deletes
        self.alpha = alpha


class ZeroCapacity(SketchError):
    pass


class CapacityMismatch(SketchError):
    pass


class BadEpsilon(SketchError):
    pass


class BadAlpha(SketchError):
    pass


class NotUnbiasedSummary(SketchError):
    pass


class BudgetTooSmall(SketchError):
    pass


class SpecViolatesAlpha(SketchError):
    pass


class NotSorted(SketchError):
    pass


class EmptySupport(SketchError):
    pass


class InsufficientItems(SketchError):
    pass


class PreconditionNotMet(SketchError):
    pass


class ConfigInvalid(SketchError):
    pass


class CorruptSummary(SketchError):
    """Raised when a serialized summary cannot be decoded."""
