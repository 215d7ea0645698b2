"""Exception types shared across the package."""


class WeilError(Exception):
    """Base class for all library errors."""


class TowerTooShallow(WeilError, ValueError):
    """A value needs roots of unity beyond the configured depth N."""

    def __init__(self, needed, available):
        self.needed = needed
        self.available = available
        super().__init__(f"needs tower depth {needed}, configured depth is {available}")


class CellOverflow(WeilError, ValueError):
    """A cell table would exceed the configured size limit."""


class NotInGroup(WeilError, ValueError):
    """A Galois element lies outside the subgroup an operation requires."""


class InconsistentMultiplier(WeilError):
    """Probe ratios disagree when extracting a projective multiplier."""


class SearchExhausted(WeilError):
    """A bounded deterministic search found nothing."""

    def __init__(self, message, bound):
        self.bound = bound
        super().__init__(message)


class SingularOperator(WeilError):
    """An operator restricted to a cell is not invertible."""

    def __init__(self, message, cell=None):
        self.cell = cell
        super().__init__(message)
