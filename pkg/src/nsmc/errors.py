"""Exception types shared across the package."""


class NSMCError(Exception):
    """Base class for numerical and validation failures."""


class SingularMatrix(NSMCError):
    """A pivot fell below the singularity threshold."""


class NotIrreducible(NSMCError):
    """The chain has no unique stationary distribution."""


class NotContracting(NSMCError):
    """No power of a substochastic block has norm below one."""


class NotStochastic(NSMCError):
    """A matrix failed row-stochastic (or rate-matrix) validation.

    Parameters
    ----------
    message : str
    row : int, optional
        Offending row index.
    k : int, optional
        Offending sequence index when raised while building a sequence.
    """

    def __init__(self, message, row=None, k=None):
        super().__init__(message)
        self.row = row
        self.k = k


class HorizonExceeded(NSMCError):
    """A sequence was queried beyond its horizon."""


class CalibrationError(NSMCError):
    """No candidate model reproduced the reference anchors."""

    def __init__(self, message, report=""):
        super().__init__(message)
        self.report = report
