"""Exception hierarchy shared by the estimation, simulation and CLI layers."""

from __future__ import annotations


class ManyTermsError(Exception):
    """Base class for all package errors."""


class DimensionError(ManyTermsError, ValueError):
    """Array shapes are inconsistent, or there are too few observations."""


class NumericalError(ManyTermsError):
    """A numerical precondition (rank, invertibility) failed."""


class RankDeficient(NumericalError):
    """The design matrix has numerical rank below its column count.

    Attributes
    ----------
    rank : int
        Detected numerical rank.
    dropped : tuple of int
        Column indices (in the original ordering) found to be redundant.
    """

    def __init__(self, message: str, rank: int | None = None, dropped: tuple[int, ...] = ()):
        super().__init__(message)
        self.rank = rank
        self.dropped = tuple(dropped)


class SingularGamma(NumericalError):
    """The residualized regressor second-moment matrix is numerically singular."""


class SingularDesign(NumericalError):
    """The leave-own-out IV design matrix is numerically singular."""


class SupportTooLarge(ManyTermsError, ValueError):
    """A discrete distribution has too many support points to enumerate."""


class OracleUnavailable(ManyTermsError):
    """An oracle quantity needed for a decomposition cannot be evaluated."""


class NonpositiveVariance(ManyTermsError, ValueError):
    """Mixture constraints force a nonpositive component variance."""


class ConfigError(ManyTermsError, ValueError):
    """Invalid simulation configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ParseError(ManyTermsError, ValueError):
    """Malformed CSV input; ``row`` and ``column`` locate the problem when known."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class SimulationAborted(ManyTermsError):
    """Too many replications failed to produce a fit."""
