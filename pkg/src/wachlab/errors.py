"""Structured errors shared across the package.

Every failure mode that a batch report must surface gets its own class, so the
CLI can embed ``{"type": ..., "reason": ...}`` objects instead of crashing.
"""


class WachlabError(Exception):
    """Base class; carries an optional machine-readable reason string."""

    def __init__(self, message, reason=None):
        super().__init__(message)
        self.reason = reason if reason is not None else message


class NotAUnit(WachlabError):
    """An element required to be invertible reduces to 0 mod p."""


class PrecisionLoss(WachlabError):
    """A valuation or quotient cannot be decided at the working precision."""


class ExactDivisionFailure(WachlabError):
    """Division by a power of pi (or p) that is not exact at precision."""


class CongruenceFailure(WachlabError):
    """A congruence that is a theorem failed; signals a bug or precision shortfall."""


class NonConvergence(WachlabError):
    """The lattice solver's residual stopped improving (slope hypothesis violated)."""


class WindowOverflow(WachlabError):
    """A filtration window does not fit in a length p-1 normalized window."""


class NotExact(WachlabError):
    """Rank bookkeeping of a would-be exact sequence failed."""


class NotIntegral(WachlabError):
    """Coefficients have p in the denominator where integrality is required."""


class Degenerate(WachlabError):
    """A generic-case precondition fails; reported, never guessed around."""


class ParseError(WachlabError):
    """Malformed job document."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field


class ValidationError(WachlabError):
    """Well-formed job document with invalid content (window, invertibility...)."""
