"""Exception types shared across the package."""

from __future__ import annotations


class QesError(Exception):
    """Base class for all package-specific failures."""


class ConvergenceError(QesError):
    """A numerical iteration failed to reach its tolerance.

    When root finding fails, ``best`` holds the last iterates and
    ``residuals`` their relative residuals, so callers can inspect how close
    the run got or reuse the iterates as warm starts.
    """

    def __init__(self, message: str, best=None, residuals=None):
        super().__init__(message)
        self.best = best
        self.residuals = residuals


class IntegrityError(QesError):
    """Exact arithmetic produced something that should be impossible.

    A division that had to be exact left a remainder, interpolation nodes
    were inconsistent with the promised degree bound, or a result that must
    be integral came out rational.  Indicates a bug or corrupted input, not
    a numerical-accuracy problem.
    """


class BracketingError(QesError):
    """A sign condition or bracket that an algorithm relies on did not hold."""


class RefinementError(QesError):
    """Adaptive quadrature could not refine its way to the requested accuracy.

    Raised in particular when a contour integrand passes so close to a branch
    point that the square-root branch can no longer be tracked by continuity.
    """


class ClearanceError(QesError):
    """A path or loop passes too close to a crossing point to be trusted.

    Carries the offending crossing so callers can report it.
    """

    def __init__(self, message: str, crossing: complex | None = None):
        super().__init__(message)
        self.crossing = crossing


class MatchingError(QesError):
    """Root tracking could not pair two consecutive root sets unambiguously."""


class ConjectureViolation(QesError):
    """A structural property assumed by the algorithms failed on actual data.

    Raised instead of returning silently wrong output; the CLI maps it to its
    own exit code so scripted runs can tell it apart from ordinary errors.
    """
