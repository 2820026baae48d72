"""Exception types shared across the package."""

from __future__ import annotations


class SusyOscError(Exception):
    """Base class for all errors raised by this package."""


# -- special functions -------------------------------------------------------

class SpecfunError(SusyOscError):
    pass


class PoleError(SpecfunError, ValueError):
    """Argument sits on (or within 1e-12 of) a pole of the gamma function."""


class SeriesConvergenceError(SpecfunError, ArithmeticError):
    """The 1F1 series hit the term cap before meeting its tolerance."""


# -- grid layer --------------------------------------------------------------

class GridMismatchError(SusyOscError, ValueError):
    pass


class NonFiniteError(SusyOscError, ValueError):
    """NaN or inf where a finite sample was required."""


class EigenConvergenceError(SusyOscError, ArithmeticError):
    pass


# -- chain construction ------------------------------------------------------

class InadmissibleError(SusyOscError):
    """Parameters produce a singular superpotential or partner potential.

    ``level`` and ``index`` locate the table entry (i, k); ``x`` is the grid
    coordinate of the offending sample when known.
    """

    def __init__(self, message, *, level=None, index=None, x=None):
        super().__init__(message)
        self.level = level
        self.index = index
        self.x = x

    def locate(self, level, index):
        self.level = level
        self.index = index
        return self


class SingularSuperpotentialError(InadmissibleError):
    pass


class SingularChainError(InadmissibleError):
    pass


class DegenerateEnergyError(SusyOscError, ValueError):
    pass


class PoleEncounteredError(SusyOscError):
    """Raised by the Riccati ODE oracle when |alpha| blows up.

    ``partial`` holds the grid samples computed so far (NaN where invalid).
    """

    def __init__(self, message, *, x, partial=None):
        super().__init__(message)
        self.x = x
        self.partial = partial


# -- states / algebra --------------------------------------------------------

class StateRangeError(SusyOscError, ValueError):
    pass


class OverlapError(SusyOscError):
    pass


class DuplicateRootError(SusyOscError, ValueError):
    pass
