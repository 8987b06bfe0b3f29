"""Exception hierarchy shared by all modules.

Input errors (bad shapes, out-of-range parameters, malformed files) derive
from ``InputError``; the CLI maps them to exit code 2. ``NumericalError``
covers failures that only show up during computation and maps to exit
code 3.
"""


class LyapLabError(Exception):
    """Base class for every error raised by lyaplab."""


class InputError(LyapLabError, ValueError):
    pass


class NumericalError(LyapLabError, ArithmeticError):
    pass


class SingularMatrix(InputError):
    pass


class DimMismatch(InputError):
    pass


class BadOrder(InputError):
    pass


class BadTheta(InputError):
    pass


class IndexMismatch(InputError):
    pass


class DegenerateGap(InputError):
    pass


class BadEccentricity(InputError):
    pass


class BadTau(InputError):
    pass


class BadGap(InputError):
    pass


class BadRho(InputError):
    pass


class NotIrreducible(InputError):
    pass


class NotAperiodic(InputError):
    pass


class BadGrid(InputError):
    pass


class BadWindow(InputError):
    pass


class ParseError(InputError):
    pass
