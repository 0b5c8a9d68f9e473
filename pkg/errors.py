"""
Exception hierarchy shared by the geometry, tropical, Hessian and capacity modules.
The launcher maps InputError to exit code 2 and NumericalError to exit code 3.
"""

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class ToolkitError(Exception):
    """Base class for every error raised on purpose by this package"""


class InputError(ToolkitError, ValueError):
    """The caller handed over data that violates a precondition"""


class DimensionMismatchError(InputError):
    pass


class DuplicateSupportError(InputError):
    pass


class DegreeMismatchError(InputError):
    pass


class RangeError(InputError):
    pass


class ParseError(InputError):
    """Syntax error with the 0-based character position of the offending token"""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NotMSubharmonicError(InputError):
    """Refusal to build a Hessian measure; carries the interior violation map"""

    def __init__(self, message, violations):
        super().__init__(message)
        self.violations = violations


class NumericalError(ToolkitError):
    pass


class NonGenericDisplacementError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """Iteration budget exhausted; `best` holds the last iterate"""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
