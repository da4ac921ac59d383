"""Exception hierarchy shared across the package."""


class BPGofError(Exception):
    """Base class for all errors raised by bpgof."""


class ParameterError(BPGofError, ValueError):
    """A parameter vector lies outside its admissible set."""


class SampleError(BPGofError, ValueError):
    """Malformed count data (negative entries, wrong shape, ...)."""


class DegenerateSampleError(BPGofError, ValueError):
    """The sample cannot support the requested estimator (e.g. a zero marginal mean)."""


class UnstableStatisticError(BPGofError, ArithmeticError):
    """A moment statistic hit a zero (or negative) denominator.

    ``quantity`` carries the name of the offending quantity and ``value`` its value.
    """

    def __init__(self, message, quantity=None, value=None):
        super().__init__(message)
        self.quantity = quantity
        self.value = value


class NumericalError(BPGofError, ArithmeticError):
    """Non-finite intermediate result; ``row`` points at the offending observation."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
