"""Exception hierarchy.

Validation problems derive from :class:`ValueError`; numerical breakdowns
(singular solves, poles) derive from :class:`NumericalError`. The CLI maps
the two families onto distinct exit codes.
"""


class BsmimoError(Exception):
    """Base class for all package errors."""


class NumericalError(BsmimoError, ArithmeticError):
    """A computation hit a singularity or an ill-conditioned solve."""


class SingularConversion(NumericalError):
    pass


class SingularReduction(NumericalError):
    pass


class PoleAtFreeParameter(NumericalError):
    pass


class SingularTraining(NumericalError):
    pass


class SingularChannel(NumericalError):
    pass


class DegenerateBasis(NumericalError):
    pass


class ZeroEnsemble(NumericalError):
    pass


class NonPSKRatio(BsmimoError, ValueError):
    pass


class GridMismatch(BsmimoError, ValueError):
    pass


class EmptyPathSet(BsmimoError, ValueError):
    pass


class LengthMismatch(BsmimoError, ValueError):
    pass


class InsufficientSamples(BsmimoError, ValueError):
    pass


class FileFormatError(BsmimoError, ValueError):
    """A data file could not be parsed."""


class ConfigError(BsmimoError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
