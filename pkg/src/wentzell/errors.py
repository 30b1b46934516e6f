"""Exception hierarchy shared by all modules."""


class WentzellError(ValueError):
    """Base class for every error raised by the package."""


# orlicz
class NotMonotone(WentzellError):
    pass


class NotOdd(WentzellError):
    pass


class NonzeroAtOrigin(WentzellError):
    pass


class EmptyGrid(WentzellError):
    pass


class MissingDelta2Constant(WentzellError):
    pass


class NoFiniteBracket(WentzellError):
    pass


class WeightMismatch(WentzellError):
    pass


# domain / forms
class BadParameter(WentzellError):
    pass


class NonpositiveWeight(WentzellError):
    pass


class DimensionMismatch(WentzellError):
    pass


# solver / resonance / estimates
class BadMode(WentzellError):
    pass


class NonFiniteEnergy(WentzellError):
    pass


class SpecMismatch(WentzellError):
    pass


class NotStrictlySolvable(WentzellError):
    pass


class HypothesisViolation(WentzellError):
    pass


class ConfigError(WentzellError):
    """Configuration problem; ``lineno`` points into the config file when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
