"""Exception types raised across the package."""


class FinecapError(Exception):
    """Base class for all package errors."""


class BallUnresolvable(FinecapError):
    pass


class BallOutside(FinecapError):
    pass


class TooFewSamples(FinecapError):
    pass


class InfiniteValue(FinecapError):
    pass


class BadDimension(FinecapError):
    pass


class NoAdmissibleCandidate(FinecapError):
    pass


class NotFittable(FinecapError):
    pass


class ZeroNorm(FinecapError):
    pass


class ZeroMeasureBall(FinecapError):
    pass


class UndefinedAtCenter(FinecapError):
    pass


class EmptyA(FinecapError):
    pass


class DepthUnresolvable(FinecapError):
    pass


class ScheduleViolatesBkSum(FinecapError):
    pass


class MalformedInput(FinecapError):
    """Input file or argument could not be parsed."""
