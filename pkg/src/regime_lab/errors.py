"""Exception hierarchy for regime_lab.

Everything derives from :class:`RegimeLabError`. Input/config problems also
derive from ``ValueError`` so callers can catch them generically; the CLI maps
:class:`ConfigError` subclasses to exit code 2 and everything else to 1.
"""


class RegimeLabError(Exception):
    """Base class for all package errors."""


class ConfigError(RegimeLabError, ValueError):
    """Invalid configuration or input data."""


# measures
class NonPositivePrice(ConfigError):
    pass


class TooShort(ConfigError):
    pass


class StreamTooShort(ConfigError):
    pass


# wasserstein
class EmptyMeasure(ConfigError):
    pass


class UnequalAtomCounts(ConfigError):
    pass


class UnsupportedOrder(ConfigError):
    pass


class InstanceTooLarge(ConfigError):
    pass


# clustering
class KTooLarge(ConfigError):
    pass


class NonFinitePoint(ConfigError):
    pass


class EmptyCluster(RegimeLabError, ValueError):
    pass


# validation
class LengthMismatch(ConfigError):
    pass


class EmptySample(ConfigError):
    pass


class ClusterTooSmall(RegimeLabError, ValueError):
    pass


class DegenerateCentroids(RegimeLabError, ArithmeticError):
    pass


class ZeroDiameter(RegimeLabError, ArithmeticError):
    pass


# synthetic
class Infeasible(ConfigError):
    pass


# accuracy
class NoCoveredReturns(RegimeLabError, ValueError):
    pass


# hmm
class DegenerateEmission(RuntimeWarning):
    """Warned when a state's emission variance hits the floor."""
