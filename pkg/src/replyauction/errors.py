"""Exception hierarchy for the auction engine.

Every failure mode the engine promises to detect has a dedicated class so
callers (and tests) can catch precisely.
"""


class MechanismError(Exception):
    """Base class for all engine errors."""


# outcome space
class EmptySpaceError(MechanismError):
    pass


class DuplicateIndexError(MechanismError):
    pass


# policies and rewards
class AllZeroWeightsError(MechanismError):
    pass


class NegativeWeightError(MechanismError):
    pass


class SpaceMismatchError(MechanismError):
    pass


class InfiniteRewardError(MechanismError):
    pass


class IndexOutOfRangeError(MechanismError):
    pass


# allocation
class AbsoluteContinuityViolationError(MechanismError):
    pass


class NonFiniteLogitError(MechanismError):
    pass


# payments
class LengthMismatchError(MechanismError):
    pass


# oracle
class EnumerationTooLargeError(MechanismError):
    pass


# diagnostics
class SupportViolationError(MechanismError):
    pass


class InvalidRangeError(MechanismError):
    pass


class DegenerateVarianceError(MechanismError):
    pass


class InstanceMismatchError(MechanismError):
    pass


# instance generation / files
class InvalidSpecError(MechanismError):
    pass


class SchemaError(MechanismError):
    pass


# gateway
class GatewayError(MechanismError):
    pass


class GatewayTimeoutError(GatewayError):
    pass


class MalformedResponseError(GatewayError):
    pass


class UnavailableError(GatewayError):
    pass
