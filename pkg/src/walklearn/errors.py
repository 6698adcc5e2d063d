"""Exception hierarchy shared across the package."""


class WalkLearnError(Exception):
    """Base class for all package errors."""


class ContractViolation(WalkLearnError, ValueError):
    """An input does not conform to the operation's preconditions."""


class ParameterError(WalkLearnError, ValueError):
    """A numeric or structural parameter is out of range or infeasible."""


class ResourceError(WalkLearnError, RuntimeError):
    """An exact-mode cap or a sampling budget was exceeded."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class LearningFailure(WalkLearnError, RuntimeError):
    """A learner ran out of budget or rounds before meeting its target."""

    def __init__(self, message, stage=None, **details):
        super().__init__(message)
        self.stage = stage
        self.details = details
