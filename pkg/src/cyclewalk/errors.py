"""Exception hierarchy shared by all modules."""


class CycleWalkError(Exception):
    """Base class for every error raised by cyclewalk."""


class InvalidInputError(CycleWalkError, ValueError):
    """Arguments violate a documented precondition."""


class NotLocalizedError(CycleWalkError):
    """A probability profile is too spread out to unwrap from the cycle."""


class SearchHorizonError(CycleWalkError):
    """No qualifying local maximum was found inside the search bracket."""


class InconsistentStateError(CycleWalkError):
    """Initial state carries weight outside the active part of a graph."""
