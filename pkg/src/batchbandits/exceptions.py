"""Exception types raised across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class RankError(ValidationError):
    """A set of vectors fails to span the space it is required to span."""


class DegenerateInstanceError(ValidationError):
    """The instance has no usable structure (e.g. every action is zero)."""


class UnsupportedInstanceError(ValidationError):
    """The constructor only supports a narrower class of instances."""


class ProtocolError(RuntimeError):
    """Observations fed back to a policy do not match what it planned."""
