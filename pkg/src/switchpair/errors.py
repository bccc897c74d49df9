"""Exception hierarchy shared by every switchpair module."""


class SwitchPairError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SwitchPairError, ValueError):
    pass


class PreconditionError(SwitchPairError, ValueError):
    """A protocol precondition was violated (e.g. too few presses)."""


class ConfigurationError(SwitchPairError, ValueError):
    pass


class InvalidPointError(SwitchPairError, ValueError):
    """Public key bytes do not encode a point on the curve."""


class InsufficientEntropyError(SwitchPairError):
    """Too few agreed ticks remain to derive a session key."""


class ProtocolViolation(SwitchPairError):
    """A message or call arrived in a phase where it is not allowed."""


class InvalidEventError(SwitchPairError, ValueError):
    """A recorded tick does not strictly increase."""


class KeyNotFoundError(SwitchPairError, KeyError):
    pass


class IntegrityError(SwitchPairError):
    """A key store record failed its checksum or is truncated."""
