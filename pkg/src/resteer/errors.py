"""Exception taxonomy shared by the whole package.

Everything raised on bad caller input derives from ResteerError so the CLI
and the HTTP service can map caller mistakes to exit code 1 / status 400
while genuine runtime failures keep propagating.
"""


class ResteerError(Exception):
    """Base class for all errors raised by resteer on invalid usage."""


class DimensionError(ResteerError):
    """Shapes of the involved tensors are incompatible."""


class ValidationError(ResteerError):
    """A value violates a domain invariant (non-finite entry, range, ...)."""


class ParameterError(ResteerError):
    """A configuration parameter is out of range or unknown."""


class CapabilityError(ResteerError):
    """The requested operation is not defined for this operator kind."""


class StateError(ResteerError):
    """The operation was called in a state that cannot support it."""
