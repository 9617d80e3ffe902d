"""Exception types shared across the toolkit."""


class TrngError(Exception):
    """Base class for every error raised by phasetrng."""


class InvalidParameterError(TrngError, ValueError):
    pass


class InsufficientDataError(TrngError, ValueError):
    pass


class EmptyInputError(InsufficientDataError):
    pass


class ZeroVarianceError(TrngError, ValueError):
    pass


class ConfigError(TrngError, ValueError):
    """Malformed configuration file or an impossible test partitioning."""
