class EquilibriumError(Exception):
    """Base class for every error raised by the equilibrium toolkit."""


class DimensionMismatchError(EquilibriumError, ValueError):
    pass


class InvalidPointError(EquilibriumError, ValueError):
    pass


class InvalidParameterError(EquilibriumError, ValueError):
    pass


class DegenerateRayError(EquilibriumError):
    """Raised when a geodesic ray is requested from a point through itself."""


class SingularSystemError(EquilibriumError):
    pass


class VariantMismatchError(EquilibriumError):
    pass


class NonFiniteIterateError(EquilibriumError):
    pass


class WrongBifunctionError(EquilibriumError):
    pass


class MissingTraceDataError(EquilibriumError):
    pass


class ConfigError(EquilibriumError):
    pass
