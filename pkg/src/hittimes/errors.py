"""Exception types raised by the library."""


class HittimesError(Exception):
    """Base class for all library errors."""


class DomainError(HittimesError, ValueError):
    """Argument outside the domain of a formula or kernel."""


class StripError(HittimesError, ValueError):
    """Boundary configuration is not a valid strip for the requested operation."""


class StepSizeError(HittimesError, ArithmeticError):
    """Euler recursion produced a strongly negative density; the step is too coarse."""


class ConditioningError(HittimesError, ArithmeticError):
    """Near-singular denominator or non-finite value in a transform evaluation."""


class ReferenceUnavailableError(HittimesError, ValueError):
    """No closed-form reference exists for the requested process/boundary pair."""


class InsufficientSamplesError(HittimesError, ValueError):
    """Too few uncensored Monte Carlo samples for a comparison."""


class ConfigError(HittimesError, ValueError):
    """Run configuration could not be parsed or is inconsistent."""
