"""Exception hierarchy for minkshoot."""


class MinkshootError(Exception):
    """Base class for every error raised by minkshoot."""


class DomainError(MinkshootError, ValueError):
    """A scalar function was evaluated outside its domain."""


class UsageError(MinkshootError, ValueError):
    """Invalid arguments, geometry, nonlinearity or bracket."""


class ConfigError(UsageError):
    """Invalid run configuration (JSON file, CLI flags or environment)."""


class HypothesisError(UsageError):
    """The hypothesis f'(s0) > lambda_{k+1} does not hold for the requested k."""

    def __init__(self, message: str, check=None):
        super().__init__(message)
        self.check = check


class IntegrationError(MinkshootError, RuntimeError):
    """The adaptive integrator could not reach the end of the interval."""

    def __init__(self, message: str, radius: float):
        super().__init__(f"{message} (at r={radius:.17g})")
        self.radius = radius


class DegeneratePathError(MinkshootError, ValueError):
    """A phase path touches the equilibrium, so its angle is undefined."""


class ContractViolationError(MinkshootError, RuntimeError):
    """A trajectory broke the sampling contract needed for angle unwrapping."""


class SearchFailureError(MinkshootError, RuntimeError):
    """An eigenvalue bracket could not be found."""


class IncompleteSolveError(MinkshootError, RuntimeError):
    """Some (side, crossings) targets were not found by the scan.

    Carries the profiles that were found and the raw scan data so callers can
    inspect or retry with a finer grid.
    """

    def __init__(self, missing, profiles, scans):
        labels = ", ".join(f"{side}/j={j}" for side, j in missing)
        super().__init__(f"no root found for {labels}; the scan grid is likely too coarse")
        self.missing = list(missing)
        self.profiles = list(profiles)
        self.scans = scans


class CrossingTieWarning(UserWarning):
    """An end angle landed on a half-integer multiple of pi."""
