"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Inadmissible cell or domain geometry."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed to converge (CLI exit code 3)."""


class VerificationError(AssertionError):
    """A sweep/commutation monotonicity assertion failed (CLI exit code 4)."""
