"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside its physical or validated range."""


class TruncationError(DomainError):
    """A photon number exceeds the configured Fock-space truncation."""


class UndefinedVisibilityError(ArithmeticError):
    """Visibility requested for coincidence rates that leave it undefined."""


class ConfigError(ValueError):
    """Malformed configuration document.

    Attributes:
        line: 1-based line number of the offending entry, or None.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OracleMismatch(AssertionError):
    """Analytic rate disagrees with the Monte Carlo estimate."""

    def __init__(self, regime: str, z: float, message: str | None = None):
        self.regime = regime
        self.z = z
        super().__init__(message or f"{regime}: |z| = {abs(z):.3g}")
