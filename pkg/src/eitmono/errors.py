"""Exception types shared across the package."""


class EitError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EitError, ValueError):
    """A geometric argument lies outside its admissible domain."""


class ConfigError(EitError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class NumericalError(EitError, ArithmeticError):
    """A numerical routine failed (factorization breakdown, divergence, ...)."""


class PipelineError(EitError, RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}': {message}")
