"""Exception types shared across the package."""


class StfilterError(Exception):
    """Base class for all package errors."""


class ConfigError(StfilterError):
    """Invalid configuration, spec file, or input layout (CLI exit code 2)."""


class ContractError(StfilterError):
    """A documented precondition was violated by the caller."""


class EvaluationError(StfilterError):
    """An evaluation-time invariant was violated (CLI exit code 3)."""
