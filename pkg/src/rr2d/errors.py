"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(ValueError):
    """An experiment or scenario configuration is invalid."""


class NumericError(ArithmeticError):
    """A numerical routine failed (singular matrix, NaN/Inf, eig failure)."""
