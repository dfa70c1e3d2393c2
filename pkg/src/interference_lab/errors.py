class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ConfigError(ValueError):
    """An experiment, policy, or environment is configured inconsistently."""
