"""Exception types shared across the package."""


class DerivativeOrderError(ValueError):
    """A derivative order was requested beyond what the function provides."""


class BudgetExceededError(RuntimeError):
    """An index-tuple enumeration would exceed the configured budget."""


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""
