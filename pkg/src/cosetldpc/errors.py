"""Exceptions shared across modules and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent user configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class InfeasibleError(RuntimeError):
    """A linear program has no feasible point."""


class DegenerateObservationError(ValueError):
    """A channel output has zero likelihood under every input."""
