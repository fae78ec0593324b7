"""Exception families; the CLI maps each family to an exit code."""


class ConfigError(ValueError):
    """Invalid or unknown configuration (exit code 2)."""


class NumericalFailure(RuntimeError):
    """NaN, overflow or a nonconvergent iteration (exit code 3)."""


class GuardViolation(ValueError):
    """A resolution, step-size or memory guard refused the run (exit code 4)."""
