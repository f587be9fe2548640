"""Exception types shared across the package.

Each class carries the process exit code the command-line front end uses.
"""


class AnalogChaosError(Exception):
    exit_code = 1


class ValidationError(AnalogChaosError, ValueError):
    """Invalid input: malformed instance, bad parameters, schema violations."""

    exit_code = 2


class ConfigurationSizeError(ValidationError):
    """A spin configuration does not match the instance it is used with."""


class StructureMismatchError(ValidationError):
    """Two instances that must share a term layout do not."""


class GenerationError(AnalogChaosError, RuntimeError):
    exit_code = 2


class InsufficientDataError(ValidationError):
    pass


class OutOfRangeError(ValidationError):
    pass


class SolverGuardError(AnalogChaosError, RuntimeError):
    """A solver refused an instance it cannot handle (size or family guard)."""

    exit_code = 3


class StorageError(AnalogChaosError, OSError):
    """Unreadable/unwritable files or corrupt checkpoint state."""

    exit_code = 4
