"""Exception types shared across the package.

The CLI maps these to exit codes: ``ValidationError`` -> 2,
``ResourceGuardError`` -> 3.
"""


class ValidationError(ValueError):
    """Input outside the supported domain of an operation."""


class ResourceGuardError(RuntimeError):
    """An enumeration or scan would exceed its configured budget."""


class ModelDiagnosticError(RuntimeError):
    """An internal consistency assertion of a combinatorial model failed."""
