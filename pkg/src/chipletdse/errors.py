"""Exception types shared across the package."""


class ChipletDSEError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ChipletDSEError, ValueError):
    """Invalid catalog, composition, scenario or parameter."""


class ValidationError(ChipletDSEError, ValueError):
    """A workload or design file failed validation."""


class InsufficientStorageError(ChipletDSEError):
    """The eligible chiplets cannot hold every layer's weights."""

    def __init__(self, layer_id: str, message: str = ""):
        self.layer_id = layer_id
        super().__init__(message or f"insufficient chiplet storage for layer {layer_id!r}")


class SolverError(ChipletDSEError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class UndefinedInputError(ChipletDSEError, ValueError):
    """Input for which the quantity is undefined, e.g. all-zero traffic."""


class InternalError(ChipletDSEError, RuntimeError):
    """A structural invariant was violated."""
