class LabError(Exception):
    """Base class for all errors raised by the laboratory"""


class InvalidDimensionError(LabError, ValueError):
    """Local dimension or operator shape outside the supported range"""


class ResourceCapError(LabError):
    """Requested dense object exceeds the configured cap"""


class LatticeIndexError(LabError, IndexError):
    """Site outside the half-integer lattice"""


class GateValidationError(LabError, ValueError):
    """Gate or single-site unitary fails a validation check"""


class QuadratureConfigError(LabError, ValueError):
    """Averaging quadrature cannot be built from the given settings"""


class ConfigValidationError(LabError, ValueError):
    """Run configuration is malformed or violates the schema"""


class ConvergenceError(LabError):
    """Iterative solver exhausted its budget"""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
