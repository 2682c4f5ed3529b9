"""Exception types shared across the package.

The CLI maps these onto process exit codes; library code raises them
directly so callers can distinguish bad input from numerical failure.
"""


class SpiralFlowError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SpiralFlowError):
    """Invalid run configuration.  `field` holds the dotted field path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(SpiralFlowError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RegimeError(SpiralFlowError):
    """Requested state does not exist in the admissible flow regime."""


class InternalConsistencyError(SpiralFlowError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class MeshQualityError(SpiralFlowError):
    """Generated mesh violates a quality or topology invariant."""


class NonConvergenceError(SpiralFlowError):
    """Newton iteration failed to converge.  Carries the last iterate."""

    def __init__(self, message, iterate=None, history=None):
        self.iterate = iterate
        self.history = history
        super().__init__(message)


class NonMonotoneError(SpiralFlowError):
    """Bisection predicate was not monotone on the scan grid."""

    def __init__(self, triple):
        self.triple = triple
        values = ", ".join(f"({v:.6g}, {'ok' if f else 'not ok'})" for v, f in triple)
        super().__init__(f"predicate not monotone on scan grid: {values}")
