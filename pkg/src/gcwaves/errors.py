"""Exception types shared across the package."""


class GcwavesError(Exception):
    """Base class for all package-specific failures."""


class RangeError(GcwavesError):
    """Input outside the numerically representable range (e.g. sinh overflow)."""


class ConfigError(GcwavesError):
    """Invalid or inconsistent configuration (scan windows, grid sizes, ...)."""


class ResonanceError(GcwavesError):
    """A matrix required to be invertible is numerically singular."""


class RegimeError(GcwavesError):
    """Operation requested outside its parameter regime (e.g. defocusing)."""


class GeometryError(GcwavesError):
    """Fluid-layer geometry is invalid (layer pinch-off, domain too small)."""


class SolvabilityError(GcwavesError):
    """Boundary data violates a compatibility (zero-mean / zero-flux) condition."""


class OutOfConeError(GcwavesError):
    """Profile left the region where the truncated functionals are valid."""


class NumericalError(GcwavesError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
