"""Exception types shared across the package."""


class OceanSimError(Exception):
    """Base class for all package errors."""


class ConfigError(OceanSimError, ValueError):
    """Invalid grid, spectrum or scenario configuration."""


class MeshError(OceanSimError, ValueError):
    """Mesh failed validation (open, inconsistent winding, non-positive volume)."""


class InvariantError(OceanSimError):
    """A checked numerical invariant does not hold (e.g. Hermitian symmetry)."""


class GeometryError(OceanSimError, ValueError):
    """Degenerate geometry passed to a geometric routine."""


class NumericBlowUp(OceanSimError):
    """A simulated field became non-finite or ran away."""

    def __init__(self, step, context=""):
        super().__init__(f"numeric blow-up at step {step}: {context}" if context else f"numeric blow-up at step {step}")
        self.step = step
        self.context = context
