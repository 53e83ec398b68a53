"""Exception and warning classes shared across the package."""


class QwsLabError(Exception):
    """Base class for all package errors."""


class GeometryError(QwsLabError, ValueError):
    """Invalid scenario geometry (scatterer outside the region, bad sizes...)."""


class CutoffError(QwsLabError, ValueError):
    """No open lead mode, or the wavenumber sits too close to a mode cutoff."""


class SolverError(QwsLabError, RuntimeError):
    """The interior linear system could not be solved."""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class SolverQualityError(QwsLabError, RuntimeError):
    """A computed scattering matrix violates its unitarity budget."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class AliasingError(QwsLabError, RuntimeError):
    """A phase scan or finite difference is too coarse to unwrap reliably."""


class SectorCapError(QwsLabError, ValueError):
    """A Fock sector exceeds the configured dimension cap."""


class TruncationError(QwsLabError, ValueError):
    """A truncated Fock expansion loses more norm than allowed."""


class UnitarityWarning(UserWarning):
    """Scattering matrix unitarity defect above the warning threshold."""


class DiscretizationWarning(UserWarning):
    """The lattice opens a different number of modes than the continuum guide."""


class DegeneracyWarning(UserWarning):
    """A degenerate spectrum makes an optimal probe useless (zero QFI)."""
