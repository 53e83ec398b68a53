"""Scattering matrices, Wigner-Smith operators and optimal quantum light states.

Subpackages and modules:

* :mod:`qwslab.scattering` - finite-difference waveguide solver and scenarios
* :mod:`qwslab.gws` - generalized Wigner-Smith matrices and phase scans
* :mod:`qwslab.gaussian` - pure multimode Gaussian states
* :mod:`qwslab.fock` - exact Fock-space reference computations
* :mod:`qwslab.metrology` - quantum Fisher information of optimal probes
* :mod:`qwslab.micromanipulation` - optimal force states and noise reduction
* :mod:`qwslab.vacuum` - vacuum forces from the GWS trace
"""

__version__ = "0.1.0"

from .errors import (AliasingError, CutoffError, DegeneracyWarning, DiscretizationWarning,
                     GeometryError, QwsLabError,
                     SectorCapError, SolverError, SolverQualityError, TruncationError,
                     UnitarityWarning)
from .gaussian import (GaussianState, PolarDecomposition, db_of, mean_photon_numbers,
                       polar_decompose, quadrature_variances, scatter_gaussian,
                       transform_representation)
from .gws import (GwsEigenSystem, GwsMatrix, eigendecompose, expected_classical_force, gws_matrix,
                  scattering_phase_scan)
from .scattering import (Scenario, ScatteringMatrix, ScattererSpec, build_landscape, empty_scenario,
                         fig3_scenario, lead_modes, solve_scattering)
