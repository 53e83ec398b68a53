from .geometry import (Circle, Grid, IndexLandscape, Rectangle, Scenario, ScattererSpec, ThetaSpec,
                       build_landscape, empty_scenario, fig3_scenario, load_scenario,
                       random_disorder, save_scenario)
from .leads import LeadBasis, continuum_kx, lattice_kx, lead_modes
from .solver import (FieldMap, ScatteringMatrix, SolveResult, parity_operator, scattering_matrix,
                     solve_landscape, solve_scattering, superpose, swap_operator)
