"""Spherical Wigner-function tomography for finite spin systems."""

from .angular import (HalfInt, clebsch_gordan, half, multipole_coeff, multipole_table,
                      reconstruction_weight, reconstruction_weights, wigner3j)
from .fitting import FitResult, fit_ramsey, least_squares, ramsey_model
from .pipeline import analysis_quadrature, analyze_map, dephasing_series
from .simulate import (ExperimentSpec, RamseyData, ReadoutParams, ramsey_sequence,
                       run_tomography)
from .sphere import (SphereGrid, SphereQuadrature, clenshaw_curtis_quadrature, gauss_legendre,
                     grid_quadrature, integrate, paper_grid, product_quadrature,
                     spherical_harmonic)
from .state import (DensityMatrix, DephasingModel, MultipoleDecomposition, bloch_inversion,
                    bloch_vector, dephase_qubit, matrix_purity, maximally_mixed, multipole_to_rho,
                    pure_qubit, random_density_matrix, rho_to_multipole, spin_coherent,
                    spin_operators, uhlmann_fidelity)
from .wigner import (ProbabilityGrid, WignerMap, angular_momentum, normalization, reconstruct,
                     rho_from_wigner, trace_product, wigner_evaluator, wigner_fidelity,
                     wigner_fidelity_to_pure, wigner_from_rho, wigner_max, wigner_min,
                     wigner_purity)

__version__ = "0.1.0"
