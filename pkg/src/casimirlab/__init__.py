"""Spectral asymptotics and Casimir energies for solvable cavities.

The package builds certified spectra of intervals, boxes and their
products, samples heat and cylinder traces, fits their small-t
expansions, converts between heat, cylinder and Riesz coefficients, and
extracts renormalized Casimir energies and energy densities.
"""

__version__ = "0.1.0"

from .errors import (CasimirLabError, CertificationError, ConfigError, DomainError,
                     FitError, ConditioningError, CrossValidationError, OutOfRangeError,
                     TruncationError)
from .spectrum import (BoundaryCondition, BoxGeometry, IntervalGeometry, Spectrum,
                       build_box_spectrum, build_interval_spectrum, product_spectrum)
from .kernels import (TraceGrid, TraceKind, cylinder_trace, heat_trace, regularized_energy,
                      trace_grid)
from .riesz import fit_riesz_lambda, fit_riesz_omega, riesz_mean_lambda, riesz_mean_omega
from .coeffs import CoefficientSet, e_from_b, f_from_b
from .fit import ExpansionModel, extract_coefficient_set, fit_expansion, fit_trace
from .casimir import (boundary_concentration_study, boundary_expansion_fit, interval_casimir,
                      plate_energy_per_area, renormalized_density, surface_decomposition)
from .structure import structure_table

__all__ = [n for n in dir() if not n.startswith("_")]
