__version__ = '0.1.0'

from .errors import (WitnessError, ArgumentError, RangeError,  # noqa
                     GeometryError, CoverageError, ManifestError,
                     ExcludedPixelError, NumericalError, AccuracyError,
                     DegenerateEnvelopeError, HermiticityError, CapacityError)
from .lattice import LatticeParams, hubbard_ratio_from_depth  # noqa
from .bands import BlochSpectrum, solve_band_structure, bands_to_csv  # noqa
from .wannier import WannierTable, compute_wannier, envelope_f  # noqa
from .wannier import envelope_lattice  # noqa
from .fock import FockBasis, make_fock_basis, make_product_basis  # noqa
from .fock import hopping, number, total_number, interaction  # noqa
from .geometry import chain_positions, chain_bonds, corner_momentum  # noqa
from .states import StateVector, DensityOperator, OneBodyDM  # noqa
from .states import (build_two_mode_psi, build_coherent_mixture,  # noqa
                     build_symmetric_state, sample_separable_ssr_state,
                     one_body_dm, data_hiding_success)
from .hubbard import BoseHubbardParams, bose_hubbard_ground_state  # noqa
from .hubbard import thermal_state, thermal_one_body_dm  # noqa
from .witness import MomentumSpec, BoundValue, WitnessReport  # noqa
from .witness import (momentum_density, entanglement_bound,  # noqa
                      analytic_example_bound, region_average_bound,
                      bound_map, best_bound, verify_witness_nonnegativity)
from .channels import (check_monotone_under_local_channels,  # noqa
                       sample_monotone_check)
from .tof import (TofParams, DensityField, g_exact, g_stationary,  # noqa
                  column_density, density_grid, l1_distance)
from .imaging import (CalibrationParams, ImageFrame, ImageStack,  # noqa
                      BoundReport, synthesize_frame, estimate_background,
                      analyze_stack, error_budget, monte_carlo_budget)
from .stack import read_stack, write_stack, write_report  # noqa

from .convert import to_scipy, to_dense  # noqa
from .coalesce import coalesce  # noqa
from .transpose import transpose  # noqa
from .spmm import spmm  # noqa

__all__ = [
    'WitnessError',
    'ArgumentError',
    'RangeError',
    'GeometryError',
    'CoverageError',
    'ManifestError',
    'ExcludedPixelError',
    'NumericalError',
    'AccuracyError',
    'DegenerateEnvelopeError',
    'HermiticityError',
    'CapacityError',
    'LatticeParams',
    'hubbard_ratio_from_depth',
    'BlochSpectrum',
    'solve_band_structure',
    'bands_to_csv',
    'WannierTable',
    'compute_wannier',
    'envelope_f',
    'envelope_lattice',
    'FockBasis',
    'make_fock_basis',
    'make_product_basis',
    'hopping',
    'number',
    'total_number',
    'interaction',
    'chain_positions',
    'chain_bonds',
    'corner_momentum',
    'StateVector',
    'DensityOperator',
    'OneBodyDM',
    'build_two_mode_psi',
    'build_coherent_mixture',
    'build_symmetric_state',
    'sample_separable_ssr_state',
    'one_body_dm',
    'data_hiding_success',
    'BoseHubbardParams',
    'bose_hubbard_ground_state',
    'thermal_state',
    'thermal_one_body_dm',
    'MomentumSpec',
    'BoundValue',
    'WitnessReport',
    'momentum_density',
    'entanglement_bound',
    'analytic_example_bound',
    'region_average_bound',
    'bound_map',
    'best_bound',
    'verify_witness_nonnegativity',
    'check_monotone_under_local_channels',
    'sample_monotone_check',
    'TofParams',
    'DensityField',
    'g_exact',
    'g_stationary',
    'column_density',
    'density_grid',
    'l1_distance',
    'CalibrationParams',
    'ImageFrame',
    'ImageStack',
    'BoundReport',
    'synthesize_frame',
    'estimate_background',
    'analyze_stack',
    'error_budget',
    'monte_carlo_budget',
    'read_stack',
    'write_stack',
    'write_report',
    'to_scipy',
    'to_dense',
    'coalesce',
    'transpose',
    'spmm',
    '__version__',
]
