"""Sinc-basis discretization of the integral fractional Laplacian on masked lattices.

The operator is applied by zero-padded FFT convolution with a precomputed
kernel, and Dirichlet problems are solved matrix-free with conjugate gradients.
"""
from .errors import ConfigError, FormatError, GeometryError, NumericalError, ShapeError
from .grid import ProblemParams, make_mask, norm_l2, norm_linf, read_mask, write_mask
from .kernel import (
    ConvolutionKernel,
    QuadratureRule,
    build_kernel,
    default_rule,
    gauss_legendre_rule,
    get_kernel,
    load_kernel,
    parse_rule,
    periodic_symbol,
    save_kernel,
    uniform_rule,
)
from .operators import SincLaplacian, apply_masked, apply_scaled_periodic, apply_sinc, kernel_values
from .solver import CgConfig, SolveReport, cg_solve, convergence_study, exact_ball_solution, solve_dirichlet
from .apps import (
    AllenCahnConfig,
    DenoiseConfig,
    allen_cahn_run,
    denoise,
    double_well_prime,
    fit_annihilation,
    mollifier,
    operator_comparison,
)

__version__ = "0.1.0"
