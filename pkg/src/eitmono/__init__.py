"""Linearized EIT on the unit disk.

Simulation of Neumann-to-Dirichlet difference measurements for piecewise
constant conductivities, monotonicity-based coefficient bounds, and
box-constrained least-squares reconstruction on a pixel grid.
"""

from .config import ExperimentConfig, preset
from .errors import (ConfigError, DomainError, EitError, NumericalError,
                     PipelineError)
from .fem import Mesh, generate_mesh, homogeneous_potential, solve_difference
from .geometry import (Disk, Ellipse, Phantom, Pixel, PixelClass,
                       PixelPartition, Rectangle, build_partition,
                       classify_partition, classify_pixel, sigma_at)
from .matfun import (cholesky, matrix_abs, matrix_sqrt, positive_decomposition,
                     sym_eig)
from .monotonicity import (BoundsVector, compute_beta, compute_bounds,
                           contrast_bound)
from .ntd import (CurrentBasis, MeasurementMatrix, SensitivityMatrix,
                  add_noise, analytic_concentric, assemble_Sk, assemble_V,
                  homogeneous_eigenvalue)
from .pipeline import Report, run_experiment
from .solver import (ReconstructionProblem, ReconstructionResult, objective,
                     solve_box_ls, solve_spectral, solve_tikhonov, vectorize)

__version__ = "0.1.0"
