"""
kvbeam: a damped Euler-Bernoulli cantilever and the identification of its
tip shear force from boundary measurements.

Modules
-------
model       coefficients, grids, signals, discrete Sobolev norms
fem         Hermite cubic assembly
timestep    Newmark integration (forward and time-reversed)
forward     direct problem, observations, energy diagnostics
adjoint     Neumann and Dirichlet adjoint problems
inversion   Tikhonov functionals, gradients, Landweber iteration
constants   a-priori, Lipschitz and stability constants
config, cli configuration files and the command line
"""
from .model import (BeamCoefficients, Bounds, Coefficient, MeasurementTrace, SourceSignal, SpaceMesh,
                    TimeGrid, discrete_seminorm, project_consistency, sobolev_norm, validate_coefficients)
from .fem import AssembledOperators, assemble
from .timestep import NewmarkConfig, Trajectory, integrate, integrate_reversed
from .forward import ForwardSolution, observe_deflection, observe_moment, solve_direct
from .adjoint import solve_adjoint_dirichlet, solve_adjoint_neumann
from .inversion import (TikhonovConfig, ReconstructionResult, add_noise, eval_functional,
                        fd_gradient_oracle, gradient, landweber)
from .constants import ConstantBundle, evaluate_constants, kappa0_lower_bound, c_st, stability_table

__version__ = "0.1.0"
