"""
Adjoint problems behind the misfit gradients.

Both adjoints are backward beam problems

    rho phi_tt - mu phi_t + (r phi_xx)_xx - (kappa phi_xxt)_xx = ...

with zero data at ``t = T``. The Neumann adjoint carries the tip shear
``xi``. The Dirichlet adjoint prescribes the root slope ``phi_x(0, t) = theta(t)``
and is solved through the lifting ``phi = psi + x theta``, which moves the
slope into the body force ``x mu theta' - x rho theta''``.

Semi-discrete terminal data for ``psi`` are chosen so that the discrete
duality with the moment-balance observation is exact:

    M psi(T) = -theta(T) (x rho, N),
    M psi_t(T) = C psi(T) - theta'(T) (x rho, N) + theta(T) (x mu, N).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fem import AssembledOperators, assemble, weighted_curvature_energy
from .model import BeamCoefficients, SpaceMesh, TimeGrid, seminorm_squared
from .timestep import NewmarkConfig, Trajectory, integrate_reversed

logger = logging.getLogger(__name__)

# implicit-Euler start-up steps for the Dirichlet adjoint, whose terminal
# data contain a stiff boundary layer at the root
STARTUP_STEPS = 2


@dataclass(frozen=True)
class AdjointSolution:
    """Adjoint trajectory in forward time order and its tip trace.

    For the Dirichlet adjoint ``trajectory`` holds the lifted field ``psi``;
    ``tip`` is always the trace of ``phi`` itself.
    """

    trajectory: Trajectory
    tip: np.ndarray
    flags: tuple = ()


def time_derivatives(y, dt: float):
    """First and second derivatives of samples, second order everywhere.

    Centered differences inside, one-sided second-order stencils at the ends.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 4:
        raise ValueError("need at least 4 samples for second derivatives")
    d1 = np.gradient(y, dt, edge_order=2)
    d2 = np.empty_like(y)
    d2[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / dt**2
    d2[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / dt**2
    d2[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / dt**2
    return d1, d2


def _ops(c, mesh, ops):
    return assemble(c, mesh) if ops is None else ops


def solve_adjoint_neumann(c: BeamCoefficients, mesh: SpaceMesh, grid: TimeGrid, xi,
                          ops: Optional[AssembledOperators] = None,
                          cfg: Optional[NewmarkConfig] = None) -> AdjointSolution:
    """Adjoint with tip shear input ``xi``; its tip trace is the gradient of
    the deflection misfit when ``xi = u(ell) - nu``.

    Parameters
    ----------
    xi : array_like
        Samples on ``grid``. A nonzero ``xi(T)`` is accepted and flagged.
    """
    ops = _ops(c, mesh, ops)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (grid.size,):
        raise ValueError("xi must have one sample per grid node")
    flags = ()
    scale = float(np.max(np.abs(xi))) if xi.size else 0.0
    if scale > 0 and abs(xi[-1]) > 1e-12 * scale:
        flags = ("xi_terminal_nonzero",)
        logger.debug("adjoint input xi(T)=%g is not zero", xi[-1])
    F = np.zeros((grid.size, ops.ndof))
    F[:, ops.load_map.shear_dof_index] = xi
    traj = integrate_reversed(ops, F, None, cfg if cfg is not None else NewmarkConfig(grid))
    return AdjointSolution(traj, traj.u[:, ops.load_map.shear_dof_index].copy(), flags)


def dirichlet_terminal_data(ops: AssembledOperators, theta_T: float, dtheta_T: float):
    """Terminal ``(psi(T), psi_t(T))`` that make the discrete duality exact."""
    lm = ops.load_map
    Mf = cho_factor(ops.M)
    psi = -theta_T * cho_solve(Mf, lm.x_rho)
    dpsi = cho_solve(Mf, ops.C @ psi - dtheta_T * lm.x_rho + theta_T * lm.x_mu)
    return psi, dpsi


def solve_adjoint_dirichlet(c: BeamCoefficients, mesh: SpaceMesh, grid: TimeGrid, theta,
                            ops: Optional[AssembledOperators] = None,
                            cfg: Optional[NewmarkConfig] = None) -> AdjointSolution:
    """Adjoint with root slope input ``theta``; its tip trace is the gradient
    of the moment misfit when ``theta = m(0; g) + omega``.

    ``theta`` must be smooth enough for two discrete derivatives; noisy data
    are smoothed upstream.
    """
    ops = _ops(c, mesh, ops)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (grid.size,):
        raise ValueError("theta must have one sample per grid node")
    d1, d2 = time_derivatives(theta, grid.dt)
    lm = ops.load_map
    F = np.outer(d1, lm.x_mu) - np.outer(d2, lm.x_rho)
    terminal = dirichlet_terminal_data(ops, theta[-1], d1[-1])
    cfg = cfg if cfg is not None else NewmarkConfig(grid, startup_steps=STARTUP_STEPS)
    traj = integrate_reversed(ops, F, terminal, cfg)
    tip = traj.u[:, lm.shear_dof_index] + c.ell * theta
    return AdjointSolution(traj, tip)


def adjoint_bound_check(sol: AdjointSolution, mesh: SpaceMesh, grid: TimeGrid, xi,
                        c: BeamCoefficients) -> tuple:
    """Compare ``||phi_xx||^2_{L2(L2)}`` with ``4 C0^2 / (3 r0^2) (1+T) ell^3 ||xi'||^2``.

    Returns
    -------
    (lhs, rhs) : tuple of float
    """
    one = lambda x: np.ones_like(x)
    curv = weighted_curvature_energy(one, mesh, sol.trajectory.u)
    lhs = float(np.dot(grid.weights(), curv))
    T, r0 = grid.T, c.bounds.r0
    c0sq = np.expm1(T)
    rhs = 4 * c0sq / (3 * r0**2) * (1 + T) * c.ell**3 * seminorm_squared(xi, grid.dt, 1)
    return lhs, float(rhs)
