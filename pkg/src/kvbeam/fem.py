"""
Hermite cubic finite elements for the clamped Kelvin-Voigt beam.

Each node carries a deflection and a slope DOF, ordered ``[w0, s0, w1, s1, ...]``.
The clamped DOFs at ``x = 0`` are eliminated, so free vectors have length
``2 * n_elems`` and the tip deflection is free index ``2 * n_elems - 2``.

The natural end conditions at ``x = ell`` (vanishing moment) are built into
the conforming weak form, so no boundary matrix is assembled for them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import BeamCoefficients, ModelError, SpaceMesh, validate_coefficients

logger = logging.getLogger(__name__)

BANDWIDTH = 3  # upper bandwidth of Hermite cubic matrices in DOF order

# 4-point Gauss-Legendre on [0, 1]; exact up to degree 7, which covers the
# cubic*cubic mass integrand times a linear coefficient.
_GP, _GW = np.polynomial.legendre.leggauss(4)
GAUSS_XI = 0.5 * (_GP + 1.0)
GAUSS_W = 0.5 * _GW


def hermite_basis(xi, h: float):
    """Values and second x-derivatives of the Hermite cubics on one element.

    Parameters
    ----------
    xi : array_like
        Reference coordinates in ``[0, 1]``.
    h : float
        Element length.

    Returns
    -------
    N, N2 : ndarray, shape (4, len(xi))
        Shape functions and their second derivatives with respect to ``x``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    N = np.array([
        1 - 3 * xi**2 + 2 * xi**3,
        h * (xi - 2 * xi**2 + xi**3),
        3 * xi**2 - 2 * xi**3,
        h * (-(xi**2) + xi**3),
    ])
    N2 = np.array([
        (-6 + 12 * xi) / h**2,
        (-4 + 6 * xi) / h,
        (6 - 12 * xi) / h**2,
        (-2 + 6 * xi) / h,
    ])
    return N, N2


def quadrature_points(mesh: SpaceMesh):
    """Physical Gauss points and weights, shape ``(n_elems, 4)`` each."""
    x0 = mesh.x[:-1, None]
    h = mesh.h[:, None]
    return x0 + h * GAUSS_XI[None, :], h * GAUSS_W[None, :]


@dataclass(frozen=True)
class LoadMap:
    """Boundary and lifting load data on the free DOFs."""

    shear_dof_index: int
    x_mu: np.ndarray   # int x mu(x) N_i dx
    x_rho: np.ndarray  # int x rho(x) N_i dx


@dataclass(frozen=True)
class AssembledOperators:
    """Free-DOF matrices of the semi-discrete beam system.

    ``M u'' + (C_mu + K_kappa) u' + K_r u = F``.
    """

    M: np.ndarray
    C_mu: np.ndarray
    K_r: np.ndarray
    K_kappa: np.ndarray
    load_map: LoadMap
    mesh: SpaceMesh

    @property
    def C(self) -> np.ndarray:
        """Total damping matrix."""
        return self.C_mu + self.K_kappa

    @property
    def ndof(self) -> int:
        return self.M.shape[0]


def _element_dofs(e: int) -> np.ndarray:
    return np.arange(2 * e, 2 * e + 4)


def assemble_full(c: BeamCoefficients, mesh: SpaceMesh) -> dict:
    """Assemble the unclamped matrices and lifting vectors.

    Returns
    -------
    dict
        Keys ``M, C_mu, K_r, K_kappa`` (``dof_count`` square) and
        ``x_mu, x_rho`` (``dof_count`` vectors).
    """
    n = mesh.dof_count
    out = {k: np.zeros((n, n)) for k in ("M", "C_mu", "K_r", "K_kappa")}
    out["x_mu"] = np.zeros(n)
    out["x_rho"] = np.zeros(n)
    xq, wq = quadrature_points(mesh)
    for e, h in enumerate(mesh.h):
        N, N2 = hermite_basis(GAUSS_XI, h)
        x, w = xq[e], wq[e]
        rho, mu, r, kap = c.rho(x), c.mu(x), c.r(x), c.kappa(x)
        idx = _element_dofs(e)
        sl = np.ix_(idx, idx)
        out["M"][sl] += (N * (w * rho)) @ N.T
        out["C_mu"][sl] += (N * (w * mu)) @ N.T
        out["K_r"][sl] += (N2 * (w * r)) @ N2.T
        out["K_kappa"][sl] += (N2 * (w * kap)) @ N2.T
        out["x_mu"][idx] += N @ (w * x * mu)
        out["x_rho"][idx] += N @ (w * x * rho)
    return out


def assemble(c: BeamCoefficients, mesh: SpaceMesh, check: bool = True) -> AssembledOperators:
    """Assemble the clamped FE operators.

    Parameters
    ----------
    c : BeamCoefficients
    mesh : SpaceMesh
    check : bool
        Refuse coefficients that violate their bounds. Pass ``False`` for
        diagnostic overrides such as a vanishing density.
    """
    if check:
        bad = validate_coefficients(c)
        if bad:
            raise ModelError("invalid coefficients: " + "; ".join(bad))
    if not np.isclose(mesh.ell, c.ell):
        raise ModelError(f"mesh length {mesh.ell} differs from beam length {c.ell}")
    full = assemble_full(c, mesh)
    mats = {k: np.ascontiguousarray(full[k][2:, 2:]) for k in ("M", "C_mu", "K_r", "K_kappa")}
    lm = LoadMap(mesh.tip_index, full["x_mu"][2:].copy(), full["x_rho"][2:].copy())
    logger.debug("assembled %d free DOFs on %d elements", mesh.free_dof_count, mesh.n_elems)
    return AssembledOperators(load_map=lm, mesh=mesh, **mats)


def unit_operators(mesh: SpaceMesh) -> AssembledOperators:
    """Operators with all coefficients equal to one; their quadratic forms
    give the plain ``||v||^2`` and ``||v_xx||^2`` of FE functions."""
    one = BeamCoefficients.uniform(mesh.ell, 1.0, 1.0, 1.0, 1.0)
    return assemble(one, mesh)


def shear_load(mesh: SpaceMesh, g_value: float) -> np.ndarray:
    """Load vector of the tip shear force: ``g_value`` at the tip deflection DOF."""
    f = np.zeros(mesh.free_dof_count)
    f[mesh.tip_index] = g_value
    return f


def lifting_load(c: BeamCoefficients, mesh: SpaceMesh, theta1: float, theta2: float,
                 ops: Optional[AssembledOperators] = None) -> np.ndarray:
    """Body-force load ``theta1 * (x mu, N_i) - theta2 * (x rho, N_i)``."""
    if ops is None:
        full = assemble_full(c, mesh)
        x_mu, x_rho = full["x_mu"][2:], full["x_rho"][2:]
    else:
        x_mu, x_rho = ops.load_map.x_mu, ops.load_map.x_rho
    return theta1 * x_mu - theta2 * x_rho


def body_force_loads(mesh: SpaceMesh, f: Callable, times) -> np.ndarray:
    """Consistent loads ``(f(., t_k), N_i)`` for a distributed force ``f(x, t)``.

    Returns
    -------
    ndarray, shape (len(times), free_dof_count)
    """
    times = np.asarray(times, dtype=float)
    xq, wq = quadrature_points(mesh)
    out = np.zeros((times.size, mesh.dof_count))
    for e, h in enumerate(mesh.h):
        N, _ = hermite_basis(GAUSS_XI, h)
        fx = np.asarray(f(xq[e][None, :], times[:, None]), dtype=float) * np.ones((times.size, 4))
        out[:, _element_dofs(e)] += (fx * wq[e]) @ N.T
    return out[:, 2:]


def expand_state(free) -> np.ndarray:
    """Prepend the clamped root DOFs (zeros) to free vector(s)."""
    free = np.asarray(free, dtype=float)
    pad = [(0, 0)] * (free.ndim - 1) + [(2, 0)]
    return np.pad(free, pad)


def interpolate(mesh: SpaceMesh, fn: Callable, dfn: Callable) -> np.ndarray:
    """Full-state Hermite interpolant of ``fn`` with derivative ``dfn``."""
    x = mesh.x
    out = np.empty(mesh.dof_count)
    out[0::2] = fn(x)
    out[1::2] = dfn(x)
    return out


def second_derivative_at_root(mesh: SpaceMesh, state) -> float:
    """``u_xx(0)`` of a full-state vector (clamped DOFs included)."""
    state = np.asarray(state, dtype=float)
    _, N2 = hermite_basis(0.0, mesh.h[0])
    return float(N2[:, 0] @ state[..., :4]) if state.ndim == 1 else state[..., :4] @ N2[:, 0]


def curvature_at_gauss(mesh: SpaceMesh, free) -> np.ndarray:
    """``v_xx`` at the Gauss points of every element for free-DOF vector(s).

    Evaluating curvature pointwise avoids the cancellation of forming
    ``v @ K @ v`` with the large entries of fine-mesh stiffness matrices.

    Returns
    -------
    ndarray, shape (..., n_elems, 4)
    """
    full = expand_state(free)
    out = np.empty(full.shape[:-1] + (mesh.n_elems, GAUSS_XI.size))
    for e, h in enumerate(mesh.h):
        _, N2 = hermite_basis(GAUSS_XI, h)
        out[..., e, :] = full[..., 2 * e:2 * e + 4] @ N2
    return out


def weighted_curvature_energy(coef, mesh: SpaceMesh, free) -> np.ndarray:
    """``int coef(x) v_xx^2 dx`` per vector, by Gauss quadrature."""
    xq, wq = quadrature_points(mesh)
    cw = coef(xq) * wq
    vxx = curvature_at_gauss(mesh, free)
    return np.einsum("...ej,ej->...", vxx * vxx, cw)


def root_curvature_row(mesh: SpaceMesh) -> np.ndarray:
    """Row vector ``d`` with ``u_xx(0) = d @ free`` for free-DOF vectors."""
    _, N2 = hermite_basis(0.0, mesh.h[0])
    d = np.zeros(mesh.free_dof_count)
    d[:2] = N2[2:, 0]
    return d
