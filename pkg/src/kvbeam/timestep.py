"""
Newmark time integration of ``M a + C v + K u = F(t)``.

The step matrix ``M + gamma dt C + beta dt^2 K`` is symmetric positive
definite and banded, so it is factored once per run with a banded Cholesky
decomposition.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .fem import BANDWIDTH, AssembledOperators
from .model import TimeGrid

logger = logging.getLogger(__name__)


class NumericalFailure(RuntimeError):
    """Singular system or divergent (non-finite) state."""


@dataclass(frozen=True)
class NewmarkConfig:
    """Newmark parameters; defaults give the average-acceleration rule."""

    grid: TimeGrid
    beta: float = 0.25
    gamma: float = 0.5
    # Number of leading steps taken as two implicit-Euler half steps each.
    # Damps stiff transients from incompatible initial data; the local
    # first-order error on a fixed number of steps keeps second order overall.
    startup_steps: int = 0

    def __post_init__(self):
        if not (2 * self.beta >= self.gamma >= 0.5):
            raise ValueError(f"need 2*beta >= gamma >= 1/2, got beta={self.beta}, gamma={self.gamma}")
        if not 0 <= self.startup_steps < self.grid.n_steps:
            raise ValueError("startup_steps must lie in [0, n_steps)")


@dataclass(frozen=True)
class Trajectory:
    """Free-DOF displacement, velocity and acceleration at every time node."""

    grid: TimeGrid
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def reflected(self) -> "Trajectory":
        """Time reflection ``t -> T - t`` (velocities change sign)."""
        return Trajectory(self.grid, self.u[::-1].copy(), -self.v[::-1], self.a[::-1].copy())

    def to_csv(self, path) -> None:
        """One row per step: ``t`` then the displacement DOFs."""
        write_rows(path, ["t"] + [f"u{i}" for i in range(self.u.shape[1])],
                   np.column_stack([self.grid.t, self.u]))


def write_rows(path, header, rows) -> None:
    """CSV with a header and full-precision (round-trip) floats."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def to_upper_banded(A: np.ndarray, p: int = BANDWIDTH) -> np.ndarray:
    """Upper banded storage ``ab[p + i - j, j] = A[i, j]`` used by LAPACK."""
    n = A.shape[0]
    ab = np.zeros((p + 1, n))
    for k in range(p + 1):
        ab[p - k, k:] = np.diagonal(A, k)
    return ab


def _factor(A: np.ndarray, what: str):
    try:
        return cholesky_banded(to_upper_banded(A))
    except LinAlgError as exc:
        raise NumericalFailure(f"{what} is not positive definite: {exc}") from exc


def integrate(ops: AssembledOperators, loads, init=None, cfg: Optional[NewmarkConfig] = None,
              grid: Optional[TimeGrid] = None) -> Trajectory:
    """Integrate the semi-discrete system forward in time.

    Parameters
    ----------
    ops : AssembledOperators
    loads : ndarray, shape (n_steps + 1, ndof)
        Load vector at every time node.
    init : tuple of ndarray, optional
        ``(u0, v0)``; zeros by default.
    cfg : NewmarkConfig, optional
        Defaults to average acceleration on ``grid``.

    Returns
    -------
    Trajectory

    Raises
    ------
    NumericalFailure
        Singular effective matrix or non-finite state.
    """
    if cfg is None:
        if grid is None:
            raise ValueError("either cfg or grid is required")
        cfg = NewmarkConfig(grid)
    grid = cfg.grid
    n, nt = ops.ndof, grid.size
    F = np.asarray(loads, dtype=float)
    if F.shape != (nt, n):
        raise ValueError(f"loads must have shape {(nt, n)}, got {F.shape}")
    u0, v0 = (np.zeros(n), np.zeros(n)) if init is None else (np.asarray(init[0], float), np.asarray(init[1], float))

    M, C, K = ops.M, ops.C, ops.K_r
    dt, beta, gamma = grid.dt, cfg.beta, cfg.gamma

    U = np.empty((nt, n))
    V = np.empty((nt, n))
    A = np.empty((nt, n))
    U[0], V[0] = u0, v0
    Mf = _factor(M, "mass matrix")
    A[0] = cho_solve_banded((Mf, False), F[0] - C @ v0 - K @ u0, check_finite=False)

    k0 = cfg.startup_steps
    if k0:
        h = 0.5 * dt
        B = _factor(M / h + C + h * K, "implicit Euler matrix")
        u, v = u0, v0
        for k in range(k0):
            for f in (0.5 * (F[k] + F[k + 1]), F[k + 1]):
                v = cho_solve_banded((B, False), f + M @ v / h - K @ u, check_finite=False)
                u = u + h * v
            U[k + 1], V[k + 1] = u, v
            A[k + 1] = cho_solve_banded((Mf, False), F[k + 1] - C @ v - K @ u, check_finite=False)

    # Acceleration (predictor-corrector) form. It is algebraically the usual
    # Newmark update, but the right-hand side stays at the size of the
    # physical forces, which avoids cancellation with stiff fine-mesh matrices.
    S = _factor(M + gamma * dt * C + beta * dt * dt * K, "effective matrix")
    cu, cv = (0.5 - beta) * dt * dt, (1.0 - gamma) * dt
    for k in range(k0, nt - 1):
        u, v, a = U[k], V[k], A[k]
        u_pred = u + dt * v + cu * a
        v_pred = v + cv * a
        an = cho_solve_banded((S, False), F[k + 1] - C @ v_pred - K @ u_pred, check_finite=False)
        A[k + 1] = an
        U[k + 1] = u_pred + beta * dt * dt * an
        V[k + 1] = v_pred + gamma * dt * an
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
        raise NumericalFailure("non-finite state: time integration diverged")
    return Trajectory(grid, U, V, A)


def integrate_reversed(ops: AssembledOperators, loads, terminal=None,
                       cfg: Optional[NewmarkConfig] = None, grid: Optional[TimeGrid] = None) -> Trajectory:
    """Solve the backward problem ``M a - C v + K u = F(t)`` from terminal data.

    With ``tau = T - t`` this becomes the forward damped problem with load
    ``F(T - tau)`` and initial data ``(u(T), -v(T))``. Inputs and output are
    in forward time order.

    Parameters
    ----------
    loads : ndarray, shape (n_steps + 1, ndof)
        ``F(t_k)`` in forward order.
    terminal : tuple of ndarray, optional
        ``(u(T), v(T))``; zeros by default.
    """
    F = np.asarray(loads, dtype=float)[::-1]
    init = None if terminal is None else (np.asarray(terminal[0], float), -np.asarray(terminal[1], float))
    return integrate(ops, F, init, cfg, grid).reflected()
