"""
Tikhonov functionals, adjoint gradients and Landweber reconstruction.

For IBVP1 the data are the tip deflection ``nu`` and

    J1a(g) = 1/2 ||u(ell; g) - nu||^2 + alpha/2 |g|_{H^1}^2,

for IBVP2 the data are the root moment ``omega`` and

    J2a(g) = 1/2 ||Psi g - omega||^2 + alpha/2 |g|_{H^3}^2.

The misfit gradients are adjoint tip traces. The regularizer is
differentiated exactly in its discrete (forward-difference) form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from .adjoint import solve_adjoint_dirichlet, solve_adjoint_neumann
from .constants import evaluate_constants
from .fem import assemble
from .forward import solve_direct
from .model import (BeamCoefficients, MeasurementTrace, SourceSignal, SpaceMesh, TimeGrid,
                    project_consistency)
from .timestep import write_rows

logger = logging.getLogger(__name__)

PROBLEMS = ("IBVP1", "IBVP2")
STEP_RULES = ("constant", "fixed", "backtracking", "exact")
_KIND = {"IBVP1": "deflection", "IBVP2": "moment"}
_CLASS = {"IBVP1": "G1", "IBVP2": "G3"}


# --------------------------------------------------------------------------
# data helpers
# --------------------------------------------------------------------------
def add_noise(trace: MeasurementTrace, delta: float, seed: Optional[int] = None) -> MeasurementTrace:
    """Add Gaussian noise whose L2 norm is exactly ``delta * ||trace||``.

    Parameters
    ----------
    trace : MeasurementTrace
    delta : float
        Relative noise level, ``>= 0``.
    seed : int, optional
        Seed of the generator; the result is deterministic given the seed.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return replace(trace, noise_level=0.0)
    rng = np.random.default_rng(seed)
    n = rng.standard_normal(trace.values.size)
    w = trace.grid.weights()
    n *= delta * trace.norm() / np.sqrt(np.dot(w, n * n))
    return MeasurementTrace(trace.kind, trace.grid, trace.values + n, delta)


def smooth(values, width: int = 5, passes: int = 4) -> np.ndarray:
    """Repeated moving average (a cheap fourth-order low-pass)."""
    y = np.asarray(values, dtype=float)
    if width <= 1:
        return y.copy()
    for _ in range(passes):
        y = uniform_filter1d(y, size=width, mode="nearest")
    return y


def synthesize(c: BeamCoefficients, mesh: SpaceMesh, grid: TimeGrid, g_fn: Callable, kind: str,
               refine: int = 2) -> MeasurementTrace:
    """Noise-free data computed on a grid refined ``refine`` times in space
    and time, then restricted to ``grid`` (avoids the inverse crime)."""
    fmesh, fgrid = mesh.refined(refine), grid.refined(refine)
    g = SourceSignal.from_function(fgrid, g_fn)
    sol = solve_direct(c, fmesh, fgrid, g, diagnostics=False)
    vals = sol.deflection if kind == "deflection" else sol.moment
    return MeasurementTrace(kind, fgrid, vals).restricted(refine)


# --------------------------------------------------------------------------
# discrete regularizer
# --------------------------------------------------------------------------
def _diff_adjoint(y: np.ndarray) -> np.ndarray:
    out = np.zeros(y.size + 1)
    out[:-1] -= y
    out[1:] += y
    return out


def _trap(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def regularizer(samples, dt: float, m: int):
    """Value ``|g|_m^2`` and its exact gradient with respect to the samples."""
    g = np.asarray(samples, dtype=float)
    d = g.copy()
    for _ in range(m):
        d = np.diff(d) / dt
    w = _trap(d.size, dt)
    val = float(np.dot(w, d * d))
    y = 2 * w * d
    for _ in range(m):
        y = _diff_adjoint(y) / dt
    return val, y


# --------------------------------------------------------------------------
# configuration and functional
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class TikhonovConfig:
    """Everything needed to evaluate and minimize one Tikhonov functional.

    Parameters
    ----------
    problem : {"IBVP1", "IBVP2"}
    data : MeasurementTrace
        Deflection data for IBVP1, moment data for IBVP2.
    coefficients, mesh
        Model used for the inversion.
    alpha : float
        Regularization parameter.
    reg_order : int, optional
        Seminorm order; defaults to 1 (IBVP1) or 3 (IBVP2).
    step_rule : {"constant", "fixed", "backtracking", "exact"}
        ``constant`` uses ``1/L2`` or ``1/L3``; ``exact`` minimizes the
        (quadratic) functional along the search direction.
    smoothing : int
        Width of the moving average applied to moment data; 0 or 1 disables.
    """

    problem: str
    data: MeasurementTrace
    coefficients: BeamCoefficients
    mesh: SpaceMesh
    alpha: float = 0.0
    reg_order: Optional[int] = None
    step_rule: str = "exact"
    step: Optional[float] = None
    max_iters: int = 200
    morozov_tau: float = 1.2
    grad_tol: float = 1e-6
    smoothing: int = 5

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.data.kind != _KIND[self.problem]:
            raise ValueError(f"{self.problem} needs {_KIND[self.problem]} data, got {self.data.kind}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.morozov_tau > 1:
            raise ValueError("morozov_tau must exceed 1")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.step_rule == "fixed" and not (self.step and self.step > 0):
            raise ValueError("fixed step rule needs a positive step")
        if self.reg_order is None:
            object.__setattr__(self, "reg_order", 1 if self.problem == "IBVP1" else 3)

    @property
    def grid(self) -> TimeGrid:
        return self.data.grid

    @property
    def klass(self) -> str:
        return _CLASS[self.problem]

    @cached_property
    def ops(self):
        return assemble(self.coefficients, self.mesh)

    @cached_property
    def target(self) -> np.ndarray:
        """Data actually fitted: moment data are smoothed once here."""
        if self.problem == "IBVP2":
            return smooth(self.data.values, self.smoothing)
        return np.asarray(self.data.values)

    @cached_property
    def constants(self):
        return evaluate_constants(self.coefficients, self.grid.T, self.alpha or None)

    @property
    def lipschitz(self) -> float:
        return self.constants.L2 if self.problem == "IBVP1" else self.constants.L3

    def signal(self, samples) -> SourceSignal:
        return SourceSignal(self.grid, samples, self.klass)


def _as_samples(g) -> np.ndarray:
    return np.asarray(g.samples if isinstance(g, SourceSignal) else g, dtype=float)


def predict(g, cfg: TikhonovConfig) -> np.ndarray:
    """``Phi g`` (IBVP1) or ``Psi g`` (IBVP2) on the data grid."""
    sol = solve_direct(cfg.coefficients, cfg.mesh, cfg.grid, cfg.signal(_as_samples(g)),
                       ops=cfg.ops, diagnostics=False)
    return sol.deflection if cfg.problem == "IBVP1" else sol.moment


@dataclass(frozen=True)
class FunctionalValue:
    J: float
    misfit: float
    reg: float


def _value(pred, samples, cfg) -> FunctionalValue:
    w = cfg.grid.weights()
    r = pred - cfg.target
    mis = 0.5 * float(np.dot(w, r * r))
    reg = 0.0
    if cfg.alpha:
        reg = 0.5 * cfg.alpha * regularizer(samples, cfg.grid.dt, cfg.reg_order)[0]
    return FunctionalValue(mis + reg, mis, reg)


def eval_functional(g, cfg: TikhonovConfig) -> FunctionalValue:
    """``(J_alpha, misfit, reg)`` with trapezoid quadrature in time."""
    s = _as_samples(g)
    return _value(predict(s, cfg), s, cfg)


def data_gradient(residual, cfg: TikhonovConfig) -> np.ndarray:
    """Adjoint tip trace for a given residual ``prediction - data``.

    For IBVP2 the adjoint slope input is ``theta = m(0; g) + omega = -residual``.
    """
    residual = np.asarray(residual, dtype=float)
    c, mesh, grid = cfg.coefficients, cfg.mesh, cfg.grid
    if cfg.problem == "IBVP1":
        return solve_adjoint_neumann(c, mesh, grid, residual, ops=cfg.ops).tip
    return solve_adjoint_dirichlet(c, mesh, grid, -residual, ops=cfg.ops).tip


def gradient(g, cfg: TikhonovConfig, pred: Optional[np.ndarray] = None) -> np.ndarray:
    """L2(0,T) gradient of ``J_alpha`` sampled on the time grid.

    The pairing is the trapezoid inner product, so ``<gradient, e>_W`` is the
    directional derivative along ``e``.
    """
    s = _as_samples(g)
    pred = predict(s, cfg) if pred is None else pred
    grad = data_gradient(pred - cfg.target, cfg)
    if cfg.alpha:
        _, rg = regularizer(s, cfg.grid.dt, cfg.reg_order)
        grad = grad + 0.5 * cfg.alpha * rg / cfg.grid.weights()
    return grad


# --------------------------------------------------------------------------
# finite-difference oracle
# --------------------------------------------------------------------------
def central_difference(fun: Callable, x, e, eps: float) -> float:
    return (fun(x + eps * e) - fun(x - eps * e)) / (2 * eps)


@dataclass(frozen=True)
class FDReport:
    adjoint: np.ndarray        # <gradient, e>_W per direction
    finite_difference: np.ndarray
    eps: float

    @property
    def rel_errors(self) -> np.ndarray:
        a, f = self.adjoint, self.finite_difference
        den = np.where(np.abs(a) > 0, np.abs(a), 1.0)
        return np.abs(a - f) / den

    @property
    def max_rel_error(self) -> float:
        return float(np.max(self.rel_errors)) if self.adjoint.size else 0.0


def fd_gradient_oracle(g, cfg: TikhonovConfig, directions: Sequence, eps: Optional[float] = None,
                       grad: Optional[np.ndarray] = None) -> FDReport:
    """Compare adjoint directional derivatives with central differences of J.

    ``eps`` defaults to ``1e-5 * ||g||`` (``1e-5`` for ``g = 0``).
    """
    s = _as_samples(g)
    gn = float(np.sqrt(np.dot(cfg.grid.weights(), s * s)))
    eps = (1e-5 * gn if gn > 0 else 1e-5) if eps is None else eps
    grad = gradient(s, cfg) if grad is None else grad
    w = cfg.grid.weights()
    J = lambda x: eval_functional(x, cfg).J
    adj, fd = [], []
    for e in directions:
        e = np.asarray(e, dtype=float)
        adj.append(float(np.dot(w, grad * e)))
        fd.append(0.0 if not np.any(e) else central_difference(J, s, e, eps))
    return FDReport(np.array(adj), np.array(fd), eps)


def random_directions(grid: TimeGrid, n: int, klass: str = "G1", seed: int = 0, modes: int = 6) -> list:
    """Smooth random directions vanishing to the class order at ``t = 0``."""
    rng = np.random.default_rng(seed)
    t = grid.t / grid.T
    p = {"G1": 1, "G2": 2, "G3": 3}[klass]
    out = []
    for _ in range(n):
        a, b = rng.standard_normal(modes), rng.standard_normal(modes)
        k = np.arange(1, modes + 1)[:, None]
        e = (a[:, None] * np.sin(k * np.pi * t) + b[:, None] * np.cos(k * np.pi * t)).sum(0) / k[:, 0].size
        out.append(e * t**p)
    return out


# --------------------------------------------------------------------------
# Landweber iteration
# --------------------------------------------------------------------------
STOP_MOROZOV = "Morozov"
STOP_SMALL_GRADIENT = "SmallGradient"
STOP_MAX_ITERS = "MaxIters"
STOP_NON_MONOTONE = "NonMonotone"


@dataclass(frozen=True)
class ReconstructionResult:
    """Final iterate, per-iteration history and the reason for stopping.

    ``history`` rows are ``(iter, J, misfit, reg, grad_norm, step)``; the
    step of the last row is the one that was not taken (0).
    """

    g_hat: SourceSignal
    history: np.ndarray
    stop_reason: str
    residual_norm: float

    @property
    def iterations(self) -> int:
        return int(self.history[-1, 0])

    def history_to_csv(self, path) -> None:
        write_rows(path, ["iter", "J", "misfit", "reg", "grad_norm", "step"], self.history)

    def reconstruction_to_csv(self, path, g_true=None) -> None:
        t = self.g_hat.grid.t
        if g_true is None:
            write_rows(path, ["t", "g_hat"], np.column_stack([t, self.g_hat.samples]))
        else:
            write_rows(path, ["t", "g_hat", "g_true"], np.column_stack([t, self.g_hat.samples, g_true]))


def _restrict(grad: np.ndarray, k: int) -> np.ndarray:
    # W-orthogonal projection onto {g : g_0 = ... = g_{k-1} = 0}
    p = grad.copy()
    p[:k] = 0.0
    return p


def landweber(g0, cfg: TikhonovConfig, directions: str = "gradient") -> ReconstructionResult:
    """Projected gradient iteration ``g <- P(g - gamma_n J'(g))``.

    Parameters
    ----------
    g0 : SourceSignal or array_like
        Initial guess, in the class of ``cfg.problem``.
    cfg : TikhonovConfig
    directions : {"gradient", "cg"}
        Steepest descent (Landweber) or Polak-Ribiere conjugate directions;
        the latter only with the exact line search.

    Returns
    -------
    ReconstructionResult
    """
    if directions not in ("gradient", "cg"):
        raise ValueError("directions must be 'gradient' or 'cg'")
    if directions == "cg" and cfg.step_rule != "exact":
        raise ValueError("conjugate directions need the exact line search")
    grid, w, k = cfg.grid, cfg.grid.weights(), {"G1": 1, "G3": 3}[cfg.klass]
    g = project_consistency(cfg.signal(_as_samples(g0))).samples.copy()
    pred = predict(g, cfg)
    target = cfg.target
    delta = cfg.data.noise_level
    data_norm = float(np.sqrt(np.dot(w, target * target)))
    wnorm = lambda v: float(np.sqrt(np.dot(w, v * v)))

    step = {"constant": 1.0 / cfg.lipschitz, "fixed": cfg.step}.get(cfg.step_rule, 1.0 / cfg.lipschitz)
    grad0_norm = None
    hist = []
    prev_grad = prev_dir = None
    reason = STOP_MAX_ITERS
    for it in range(cfg.max_iters + 1):
        val = _value(pred, g, cfg)
        res_norm = wnorm(pred - target)
        grad = _restrict(gradient(g, cfg, pred), k)
        gnorm = wnorm(grad)
        if grad0_norm is None:
            grad0_norm = gnorm if gnorm > 0 else 1.0
        if hist and val.J > hist[-1][1] and cfg.step_rule in ("constant", "fixed"):
            hist.append([it, val.J, val.misfit, val.reg, gnorm, 0.0])
            logger.warning("J increased at iteration %d with a constant step; aborting", it)
            reason = STOP_NON_MONOTONE
            break
        # stopping precedence: Morozov > small gradient > max_iters
        if delta > 0 and res_norm <= cfg.morozov_tau * delta * data_norm:
            reason = STOP_MOROZOV
        elif gnorm <= cfg.grad_tol * grad0_norm or gnorm == 0.0:
            reason = STOP_SMALL_GRADIENT
        elif it == cfg.max_iters:
            reason = STOP_MAX_ITERS
        else:
            reason = None
        if reason is not None:
            hist.append([it, val.J, val.misfit, val.reg, gnorm, 0.0])
            break

        p = grad
        if directions == "cg" and prev_grad is not None:
            beta = max(0.0, float(np.dot(w, grad * (grad - prev_grad))) / float(np.dot(w, prev_grad * prev_grad)))
            p = grad + beta * prev_dir
        prev_grad, prev_dir = grad, p

        if cfg.step_rule == "exact":
            # J is quadratic in g: minimize exactly along -p, using the
            # discrete directional derivative of J itself.
            dp = predict(p, cfg)
            num = float(np.dot(w, (pred - target) * dp))
            den = float(np.dot(w, dp * dp))
            if cfg.alpha:
                _, rg = regularizer(g, grid.dt, cfg.reg_order)
                num += 0.5 * cfg.alpha * float(np.dot(rg, p))
                den += cfg.alpha * regularizer(p, grid.dt, cfg.reg_order)[0]
            if den <= 0 or num <= 0:
                hist.append([it, val.J, val.misfit, val.reg, gnorm, 0.0])
                reason = STOP_SMALL_GRADIENT
                break
            step = num / den
            g = g - step * p
            pred = pred - step * dp
        elif cfg.step_rule == "backtracking":
            step = min(2 * step, 1e6 / max(gnorm, 1e-300))
            for _ in range(60):
                trial = g - step * p
                tpred = predict(trial, cfg)
                if _value(tpred, trial, cfg).J < val.J:
                    break
                step *= 0.5
            g, pred = trial, tpred
        else:
            g = g - step * p
            pred = predict(g, cfg)
        g = project_consistency(cfg.signal(g)).samples.copy()
        hist.append([it, val.J, val.misfit, val.reg, gnorm, step])
        logger.debug("iter %d J=%.6e res=%.3e |grad|=%.3e step=%.3e", it, val.J, res_norm, gnorm, step)

    logger.info("stopped after %d iterations: %s", int(hist[-1][0]), reason)
    return ReconstructionResult(cfg.signal(g), np.array(hist, dtype=float), reason, res_norm)


def relative_error(g_hat, g_true, grid: TimeGrid) -> float:
    w = grid.weights()
    d = _as_samples(g_hat) - np.asarray(g_true)
    return float(np.sqrt(np.dot(w, d * d) / np.dot(w, np.asarray(g_true) ** 2)))
