"""
Synthetic twin experiments and small sweeps built on the library.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import c_st, kappa0_lower_bound
from .inversion import (ReconstructionResult, TikhonovConfig, add_noise, landweber, relative_error,
                        synthesize)
from .model import BeamCoefficients, MeasurementTrace, SpaceMesh, TimeGrid, discrete_seminorm

logger = logging.getLogger(__name__)


def twin_truth(t):
    """Default true shear force ``t sin^2(pi t)``; it lies in the strictest class."""
    t = np.asarray(t, dtype=float)
    return t * np.sin(np.pi * t) ** 2


@dataclass(frozen=True)
class TwinResult:
    result: ReconstructionResult
    data: MeasurementTrace
    clean: MeasurementTrace
    g_true: np.ndarray
    rel_error: float
    config: TikhonovConfig


def run_twin(c: BeamCoefficients, mesh: SpaceMesh, grid: TimeGrid, problem: str = "IBVP1",
             g_fn: Callable = twin_truth, delta: float = 0.01, seed: Optional[int] = 0,
             refine: int = 2, **tikhonov) -> TwinResult:
    """Generate refined data, add noise, reconstruct from ``g0 = 0``.

    Extra keyword arguments go to :class:`TikhonovConfig` (``alpha``,
    ``step_rule``, ``max_iters`` ...). ``directions`` selects the search
    directions of :func:`landweber`.
    """
    directions = tikhonov.pop("directions", "gradient")
    kind = "deflection" if problem == "IBVP1" else "moment"
    clean = synthesize(c, mesh, grid, g_fn, kind, refine)
    data = add_noise(clean, delta, seed)
    cfg = TikhonovConfig(problem, data, c, mesh, **tikhonov)
    res = landweber(np.zeros(grid.size), cfg, directions=directions)
    g_true = np.asarray(g_fn(grid.t), dtype=float)
    err = relative_error(res.g_hat, g_true, grid)
    logger.info("%s twin: delta=%g stop=%s iters=%d rel_error=%.4f", problem, delta,
                res.stop_reason, res.iterations, err)
    return TwinResult(res, data, clean, g_true, err, cfg)


@dataclass(frozen=True)
class LCurvePoint:
    alpha: float
    residual: float
    seminorm: float


def lcurve(data: MeasurementTrace, c: BeamCoefficients, mesh: SpaceMesh, problem: str,
           alphas: Sequence[float], max_iters: int = 60) -> list:
    """Residual and seminorm of the regularized minimizers over ``alphas``.

    Each minimizer is approximated with conjugate directions and the exact
    line search, without discrepancy stopping.
    """
    out = []
    for a in alphas:
        # noise level 0 switches the discrepancy stop off
        cfg = TikhonovConfig(problem, replace(data, noise_level=0.0), c, mesh, alpha=a, step_rule="exact",
                             max_iters=max_iters, grad_tol=1e-8)
        res = landweber(np.zeros(data.grid.size), cfg, directions="cg")
        out.append(LCurvePoint(a, float(np.sqrt(2 * res.history[-1, 2])),
                               discrete_seminorm(res.g_hat, cfg.reg_order)))
    return out


def lcurve_corner(points: Sequence[LCurvePoint]) -> LCurvePoint:
    """Point of maximum curvature of the log-log L-curve (needs >= 3 points).

    Only interior points are candidates; the end values rest on one-sided
    differences.
    """
    if len(points) < 3:
        raise ValueError("need at least three points")
    x = np.log([p.residual for p in points])
    y = np.log([p.seminorm for p in points])
    s = np.log([p.alpha for p in points])
    dx, dy = np.gradient(x, s), np.gradient(y, s)
    ddx, ddy = np.gradient(dx, s), np.gradient(dy, s)
    kappa = (dx * ddy - dy * ddx) / np.maximum((dx * dx + dy * dy) ** 1.5, 1e-300)
    return points[1 + int(np.argmax(kappa[1:-1]))]


@dataclass(frozen=True)
class StabilityCheck:
    """``lhs = ||g_a - g_b||^2`` against ``rhs = C_ST ||nu_a' - nu_b'||^2``."""

    lhs: float
    rhs: float
    kappa0: float
    kappa0_required: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")

    @property
    def damping_sufficient(self) -> bool:
        return self.kappa0 >= self.kappa0_required


def stability_check(c: BeamCoefficients, mesh: SpaceMesh, grid: TimeGrid, alpha: float,
                    delta: float = 0.05, seed: Optional[int] = 0, g_fn: Callable = twin_truth,
                    max_iters: int = 150) -> StabilityCheck:
    """Soft check of the deflection stability estimate.

    Regularized IBVP1 minimizers are computed from clean and from noisy
    data; the squared L2 distance of the two is compared with ``C_ST``
    times the squared L2 distance of the data derivatives (forward
    differences). The estimate needs ``kappa0 >= kappa0_lower_bound``;
    :attr:`StabilityCheck.damping_sufficient` reports whether it holds.
    """
    clean = synthesize(c, mesh, grid, g_fn, "deflection")
    noisy = add_noise(clean, delta, seed)
    mins = []
    for d in (clean, noisy):
        cfg = TikhonovConfig("IBVP1", replace(d, noise_level=0.0), c, mesh, alpha=alpha,
                             max_iters=max_iters, grad_tol=1e-10)
        mins.append(landweber(np.zeros(grid.size), cfg, directions="cg").g_hat.samples)
    w = grid.weights()
    lhs = float(np.dot(w, (mins[0] - mins[1]) ** 2))
    dnu = np.diff(noisy.values - clean.values) / grid.dt
    b = c.bounds
    rhs = c_st(grid.T, c.ell, b.r0, b.kappa0) * float(grid.dt * np.dot(dnu, dnu))
    out = StabilityCheck(lhs, rhs, b.kappa0, kappa0_lower_bound(grid.T, c.ell, b.r0, alpha))
    logger.info("stability check: lhs=%.3e rhs=%.3e ratio=%.3e damping sufficient=%s",
                lhs, rhs, out.ratio, out.damping_sufficient)
    return out
