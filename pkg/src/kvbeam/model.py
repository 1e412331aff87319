"""
Beam model, admissible shear-force classes, grids and discrete Sobolev norms.

The cantilever occupies ``[0, ell]``, is clamped at ``x = 0`` and driven by a
transverse shear force ``g(t)`` at the free end. Coefficients are either
constants or piecewise-linear tables of samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

SIGNAL_CLASSES = ("G1", "G2", "G3")
# number of leading conditions g(0)=g'(0)=... imposed by each class
_CLASS_ORDER = {"G1": 1, "G2": 2, "G3": 3}


class ModelError(ValueError):
    """Raised for invalid model input (bad grids, bad tables, bad bounds)."""


# --------------------------------------------------------------------------
# coefficient functions
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Coefficient:
    """A coefficient function on ``[0, ell]``.

    Either a constant (``xs is None``) or a table of samples interpolated
    piecewise-linearly. Outside the table range the end values are held.

    Parameters
    ----------
    value : float
        Constant value; ignored when a table is given.
    xs, ys : array_like, optional
        Table abscissae (strictly increasing) and values.
    """

    value: float = 0.0
    xs: Optional[tuple] = None
    ys: Optional[tuple] = None

    def __post_init__(self):
        if self.xs is not None:
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
                raise ModelError("coefficient table needs >= 2 matching (x, value) samples")
            if np.any(np.diff(xs) <= 0):
                raise ModelError("coefficient table abscissae must be strictly increasing")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
                raise ModelError("coefficient table contains non-finite entries")
            object.__setattr__(self, "xs", tuple(xs.tolist()))
            object.__setattr__(self, "ys", tuple(ys.tolist()))

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        return cls(value=float(value))

    @classmethod
    def table(cls, xs: Sequence[float], ys: Sequence[float]) -> "Coefficient":
        return cls(xs=tuple(xs), ys=tuple(ys))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Coefficient":
        """Load a two-column ``x,value`` table. A header row is required."""
        path = Path(path)
        with open(path) as fh:
            header = fh.readline()
        try:
            [float(tok) for tok in header.split(",")]
        except ValueError:
            pass
        else:
            raise ModelError(f"{path}: header row required (first line is numeric)")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ModelError(f"{path}: expected two columns (x,value), found {data.shape[1]}")
        return cls.table(data[:, 0], data[:, 1])

    @property
    def is_constant(self) -> bool:
        return self.xs is None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.xs is None:
            return np.full_like(x, self.value)
        return np.interp(x, self.xs, self.ys)

    def samples(self) -> np.ndarray:
        """Values at which bounds are checked (table values, or the constant)."""
        if self.xs is None:
            return np.array([self.value])
        return np.asarray(self.ys)

    def extrema(self) -> tuple:
        s = self.samples()
        return float(s.min()), float(s.max())


@dataclass(frozen=True)
class Bounds:
    """Bound constants of the coefficient assumptions."""

    rho0: float
    rho1: float
    mu0: float
    mu1: float
    r0: float
    r1: float
    kappa0: float
    kappa1: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _as_coefficient(c) -> Coefficient:
    return c if isinstance(c, Coefficient) else Coefficient.constant(c)


@dataclass(frozen=True)
class BeamCoefficients:
    """Physical coefficients of the damped cantilever.

    Parameters
    ----------
    ell : float
        Beam length.
    rho, mu, r, kappa : Coefficient or float
        Density, external damping, flexural rigidity and Kelvin-Voigt
        coefficient.
    bounds : Bounds, optional
        Bound constants. When omitted they are taken as the tight extrema of
        the coefficient samples.
    """

    ell: float
    rho: Coefficient
    mu: Coefficient
    r: Coefficient
    kappa: Coefficient
    bounds: Bounds = None

    def __post_init__(self):
        for name in ("rho", "mu", "r", "kappa"):
            object.__setattr__(self, name, _as_coefficient(getattr(self, name)))
        if self.bounds is None:
            b = {}
            for name in ("rho", "mu", "r", "kappa"):
                lo, hi = getattr(self, name).extrema()
                b[name + "0"], b[name + "1"] = lo, hi
            object.__setattr__(self, "bounds", Bounds(**b))

    @classmethod
    def uniform(cls, ell=1.0, rho=1.0, mu=0.1, r=1.0, kappa=1.0, bounds=None) -> "BeamCoefficients":
        return cls(ell=float(ell), rho=rho, mu=mu, r=r, kappa=kappa, bounds=bounds)

    @classmethod
    def reference(cls) -> "BeamCoefficients":
        """The O(1) reference configuration used throughout the tests."""
        return cls.uniform(1.0, 1.0, 0.1, 1.0, 1.0)


def validate_coefficients(c: BeamCoefficients) -> list:
    """Check every coefficient sample against the declared bounds.

    Returns
    -------
    list of str
        Human-readable violations; empty when all invariants hold.
    """
    out = []
    b = c.bounds
    if not c.ell > 0:
        out.append(f"ell must be positive (got {c.ell})")
    # strict positivity of the lower bounds (mu0 may vanish)
    for key in ("rho0", "r0", "kappa0"):
        if not getattr(b, key) > 0:
            out.append(f"{key} must be positive (got {getattr(b, key)})")
    if b.mu0 < 0:
        out.append(f"mu0 must be nonnegative (got {b.mu0})")
    for name in ("rho", "mu", "r", "kappa"):
        coef = getattr(c, name)
        lo, hi = getattr(b, name + "0"), getattr(b, name + "1")
        vals = coef.samples()
        for i, v in enumerate(vals):
            where = "constant" if coef.is_constant else f"sample {i} (x={coef.xs[i]:g})"
            if v < lo:
                out.append(f"{name} lower bound {name}0={lo:g} violated at {where}: {v:g}")
            if v > hi:
                out.append(f"{name} upper bound {name}1={hi:g} violated at {where}: {v:g}")
    return out


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class SpaceMesh:
    """Mesh of ``[0, ell]`` for Hermite cubic elements.

    ``nodes`` defaults to a uniform partition into ``n_elems`` elements.
    """

    ell: float
    n_elems: int
    nodes: Optional[tuple] = None

    def __post_init__(self):
        if self.n_elems < 1:
            raise ModelError("n_elems must be >= 1")
        if self.nodes is None:
            nodes = np.linspace(0.0, self.ell, self.n_elems + 1)
        else:
            nodes = np.asarray(self.nodes, dtype=float)
        if nodes.shape != (self.n_elems + 1,):
            raise ModelError("nodes must have n_elems + 1 entries")
        if nodes[0] != 0.0 or not np.isclose(nodes[-1], self.ell, rtol=0, atol=1e-14 * max(1.0, self.ell)):
            raise ModelError("nodes must span [0, ell]")
        if np.any(np.diff(nodes) <= 0):
            raise ModelError("singular element: element lengths must be positive")
        object.__setattr__(self, "nodes", tuple(nodes.tolist()))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.nodes)

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def dof_count(self) -> int:
        return 2 * (self.n_elems + 1)

    @property
    def free_dof_count(self) -> int:
        return 2 * self.n_elems

    @property
    def tip_index(self) -> int:
        """Index of the tip deflection among the free DOFs."""
        return 2 * self.n_elems - 2

    def refined(self, factor: int = 2) -> "SpaceMesh":
        return SpaceMesh(self.ell, self.n_elems * factor)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k dt`` on ``[0, T]``."""

    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ModelError("T must be positive")
        if self.n_steps < 2:
            raise ModelError("n_steps must be >= 2")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def size(self) -> int:
        return self.n_steps + 1

    def weights(self, n: Optional[int] = None) -> np.ndarray:
        """Trapezoid weights on the first ``n`` (default all) grid points."""
        n = self.size if n is None else n
        w = np.full(n, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.n_steps * factor)


def l2_inner(grid: TimeGrid, a, b) -> float:
    """Trapezoid approximation of the L2(0,T) inner product."""
    return float(np.dot(grid.weights(), np.asarray(a) * np.asarray(b)))


def l2_norm(grid: TimeGrid, a) -> float:
    return float(np.sqrt(max(l2_inner(grid, a, a), 0.0)))


# --------------------------------------------------------------------------
# signals and traces
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class SourceSignal:
    """Sampled shear force on a time grid.

    Parameters
    ----------
    grid : TimeGrid
    samples : array_like
        ``g(t_k)``, one per grid node.
    klass : {"G1", "G2", "G3"}
        Admissibility class; controls the consistency conditions at t=0.
    bound : float, optional
        Admissibility radius ``C_g`` of the class ball (H^m norm).
    """

    grid: TimeGrid
    samples: np.ndarray
    klass: str = "G1"
    bound: Optional[float] = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.shape != (self.grid.size,):
            raise ModelError(f"signal has {s.shape} samples, grid needs {self.grid.size}")
        if not np.all(np.isfinite(s)):
            raise ModelError("signal samples must be finite")
        if self.klass not in SIGNAL_CLASSES:
            raise ModelError(f"unknown class {self.klass!r}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn, klass="G1", bound=None) -> "SourceSignal":
        return cls(grid, np.asarray(fn(grid.t), dtype=float) * np.ones(grid.size), klass, bound)

    @classmethod
    def zeros(cls, grid: TimeGrid, klass="G1") -> "SourceSignal":
        return cls(grid, np.zeros(grid.size), klass)

    def with_samples(self, samples) -> "SourceSignal":
        return replace(self, samples=np.asarray(samples, dtype=float))

    @property
    def order(self) -> int:
        """Number of leading conditions of the class."""
        return _CLASS_ORDER[self.klass]

    def consistency_defects(self) -> np.ndarray:
        """Leading one-sided differences ``g(0), D g(0), D^2 g(0)`` up to the class order."""
        dt = self.grid.dt
        return np.array([np.diff(self.samples[: k + 1], k)[0] / dt**k for k in range(self.order)])

    def is_consistent(self, tol: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.samples))), 1.0)
        return bool(np.all(np.abs(self.consistency_defects()) * self.grid.dt ** np.arange(self.order) <= tol * scale))

    def within_bound(self, m: int = 1) -> Optional[bool]:
        if self.bound is None:
            return None
        return sobolev_norm(self, m) <= self.bound


MEASUREMENT_KINDS = ("deflection", "moment")


@dataclass(frozen=True)
class MeasurementTrace:
    """Sampled boundary observation: tip deflection or root bending moment."""

    kind: str
    grid: TimeGrid
    values: np.ndarray
    noise_level: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if self.kind not in MEASUREMENT_KINDS:
            raise ModelError(f"unknown measurement kind {self.kind!r}")
        if v.shape != (self.grid.size,):
            raise ModelError("trace length does not match its grid")
        if not np.all(np.isfinite(v)):
            raise ModelError("trace values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return l2_norm(self.grid, self.values)

    def restricted(self, factor: int) -> "MeasurementTrace":
        """Subsample a trace computed on a ``factor``-times finer grid."""
        coarse = TimeGrid(self.grid.T, self.grid.n_steps // factor)
        if coarse.n_steps * factor != self.grid.n_steps:
            raise ModelError("grid is not a refinement by the requested factor")
        return MeasurementTrace(self.kind, coarse, self.values[::factor], self.noise_level)


# --------------------------------------------------------------------------
# discrete Sobolev norms
# --------------------------------------------------------------------------
def difference_operator(n: int, m: int, dt: float) -> np.ndarray:
    """Dense m-th forward-difference operator ``(n-m) x n`` scaled by ``dt**-m``."""
    D = np.eye(n)
    for _ in range(m):
        D = np.diff(D, axis=0)
    return D / dt**m


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    if n > 1:
        w[0] = w[-1] = 0.5 * dt
    return w


def _samples_and_dt(g):
    if isinstance(g, SourceSignal):
        return g.samples, g.grid.dt
    raise TypeError("expected a SourceSignal")


def seminorm_squared(samples, dt: float, m: int) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size < m + 1:
        raise ModelError(f"grid too short for order {m}: need >= {m + 1} samples")
    d = np.diff(samples, m) / dt**m
    return float(np.dot(_trapezoid_weights(d.size, dt), d * d))


def discrete_seminorm(g: SourceSignal, m: int) -> float:
    """Trapezoid L2 norm of the m-th forward difference of ``g``.

    Parameters
    ----------
    g : SourceSignal
    m : int
        Derivative order, typically 0, 1 or 3.

    Returns
    -------
    float
    """
    samples, dt = _samples_and_dt(g)
    return float(np.sqrt(seminorm_squared(samples, dt, m)))


def sobolev_norm(g: SourceSignal, m: int) -> float:
    """Discrete H^m norm, ``sqrt(sum_j seminorm(g, j)**2)``."""
    samples, dt = _samples_and_dt(g)
    return float(np.sqrt(sum(seminorm_squared(samples, dt, j) for j in range(m + 1))))


def project_consistency(g: SourceSignal) -> SourceSignal:
    """Enforce the class conditions at t=0 by polynomial subtraction.

    The interpolating polynomial of degree ``k-1`` through the first ``k``
    samples (``k`` = class order) is subtracted, so the first ``k`` samples
    and hence all one-sided differences of order ``< k`` vanish exactly.
    The map is idempotent.
    """
    k = g.order
    s = np.array(g.samples)
    lead = s[:k]
    if not np.any(lead):
        return g
    t = g.grid.t
    # Lagrange basis on t_0..t_{k-1}
    nodes = t[:k]
    poly = np.zeros_like(t)
    for j in range(k):
        basis = np.ones_like(t)
        for i in range(k):
            if i != j:
                basis *= (t - nodes[i]) / (nodes[j] - nodes[i])
        poly += lead[j] * basis
    s -= poly
    s[:k] = 0.0  # exact, so a second pass is a no-op
    return g.with_samples(s)


def project_ball(g: SourceSignal, m: int = 1) -> SourceSignal:
    """Radially scale ``g`` into the ball ``||g||_{H^m} <= bound`` (no-op without a bound)."""
    if g.bound is None:
        return g
    nrm = sobolev_norm(g, m)
    if nrm <= g.bound:
        return g
    return g.with_samples(g.samples * (g.bound / nrm))
