"""
Explicit constant chain of the a-priori, Lipschitz and stability estimates.

Every formula is evaluated as printed; nothing is tightened. The bundle keeps
the intermediate ``R1..R4`` so the chain can be audited line by line.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Optional

from .model import BeamCoefficients, Bounds
from .timestep import write_rows

logger = logging.getLogger(__name__)

# (T, alpha) rows of the published stability table, and its printed values
TABLE_ROWS = ((0.1, 1e-3), (0.5, 1e-2), (0.5, 1e-3), (0.5, 1e-4), (0.75, 1e-3), (1.0, 1e-3))
TABLE_PRINTED = ((0.0303, 0.143), (0.155, 9.02), (1.55, 90.25), (15.5, 902.51), (5.21, 455.64),
                 (13.6, 1440.91))


class DomainError(ValueError):
    """Nonpositive input where the formulas need a positive one."""


@dataclass(frozen=True)
class ConstantBundle:
    """Evaluated constants. Names ending in ``sq`` are squares."""

    T: float
    ell: float
    c_star: float
    c0sq: float
    R1: float
    R2: float
    R3: float
    R4: float
    c1sq: float
    c5sq: float
    c6sq: float
    c7sq: float
    c8sq: float
    c9sq: float
    c10sq: float
    L0sq: float
    L1sq: float
    L2sq: float
    L3sq: float
    c_st: float
    alpha: Optional[float] = None
    kappa0_required: Optional[float] = None
    c_st_tilde: Optional[float] = None

    @property
    def L0(self):
        return math.sqrt(self.L0sq)

    @property
    def L1(self):
        return math.sqrt(self.L1sq)

    @property
    def L2(self):
        return math.sqrt(self.L2sq)

    @property
    def L3(self):
        return math.sqrt(self.L3sq)

    def as_dict(self) -> dict:
        return asdict(self)

    def audit(self) -> str:
        """One ``name = value`` line per constant, in chain order."""
        return "\n".join(f"{k:>16s} = {v!r}" for k, v in self.as_dict().items())


def c_star(ell: float) -> float:
    """Poincare-type constant ``4 ell^2 (1 + 4 ell^2) + 1``."""
    return 4 * ell**2 * (1 + 4 * ell**2) + 1


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise DomainError(f"{k} must be positive, got {v}")


def evaluate_constants(c, T: float, alpha: Optional[float] = None, ell: Optional[float] = None) -> ConstantBundle:
    """Evaluate the whole constant chain.

    Parameters
    ----------
    c : BeamCoefficients or Bounds
        Coefficient bounds. With bare ``Bounds`` the length ``ell`` is required.
    T : float
        Final time.
    alpha : float, optional
        Regularization parameter; enables ``kappa0_required`` and the
        alpha-condition constant ``c_st_tilde``.
    """
    if isinstance(c, BeamCoefficients):
        b, ell = c.bounds, c.ell
    else:
        b = c
        if ell is None:
            raise ValueError("ell is required with bare bounds")
    _check_positive(ell=ell, T=T, r0=b.r0, kappa0=b.kappa0, rho0=b.rho0)
    l3 = ell**3
    r0, r1, k0, k1 = b.r0, b.r1, b.kappa0, b.kappa1
    rho0, rho1, mu1 = b.rho0, b.rho1, b.mu1

    cs = c_star(ell)
    c0sq = math.expm1(T)
    R1 = (4 * r1**2 * (l3 + 3) / (3 * r0) + k0 * l3 / (4 * (l3 + 3)) + r1) * (c0sq + 1) / k0
    R2 = 2 * R1 / (3 * r0) + 2 * (l3 + 3) / (3 * l3 * k0)
    R3 = R1 * rho1 + mu1
    R4 = R1 * r1 + r1**2
    c1sq = max(R2, R3, R4, k1 + 1)
    c5sq = (2 / k0) * max(2 * (1 + T) * (l3 + 3) / (3 * k0),
                          k0 * l3 / (2 * (l3 + 3)) + 2 * r1 + 2 * T * r1**2 * (l3 + 3) / (3 * k0))
    c6sq = (2 * l3 / 3) * (max(mu1**2, rho1**2) + rho1 * max(1 / T, T / 3))
    c7sq = 2 * ell**2 * max(1.0, (2 * ell / 3) * (rho1**2 + mu1**2))
    c8sq = (c7sq / 2) * (1 + (c1sq / (2 * rho0) + cs * (c0sq + 1) / (3 * r0 * k0)) * (1 + T) * l3)
    c9sq = 1 + T**2 + T**4 + T**6
    growth = 3 * c5sq * math.exp(c5sq * T) + c1sq * l3 * (1 + T)
    c10sq = (2 * T**7 * l3 * c6sq / (3 * r0)) * math.exp(T / rho0) * c7sq * (growth / (2 * rho0) + 1)
    L0sq = 4 * ell**6 * (1 + T) * c0sq / (9 * r0**2)
    L1sq = c7sq * (1 + (cs * (c0sq + 1) / (3 * k0 * r0) + c1sq / (2 * rho0)) * (1 + T) * l3)
    L2sq = (c0sq / (k0 * r0)) * (c0sq + 1) * (2 * ell**6 * (1 + T) / (9 * r0))**2
    L3sq = (c7sq * l3 * T * c6sq / (3 * r0)) * math.exp(T / rho0) * (1 + growth / (2 * rho0))
    out = dict(T=T, ell=ell, c_star=cs, c0sq=c0sq, R1=R1, R2=R2, R3=R3, R4=R4, c1sq=c1sq, c5sq=c5sq,
               c6sq=c6sq, c7sq=c7sq, c8sq=c8sq, c9sq=c9sq, c10sq=c10sq, L0sq=L0sq, L1sq=L1sq,
               L2sq=L2sq, L3sq=L3sq, c_st=c_st(T, ell, r0, k0), alpha=alpha)
    if alpha is not None:
        out["kappa0_required"] = kappa0_lower_bound(T, ell, r0, alpha)
        cond = _alpha_condition(c6sq, c9sq, c10sq, T, ell, r0, rho0, alpha)
        out["c_st_tilde"] = cond.c_st_tilde
    bundle = ConstantBundle(**out)
    logger.debug("constant chain:\n%s", bundle.audit())
    return bundle


def kappa0_lower_bound(T: float, ell: float, r0: float, alpha: float) -> float:
    """Smallest Kelvin-Voigt bound for the deflection stability estimate,
    ``sqrt(2) T^2 ell^6 e^T (1+T) / (9 r0 alpha)``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    _check_positive(T=T, ell=ell, r0=r0)
    return math.sqrt(2) * T**2 * ell**6 * math.exp(T) * (1 + T) / (9 * r0 * alpha)


def c_st(T: float, ell: float, r0: float, kappa0: float) -> float:
    """Stability constant ``9 r0 kappa0 T^2 / (ell^6 e^T (1+T))``."""
    return 9 * r0 * kappa0 * T**2 / (ell**6 * math.exp(T) * (1 + T))


class AlphaCondition(NamedTuple):
    satisfied: bool
    threshold: float          # C9^2 C10^2, the bound alpha^2 must exceed
    c_st_tilde: Optional[float]


def _alpha_condition(c6sq, c9sq, c10sq, T, ell, r0, rho0, alpha) -> AlphaCondition:
    thr = c9sq * c10sq
    if not alpha**2 > thr:
        return AlphaCondition(False, thr, None)
    val = 4 * T**13 * ell**3 * c6sq * math.exp(T / rho0) / ((alpha**2 - thr) * 3 * r0)
    return AlphaCondition(True, thr, val)


def alpha_condition_and_cst_tilde(bundle: ConstantBundle, T: float, ell: float, r0: float,
                                  rho0: float, alpha: float) -> AlphaCondition:
    """Check ``alpha^2 > C9^2 C10^2`` and, when it holds, evaluate
    ``4 T^13 ell^3 C6^2 e^{T/rho0} / ((alpha^2 - C10^2 C9^2) 3 r0)``."""
    return _alpha_condition(bundle.c6sq, bundle.c9sq, bundle.c10sq, T, ell, r0, rho0, alpha)


def table_prefactor(ell: float, r0: float, published: bool = True) -> float:
    """Prefactor of ``T^2 e^T (1+T) / alpha`` in the kappa0 bound.

    The exact value is ``sqrt(2) ell^6 / (9 r0)``; the published table uses it
    rounded to two significant figures (0.0025 for ell=0.5, r0=1).
    """
    p = math.sqrt(2) * ell**6 / (9 * r0)
    if published:
        p = float(f"{p:.2g}")
    return p


@dataclass(frozen=True)
class TableRow:
    T: float
    alpha: float
    kappa0: float
    c_st: float


def stability_table(rows: Iterable = TABLE_ROWS, ell: float = 0.5, r0: float = 1.0,
                    published: bool = True) -> list:
    """Rows ``(T, alpha, kappa0, C_ST)`` with ``C_ST`` evaluated at ``kappa0``.

    ``published=True`` reproduces the rounded prefactor of the printed table;
    ``False`` uses the exact formula.
    """
    p = table_prefactor(ell, r0, published)
    out = []
    for T, alpha in rows:
        if not alpha > 0:
            raise DomainError("alpha must be positive")
        k0 = p * T**2 * math.exp(T) * (1 + T) / alpha
        out.append(TableRow(T, alpha, k0, c_st(T, ell, r0, k0)))
    return out


def write_stability_table(rows, path) -> None:
    write_rows(path, ["T", "alpha", "kappa0", "C_ST"], [(r.T, r.alpha, r.kappa0, r.c_st) for r in rows])


def alpha_example_bounds() -> tuple:
    """Inputs of the worked alpha-condition example: ``(ell, T, Bounds)``.

    The unstated lower density and upper Kelvin-Voigt bounds default to
    ``rho0 = rho1`` and ``kappa1 = kappa0``.
    """
    b = Bounds(rho0=1.0, rho1=1.0, mu0=0.0, mu1=1.0, r0=20.0, r1=20.0, kappa0=1.0, kappa1=1.0)
    return 0.4, 0.04, b
