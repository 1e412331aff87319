import numpy as np
import pytest

from kvbeam.experiments import LCurvePoint, lcurve, lcurve_corner, run_twin, stability_check, twin_truth
from kvbeam.model import BeamCoefficients, SpaceMesh, TimeGrid


def test_corner_of_synthetic_l():
    # residual flat then rising, seminorm falling then flat: corner at alpha = 1e-3
    alphas = np.logspace(-6, 0, 7)
    res = [1e-3, 1e-3, 1.1e-3, 1.5e-3, 1e-2, 1e-1, 1.0]
    sem = [1e3, 1e2, 1e1, 1.2, 1.05, 1.01, 1.0]
    pts = [LCurvePoint(a, r, s) for a, r, s in zip(alphas, res, sem)]
    assert lcurve_corner(pts).alpha == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        lcurve_corner(pts[:2])


def test_twin_small(small):
    c, mesh, grid, _ = small
    tw = run_twin(c, mesh, grid, "IBVP1", delta=0.05, seed=1, directions="cg")
    assert tw.result.stop_reason == "Morozov" and tw.rel_error < 0.5
    assert np.array_equal(tw.g_true, twin_truth(grid.t))
    again = run_twin(c, mesh, grid, "IBVP1", delta=0.05, seed=1, directions="cg")
    assert np.array_equal(again.result.g_hat.samples, tw.result.g_hat.samples)


def test_lcurve_monotone_trends(small):
    c, mesh, grid, _ = small
    data = run_twin(c, mesh, grid, "IBVP1", delta=0.01, seed=2, max_iters=1).data
    pts = lcurve(data, c, mesh, "IBVP1", [1e-6, 1e-3, 1e-1], max_iters=200)
    res = [p.residual for p in pts]
    sem = [p.seminorm for p in pts]
    assert res == sorted(res) and sem == sorted(sem, reverse=True)


def test_stability_estimate_soft_check():
    # kappa = 1 exceeds the required bound 0.854 at alpha = 1 (T = ell = r0 = 1)
    chk = stability_check(BeamCoefficients.reference(), SpaceMesh(1.0, 8), TimeGrid(1.0, 200), alpha=1.0)
    assert chk.damping_sufficient
    assert 0 < chk.lhs <= chk.rhs
