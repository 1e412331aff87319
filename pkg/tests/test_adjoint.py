import numpy as np
import pytest

from kvbeam.adjoint import (adjoint_bound_check, dirichlet_terminal_data, solve_adjoint_dirichlet,
                            solve_adjoint_neumann, time_derivatives)
from kvbeam.forward import solve_direct
from kvbeam.model import SourceSignal, l2_inner


def _smooth(rng, t, k=4):
    a, b = rng.normal(size=k), rng.normal(size=k)
    return sum(a[j] * np.sin((j + 1) * np.pi * t) + b[j] * np.cos((j + 1) * np.pi * t) for j in range(k))


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def test_zero_inputs(small):
    c, mesh, grid, ops = small
    z = np.zeros(grid.size)
    assert not np.any(solve_adjoint_neumann(c, mesh, grid, z, ops=ops).tip)
    assert not np.any(solve_adjoint_dirichlet(c, mesh, grid, z, ops=ops).tip)


def test_linearity(small):
    c, mesh, grid, ops = small
    t = grid.t
    x1, x2 = np.sin(2 * t), t**2
    tip = lambda x: solve_adjoint_neumann(c, mesh, grid, x, ops=ops).tip
    assert np.allclose(tip(x1 - 2 * x2), tip(x1) - 2 * tip(x2), atol=1e-13)
    tipd = lambda x: solve_adjoint_dirichlet(c, mesh, grid, x, ops=ops).tip
    assert np.allclose(tipd(x1 + 3 * x2), tipd(x1) + 3 * tipd(x2), atol=1e-12)


def test_duality_small(small):
    c, mesh, grid, ops = small
    rng = np.random.default_rng(0)
    t = grid.t
    for _ in range(3):
        dg = SourceSignal(grid, _smooth(rng, t) * t)
        xi, th = _smooth(rng, t), _smooth(rng, t)
        s = solve_direct(c, mesh, grid, dg, ops=ops, diagnostics=False)
        a = solve_adjoint_neumann(c, mesh, grid, xi, ops=ops)
        assert _rel(l2_inner(grid, s.deflection, xi), l2_inner(grid, a.tip, dg.samples)) < 2e-2
        b = solve_adjoint_dirichlet(c, mesh, grid, th, ops=ops)
        assert _rel(l2_inner(grid, -s.moment, th), l2_inner(grid, b.tip, dg.samples)) < 2e-2


def test_terminal_data_satisfy_constraints(small):
    c, mesh, grid, ops = small
    psi, dpsi = dirichlet_terminal_data(ops, 0.7, -1.3)
    lm = ops.load_map
    assert np.allclose(ops.M @ psi, -0.7 * lm.x_rho, atol=1e-13)
    assert np.allclose(ops.M @ dpsi, ops.C @ psi + 1.3 * lm.x_rho + 0.7 * lm.x_mu, atol=1e-11)
    z, dz = dirichlet_terminal_data(ops, 0.0, 0.0)
    assert not np.any(z) and not np.any(dz)


def test_bound_check(small):
    c, mesh, grid, ops = small
    xi = grid.t * np.sin(np.pi * grid.t) ** 2
    sol = solve_adjoint_neumann(c, mesh, grid, xi, ops=ops)
    lhs, rhs = adjoint_bound_check(sol, mesh, grid, xi, c)
    assert 0 < lhs <= rhs


def test_time_derivatives_exact_on_quadratics():
    dt = 0.1
    t = np.arange(11) * dt
    d1, d2 = time_derivatives(3 * t**2 - t + 2, dt)
    assert np.allclose(d1, 6 * t - 1, atol=1e-12) and np.allclose(d2, 6.0, atol=1e-9)
    with pytest.raises(ValueError):
        time_derivatives(np.zeros(3), dt)


def test_terminal_flag(small):
    c, mesh, grid, ops = small
    assert solve_adjoint_neumann(c, mesh, grid, np.sin(np.pi * grid.t), ops=ops).flags == ()
    assert "xi_terminal_nonzero" in solve_adjoint_neumann(c, mesh, grid, grid.t, ops=ops).flags


def test_shape_errors(small):
    c, mesh, grid, ops = small
    with pytest.raises(ValueError):
        solve_adjoint_neumann(c, mesh, grid, np.zeros(3), ops=ops)
    with pytest.raises(ValueError):
        solve_adjoint_dirichlet(c, mesh, grid, np.zeros(3), ops=ops)
