"""
Adjoint problems and the gradient of the misfit
===============================================

The gradient of both data misfits comes from one backward-in-time solve.
Here we check the duality identities directly and then compare adjoint
directional derivatives with central differences of the functional.
"""
import numpy as np

from kvbeam import BeamCoefficients, SourceSignal, SpaceMesh, TimeGrid, solve_direct
from kvbeam.adjoint import solve_adjoint_dirichlet, solve_adjoint_neumann
from kvbeam.inversion import TikhonovConfig, fd_gradient_oracle, random_directions, synthesize
from kvbeam.model import l2_inner

c = BeamCoefficients.reference()
mesh, grid = SpaceMesh(1.0, 32), TimeGrid(1.0, 2000)
t = grid.t
rng = np.random.default_rng(0)

# %% duality: (Phi dg, xi) = (phi(ell), dg) and (-Psi dg, theta) = (phi(ell), dg)
dg = SourceSignal(grid, t * np.sin(2 * np.pi * t) + t**2)
xi = np.cos(3 * t) * (1 - t)
theta = np.sin(np.pi * t) + 0.3 * np.cos(t)

s = solve_direct(c, mesh, grid, dg, diagnostics=False)
a = solve_adjoint_neumann(c, mesh, grid, xi)
b = solve_adjoint_dirichlet(c, mesh, grid, theta)
print("deflection pairing:", l2_inner(grid, s.deflection, xi), l2_inner(grid, a.tip, dg.samples))
print("moment pairing:    ", l2_inner(grid, -s.moment, theta), l2_inner(grid, b.tip, dg.samples))

# %% gradient check for both functionals
truth = lambda t: t * np.sin(np.pi * t) ** 2
for problem, kind in (("IBVP1", "deflection"), ("IBVP2", "moment")):
    data = synthesize(c, mesh, grid, truth, kind)
    for alpha in (0.0, 1e-3):
        cfg = TikhonovConfig(problem, data, c, mesh, alpha=alpha)
        g = 0.5 * truth(t) * (t**2 if problem == "IBVP2" else 1)
        eps = 1e-3 * np.sqrt(np.dot(grid.weights(), g * g))
        rep = fd_gradient_oracle(g, cfg, random_directions(grid, 5, cfg.klass, seed=1), eps=eps)
        print(f"{problem} alpha={alpha:g}: relative errors {np.array2string(rep.rel_errors, precision=2)}")
