"""
Acceptance criteria, one test per criterion. Each prints a single
``CRITERION n [PASS|FAIL] ...`` line (also echoed in the pytest summary).
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, twin_truth
from kvbeam.adjoint import solve_adjoint_dirichlet, solve_adjoint_neumann
from kvbeam.constants import (TABLE_PRINTED, alpha_condition_and_cst_tilde, alpha_example_bounds,
                              evaluate_constants, stability_table)
from kvbeam.fem import assemble
from kvbeam.forward import solve_direct
from kvbeam.inversion import (STOP_MOROZOV, TikhonovConfig, add_noise, fd_gradient_oracle, gradient, landweber,
                              random_directions, relative_error, synthesize)
from kvbeam.model import BeamCoefficients, SourceSignal, SpaceMesh, TimeGrid, l2_inner, l2_norm, sobolev_norm

# Reconstruction errors observed once at seed 7 (32 elements, 2000 steps,
# 1% noise, exact-step Landweber from zero): 0.0337 (IBVP1), 0.0071 (IBVP2).
# Frozen at roughly 1.5x so that regressions show up well inside the
# 10% / 20% requirement.
FROZEN_ERR = {"IBVP1": 0.05, "IBVP2": 0.011}
REQUIRED_ERR = {"IBVP1": 0.10, "IBVP2": 0.20}


def report(n, ok, detail):
    line = f"CRITERION {n} [{'PASS' if ok else 'FAIL'}] {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _smooth(rng, t, k=4):
    a, b = rng.normal(size=k), rng.normal(size=k)
    return sum(a[j] * np.sin((j + 1) * np.pi * t) + b[j] * np.cos((j + 1) * np.pi * t) for j in range(k))


def test_criterion_1_stability_table():
    t0 = time.perf_counter()
    rows = stability_table()
    dt = time.perf_counter() - t0
    worst = max(max(abs(r.kappa0 / k - 1), abs(r.c_st / c - 1)) for r, (k, c) in zip(rows, TABLE_PRINTED))
    report(1, worst <= 0.01 and dt < 1.0,
           f"stability table: worst relative deviation {worst:.2%} (tol 1%), runtime {dt * 1e3:.1f} ms (< 1 s)")


def test_criterion_2_alpha_condition_example():
    ell, T, b = alpha_example_bounds()
    bundle = evaluate_constants(b, T, 1e-2, ell=ell)
    cond = alpha_condition_and_cst_tilde(bundle, T, ell, b.r0, b.rho0, 1e-2)
    d1 = abs(math.log10(cond.threshold / 9.37e-9))
    d2 = abs(math.log10(cond.c_st_tilde / 3.27e-17)) if cond.c_st_tilde else math.inf
    report(2, cond.satisfied and d1 < 1 and d2 < 1,
           f"alpha condition: threshold {cond.threshold:.3e} (printed 9.37e-09), "
           f"C_ST~ {cond.c_st_tilde:.3e} (printed 3.27e-17), within one decade")


def test_criterion_3_duality():
    t0 = time.perf_counter()
    c = BeamCoefficients.reference()
    worst = {}
    for ne, ns in ((32, 2000), (64, 4000)):
        mesh, grid = SpaceMesh(1.0, ne), TimeGrid(1.0, ns)
        ops, t = assemble(c, mesh), grid.t
        rng = np.random.default_rng(0)
        r = []
        for _ in range(5):
            dg = SourceSignal(grid, _smooth(rng, t) * t)
            xi, th = _smooth(rng, t), _smooth(rng, t)
            s = solve_direct(c, mesh, grid, dg, ops=ops, diagnostics=False)
            a = solve_adjoint_neumann(c, mesh, grid, xi, ops=ops)
            lhs, rhs = l2_inner(grid, s.deflection, xi), l2_inner(grid, a.tip, dg.samples)
            r.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
            b = solve_adjoint_dirichlet(c, mesh, grid, th, ops=ops)
            lhs, rhs = l2_inner(grid, -s.moment, th), l2_inner(grid, b.tip, dg.samples)
            r.append(abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
        worst[ne] = max(r)
    dt = time.perf_counter() - t0
    ratio = worst[64] / worst[32]
    report(3, worst[32] <= 1e-2 and ratio <= 0.3 and dt < 120,
           f"duality: max residual {worst[32]:.2e} at 32/2000 (tol 1e-2), {worst[64]:.2e} at 64/4000 "
           f"(ratio {ratio:.2f}, tol ~1/4), runtime {dt:.1f} s")


def test_criterion_4_gradient_check():
    # Two step sizes: the prescribed eps = 1e-5 ||g|| for the 1e-2 bound, and
    # eps = 1e-3 ||g|| for the refinement trend. J is quadratic, so central
    # differences carry no truncation error and the larger step only lowers
    # the roundoff that otherwise grows with resolution.
    t0 = time.perf_counter()
    c = BeamCoefficients.reference()
    errs, errs_small = {}, {}
    for ne, ns in ((32, 2000), (64, 4000)):
        mesh, grid = SpaceMesh(1.0, ne), TimeGrid(1.0, ns)
        for problem, kind in (("IBVP1", "deflection"), ("IBVP2", "moment")):
            data = synthesize(c, mesh, grid, twin_truth, kind)
            for alpha in (0.0, 1e-3):
                cfg = TikhonovConfig(problem, data, c, mesh, alpha=alpha)
                g = 0.5 * twin_truth(grid.t) * (grid.t**2 if problem == "IBVP2" else 1)
                gn = math.sqrt(float(np.dot(grid.weights(), g * g)))
                dirs = random_directions(grid, 5, cfg.klass, seed=1)
                grad = gradient(g, cfg)
                errs[(ne, problem, alpha)] = fd_gradient_oracle(g, cfg, dirs, 1e-3 * gn, grad).max_rel_error
                if ne == 32:
                    errs_small[(problem, alpha)] = fd_gradient_oracle(g, cfg, dirs, 1e-5 * gn, grad).max_rel_error
    dt = time.perf_counter() - t0
    coarse = max(v for k, v in errs.items() if k[0] == 32)
    prescribed = max(errs_small.values())
    decreasing = all(errs[(64,) + k[1:]] < errs[k] for k in errs if k[0] == 32)
    report(4, coarse <= 1e-2 and prescribed <= 1e-2 and decreasing and dt < 300,
           f"gradient check (IBVP1/IBVP2 x alpha in {{0, 1e-3}}, 5 directions): max relative error at 32/2000 "
           f"{prescribed:.2e} (eps 1e-5||g||) and {coarse:.2e} (eps 1e-3||g||), tol 1e-2; "
           f"all decrease at 64/4000 with eps 1e-3||g||: {decreasing}; runtime {dt:.1f} s")


def test_criterion_5_energy_identity(ref):
    c, mesh, grid, ops = ref
    r = []
    for g_ in (grid, TimeGrid(1.0, 4000)):
        sol = solve_direct(c, mesh, g_, SourceSignal.from_function(g_, twin_truth), ops=ops)
        r.append(float(np.max(np.abs(sol.energy))))
    ratio = r[0] / r[1]
    report(5, r[0] <= 1e-3 and abs(ratio - 4) <= 0.8,
           f"energy identity: residual {r[0]:.2e} of peak energy at 2000 steps (tol 1e-3), "
           f"reduction x{ratio:.2f} at 4000 steps (target ~4)")


@pytest.mark.parametrize("problem", ["IBVP1", "IBVP2"])
def test_criterion_6_landweber_monotone(ref, problem):
    c, mesh, grid, _ = ref
    kind = "deflection" if problem == "IBVP1" else "moment"
    data = add_noise(synthesize(c, mesh, grid, twin_truth, kind), 0.01, seed=7)
    # discrepancy stop switched off so that all 100 iterations are taken
    cfg = TikhonovConfig(problem, replace(data, noise_level=0.0), c, mesh, step_rule="constant",
                         max_iters=100, grad_tol=1e-300)
    res = landweber(np.zeros(grid.size), cfg)
    J = res.history[:, 1]
    viol = int(np.sum(np.diff(J) > 0))
    step = "1/L2" if problem == "IBVP1" else "1/L3"
    report(6, viol == 0 and res.iterations == 100,
           f"Landweber {problem}, step {step} = {1 / cfg.lipschitz:.3e}: {viol} increases of J over "
           f"{res.iterations} iterations (J {J[0]:.3e} -> {J[-1]:.3e})")


@pytest.mark.parametrize("problem", ["IBVP1", "IBVP2"])
def test_criterion_7_reconstruction(ref, problem):
    c, mesh, grid, _ = ref
    kind = "deflection" if problem == "IBVP1" else "moment"
    data = add_noise(synthesize(c, mesh, grid, twin_truth, kind), 0.01, seed=7)
    cfg = TikhonovConfig(problem, data, c, mesh, step_rule="exact", max_iters=500)
    res = landweber(np.zeros(grid.size), cfg)
    err = relative_error(res.g_hat, twin_truth(grid.t), grid)
    ok = res.stop_reason == STOP_MOROZOV and err <= REQUIRED_ERR[problem] and err <= FROZEN_ERR[problem]
    report(7, ok, f"{problem} twin: stop {res.stop_reason} after {res.iterations} iterations, relative L2 "
                  f"error {err:.4f} (required {REQUIRED_ERR[problem]:.0%}, frozen {FROZEN_ERR[problem]})")


def test_criterion_8_lipschitz(ref):
    c, mesh, grid, ops = ref
    b = evaluate_constants(c, grid.T)
    rng = np.random.default_rng(11)
    t = grid.t
    viol, worst = 0, 0.0
    for _ in range(20):
        g1, g2 = SourceSignal(grid, _smooth(rng, t) * t), SourceSignal(grid, _smooth(rng, t) * t)
        s1 = solve_direct(c, mesh, grid, g1, ops=ops, diagnostics=False)
        s2 = solve_direct(c, mesh, grid, g2, ops=ops, diagnostics=False)
        h1 = sobolev_norm(g1.with_samples(g1.samples - g2.samples), 1)
        q0 = l2_norm(grid, s1.deflection - s2.deflection) / (b.L0 * h1)
        q1 = l2_norm(grid, s1.moment - s2.moment) / (b.L1 * h1)
        viol += int(q0 > 1) + int(q1 > 1)
        worst = max(worst, q0, q1)
    report(8, viol == 0, f"Lipschitz bounds L0={b.L0:.3e}, L1={b.L1:.3e}: {viol} violations on 20 pairs "
                         f"(largest ratio to the bound {worst:.3f})")


def test_criterion_9_forward_order():
    c = BeamCoefficients.reference()
    mesh = SpaceMesh(1.0, 8)
    # manufactured u = x^2 (3 - x) sin^2 t with r = kappa = rho = 1, mu = 0.1
    s, sp, spp = (lambda t: np.sin(t) ** 2), (lambda t: np.sin(2 * t)), (lambda t: 2 * np.cos(2 * t))
    f = lambda x, t: x**2 * (3 - x) * (spp(t) + 0.1 * sp(t))
    mms, selfc = [], []
    for n in (250, 500, 1000, 2000):
        grid = TimeGrid(1.0, n)
        g = SourceSignal.from_function(grid, lambda t: 6 * (s(t) + sp(t)))
        sol = solve_direct(c, mesh, grid, g, body_force=f, diagnostics=False)
        mms.append(np.max(np.abs(sol.deflection - 2 * s(grid.t))))
        sol = solve_direct(c, mesh, grid, SourceSignal.from_function(grid, twin_truth), diagnostics=False)
        selfc.append(sol.deflection[-1])
    r_mms = np.array(mms[:-1]) / np.array(mms[1:])
    d = np.abs(np.diff(selfc))
    r_self = d[:-1] / d[1:]
    ratios = np.concatenate([r_mms, r_self])
    report(9, bool(np.all(np.abs(ratios - 4) <= 0.8)),
           f"forward order: manufactured-solution ratios {np.round(r_mms, 2).tolist()}, "
           f"self-convergence ratios {np.round(r_self, 2).tolist()} (target 4 +- 20%)")
