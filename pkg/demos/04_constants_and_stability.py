"""
Stability constants
===================

The stability estimates depend on a chain of explicit constants built from
the coefficient bounds. This script evaluates the chain for the reference
beam, prints the stability table and checks the alpha condition of the
worked example (short horizon, stiff beam).
"""
from kvbeam import BeamCoefficients, evaluate_constants, stability_table
from kvbeam.constants import TABLE_PRINTED, alpha_condition_and_cst_tilde, alpha_example_bounds

bundle = evaluate_constants(BeamCoefficients.reference(), T=1.0, alpha=1e-3)
print(bundle.audit())

print("\n    T    alpha     kappa0   (printed)       C_ST   (printed)")
for r, (k, cst) in zip(stability_table(), TABLE_PRINTED):
    print(f"{r.T:5.2f}  {r.alpha:7.0e}  {r.kappa0:9.4g}  ({k:7.4g})  {r.c_st:9.2f}  ({cst:8.2f})")

# the exact prefactor instead of its two-digit rounding
print("\nexact prefactor:", [round(r.kappa0, 4) for r in stability_table(published=False)])

ell, T, b = alpha_example_bounds()
cond = alpha_condition_and_cst_tilde(evaluate_constants(b, T, 1e-2, ell=ell), T, ell, b.r0, b.rho0, 1e-2)
print(f"\nalpha example: alpha^2 must exceed {cond.threshold:.3e}; at alpha=1e-2, C_ST~ = {cond.c_st_tilde:.3e}")
