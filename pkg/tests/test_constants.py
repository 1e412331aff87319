import math

import numpy as np
import pytest

from kvbeam.constants import (TABLE_PRINTED, TABLE_ROWS, DomainError, alpha_condition_and_cst_tilde,
                              alpha_example_bounds, c_st, c_star, evaluate_constants, kappa0_lower_bound,
                              stability_table, table_prefactor, write_stability_table)
from kvbeam.model import BeamCoefficients, Bounds


def test_c_star_examples():
    assert c_star(1.0) == 21.0
    assert c_star(0.5) == pytest.approx(3.0)


def test_table_prefactor_rounding():
    exact = math.sqrt(2) * 0.5**6 / 9
    assert table_prefactor(0.5, 1.0, published=False) == pytest.approx(exact, rel=1e-15)
    assert table_prefactor(0.5, 1.0) == 0.0025


def test_kappa0_and_c_st_are_reciprocal_in_alpha():
    # C_ST(kappa0_required) = sqrt(2) T^4 / alpha exactly
    for T, a in TABLE_ROWS:
        k = kappa0_lower_bound(T, 0.5, 1.0, a)
        assert c_st(T, 0.5, 1.0, k) == pytest.approx(math.sqrt(2) * T**4 / a, rel=1e-12)


def test_exact_formula_first_row():
    # the exact prefactor gives 0.02985, about 1.5% below the printed 0.0303
    k = kappa0_lower_bound(0.1, 0.5, 1.0, 1e-3)
    assert k == pytest.approx(0.0303, rel=0.02)
    assert stability_table(published=False)[0].kappa0 == pytest.approx(k, rel=1e-14)


def test_published_table_within_one_percent():
    for row, (k, cst) in zip(stability_table(), TABLE_PRINTED):
        assert row.kappa0 == pytest.approx(k, rel=0.01)
        assert row.c_st == pytest.approx(cst, rel=0.01)


def test_table_csv(tmp_path):
    p = tmp_path / "st.csv"
    write_stability_table(stability_table(), p)
    back = np.loadtxt(p, delimiter=",", skiprows=1)
    assert back.shape == (6, 4) and p.read_text().startswith("T,alpha,kappa0,C_ST")


def test_domain_errors():
    with pytest.raises(DomainError):
        kappa0_lower_bound(1.0, 0.5, 1.0, 0.0)
    with pytest.raises(DomainError):
        stability_table([(1.0, -1.0)])
    b = Bounds(rho0=1, rho1=1, mu0=0, mu1=1, r0=1, r1=1, kappa0=0.0, kappa1=1)
    with pytest.raises(DomainError):
        evaluate_constants(b, 1.0, ell=1.0)
    with pytest.raises(ValueError):
        evaluate_constants(b, 1.0)


def test_alpha_example():
    ell, T, b = alpha_example_bounds()
    bundle = evaluate_constants(b, T, 1e-2, ell=ell)
    cond = alpha_condition_and_cst_tilde(bundle, T, ell, b.r0, b.rho0, 1e-2)
    assert cond.satisfied
    assert abs(math.log10(cond.threshold / 9.37e-9)) < 1
    assert abs(math.log10(cond.c_st_tilde / 3.27e-17)) < 1
    assert bundle.c_st_tilde == cond.c_st_tilde
    small = alpha_condition_and_cst_tilde(bundle, T, ell, b.r0, b.rho0, 1e-5)
    assert not small.satisfied and small.c_st_tilde is None


def test_bundle_monotone_in_T():
    c = BeamCoefficients.reference()
    a, b = evaluate_constants(c, 1.0), evaluate_constants(c, 2.0)
    for k in ("c0sq", "L0sq", "L1sq", "L2sq", "L3sq", "c9sq"):
        assert getattr(b, k) > getattr(a, k)
    assert a.L0 == pytest.approx(math.sqrt(a.L0sq))


def test_bundle_dict_and_audit():
    bundle = evaluate_constants(BeamCoefficients.reference(), 1.0, 1e-3)
    d = bundle.as_dict()
    assert d["c0sq"] == pytest.approx(math.e - 1) and d["kappa0_required"] is not None
    text = bundle.audit()
    assert "L2sq" in text and "c_star" in text
    assert evaluate_constants(BeamCoefficients.reference(), 1.0).as_dict()["kappa0_required"] is None


def test_lipschitz_l0_example():
    # T = ell = r0 = 1: L0^2 = 4 (e - 1) 2 / 9
    b = evaluate_constants(BeamCoefficients.reference(), 1.0)
    assert b.L0sq == pytest.approx(8 * (math.e - 1) / 9, rel=1e-14)
    assert b.c_star == 21.0 and b.c0sq == pytest.approx(1.718281828, rel=1e-9)
