import numpy as np
import pytest

from darboux_forge.darboux import apply_L, apply_L_adjoint
from darboux_forge.regularity import Selector, TransformSpec, build_transformation_function
from darboux_forge.susy import (
    CASE_LABELS,
    VerificationError,
    completeness_check,
    expected_levels,
    factorization_residual,
    gaussian_probes,
    integrability_flags,
    intertwining_residual,
    make_test_set,
    predict_outcome,
    verify_outcome,
)

from _cases import CASES, case

EXPECTED = {
    "A": ("A_two_created", (), (1.5, 2.5)),
    "B": ("B_one_created", (), (1.5,)),
    "C": ("C_delete_upper_create_lower", (3.0,), (1.5,)),
    "D": ("D_delete_lower_create_upper", (1.0,), (2.5,)),
    "E": ("E_delete_only", (1.0,), ()),
    "F": ("F_krein_double_delete", (1.0, 3.0), ()),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_predicted_cases(name):
    out = case(name).outcome
    label, deleted, created = EXPECTED[name]
    assert out.case_label == label
    assert np.allclose(out.deleted, deleted, atol=1e-8)
    assert np.allclose(out.created, created)
    assert "complete in L2" in out.basis_note


@pytest.mark.parametrize("name", sorted(CASES))
def test_partner_spectrum_matches_prediction(name, s0):
    c = case(name)
    cmp = verify_outcome(c.pair, c.outcome, 8, s0, c.partner)
    assert cmp.passed, cmp
    assert cmp.unmatched == ()


def test_krein_partner_is_shifted_oscillator(krein, s0):
    assert np.allclose(krein.partner.levels[:5], [5, 7, 9, 11, 13], atol=1e-6)


def test_unknown_configuration(V, s0):
    # u1 decaying on one side only at a mid-gap energy matches no case
    g = s0.grid
    spec = TransformSpec(0, 1.5, 2.5, Selector("pure_left"), Selector.parse("target_nodes:1"))
    u1 = build_transformation_function(V, 1.5, spec.u1_selector, g, s0)
    u2 = build_transformation_function(V, 2.5, spec.u2_selector, g, s0)
    out = predict_outcome(spec, u1, u2, s0)
    assert out.case_label == "unknown"
    assert out.case_label not in CASE_LABELS


def test_expected_levels_needs_enough_seed_levels(krein, s0):
    with pytest.raises(VerificationError):
        expected_levels(s0, krein.outcome, len(s0) + 1)


def test_intertwining_krein(krein, s0):
    assert intertwining_residual(krein.pair, [s0.eigenfunctions[2]]) < 1e-5


def test_intertwining_skips_kernel(krein, s0):
    with pytest.raises(VerificationError, match="kernel"):
        intertwining_residual(krein.pair, [s0.eigenfunctions[0], s0.eigenfunctions[1]])


def test_intertwining_accepts_energies(krein):
    assert intertwining_residual(krein.pair, [1.5, 2.5]) < 1e-4


def test_krein_factorization_on_psi2(krein, s0):
    psi = s0.eigenfunctions[2]
    back = apply_L_adjoint(krein.pair, apply_L(krein.pair, psi).values, energy=psi.energy)
    sl = slice(1000, -1000)
    assert np.max(np.abs(back - 8 * psi.values)[sl]) < 1e-4 * np.max(np.abs(psi.values))


def test_adjoint_annihilates_v1_case_a(case_a):
    from darboux_forge.darboux import kernel_functions
    v1 = kernel_functions(case_a.pair).v1
    sl = slice(1000, -1000)
    assert np.max(np.abs(apply_L_adjoint(case_a.pair, v1.values, energy=1.5)[sl])) < 1e-6 * np.max(np.abs(v1.values))


@pytest.mark.parametrize("name", sorted(CASES))
def test_algebra_report(name, s0):
    c = case(name)
    rep = factorization_residual(c.pair, s0, c.partner)
    assert rep.test_set_size >= 6
    assert rep.intertwining_residual < 1e-4
    assert rep.factorization_residual_L_adj_L < 1e-4
    assert rep.factorization_residual_L_L_adj < 1e-4
    assert rep.kernel_annihilation < 1e-8


def test_test_set_composition(krein, s0):
    tests = make_test_set(krein.pair, s0, 8, (1.5,))
    assert len(tests) == 9 and tests[-1].energy == 1.5


@pytest.mark.parametrize("name", sorted(CASES))
def test_integrability_flags_match_prediction(name):
    c = case(name)
    flags = integrability_flags(c.pair)
    assert (flags["u1"], flags["u2"]) == c.outcome.u_square_integrable
    assert (flags["v1"], flags["v2"]) == c.outcome.v_square_integrable


def test_case_a_degeneracy_structure(case_a, s0):
    both = np.concatenate([s0.levels[:9], case_a.partner.levels])
    count = lambda E: int(np.sum(np.abs(both - E) < 1e-5))
    assert count(1.5) == 1 and count(2.5) == 1
    assert all(count(2 * n + 1) == 2 for n in range(6))


def test_completeness_krein_gaussian(krein, s0):
    x = krein.pair.grid.x
    res = completeness_check(krein.pair, krein.outcome, s0, {"g": np.exp(-x**2)}, sizes=(12,))
    assert res["residuals"]["g"][0] < 1e-3


def test_completeness_member_probe(krein, s0):
    phi = apply_L(krein.pair, s0.eigenfunctions[7]).values
    res = completeness_check(krein.pair, krein.outcome, s0, {"phi": phi}, sizes=(8,))
    assert res["residuals"]["phi"][0] < 1e-8


def test_completeness_case_a_monotone(case_a, s0):
    res = completeness_check(case_a.pair, case_a.outcome, s0, gaussian_probes(case_a.pair.grid.x))
    for name, r in res["residuals"].items():
        assert all(b <= a for a, b in zip(r, r[1:])), name
    assert res["orthonormality_defect"] < 1e-6
