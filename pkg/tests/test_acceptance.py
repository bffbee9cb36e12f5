"""
Acceptance criteria 1-10 at their stated tolerances.

Each test records a one-line verdict that is printed at the end of the
pytest run; ``python tests/test_acceptance.py`` prints the same lines.
Criteria 3 (global ratio), 7 and 9 are asserted literally even where the
mathematics rules them out, so they are expected to fail.
"""

from __future__ import annotations

import math

import numpy as np

from darboux_forge.darboux import apply_L, second_order_transform
from darboux_forge.ode import asymptotic_class
from darboux_forge.potential import Grid, make_builtin_potential
from darboux_forge.regularity import (
    check_W_derivative_identity,
    construct_u_with_nodes,
    verify_wronskian_regularity,
)
from darboux_forge.spectrum import compute_spectrum
from darboux_forge.susy import (
    completeness_check,
    factorization_residual,
    gaussian_probes,
    integrability_flags,
    verify_outcome,
)

from _cases import ACCEPTANCE_LINES, CASES, case, oscillator, seed_spectrum

RANDOM_PAIRS = 50
SEED = 20240917


def _verdict(num: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[num] = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, ACCEPTANCE_LINES[num]


def test_criterion_01_seed_spectrum():
    s0 = seed_spectrum()
    err = float(np.max(np.abs(s0.levels[:9] - (2 * np.arange(9) + 1))))
    _verdict(1, err < 1e-8, f"max |E_k - (2k+1)|, k<=8: {err:.2e} (tol 1e-8)")


def test_criterion_02_krein():
    c = case("F")
    x = c.pair.grid.x
    sl = np.abs(x) <= 6
    dv = float(np.max(np.abs(c.pair.V2[sl] - (x[sl] ** 2 + 4))))
    de = float(np.max(np.abs(c.partner.levels[:5] - np.array([5, 7, 9, 11, 13]))))
    _verdict(2, dv < 1e-6 and de < 1e-6,
             f"max|V2-(x^2+4)| on |x|<=6: {dv:.2e}; spectrum deviation {de:.2e} (tol 1e-6)")


_PAIRS: list = []


def _random_pairs():
    """50 mid-gap pairs over gaps 0..3: (k, u1 with k+2 nodes, u2 with k+1)."""
    if _PAIRS:
        return _PAIRS
    rng = np.random.default_rng(SEED)
    V, s0 = oscillator(), seed_spectrum()
    for i in range(RANDOM_PAIRS):
        k = i % 4
        Ek, Ek1 = s0.levels[k], s0.levels[k + 1]
        lo, hi = np.sort(rng.uniform(0.02, 0.98, 2))
        if hi - lo < 0.02:
            hi = min(0.98, lo + 0.02)
        a1, a2 = Ek + lo * (Ek1 - Ek), Ek + hi * (Ek1 - Ek)
        u1 = construct_u_with_nodes(V, a1, k + 2, s0.grid)
        u2 = construct_u_with_nodes(V, a2, k + 1, s0.grid)
        _PAIRS.append((k, second_order_transform(V, u1, u2)))
    return _PAIRS


def test_criterion_03_regularity_theorem():
    s0 = seed_spectrum()
    bad_nodes = bad_alt = bad_ratio = bad_merged = 0
    worst_global, worst_local = math.inf, math.inf
    for k, pair in _random_pairs():
        rep = verify_wronskian_regularity(pair, s0)
        bad_nodes += rep.node_counts != (k + 2, k + 1)
        bad_alt += not rep.alternating
        bad_merged += len(rep.merged_zeros) != 2 * k + 3
        bad_ratio += not (pair.W.zero_crossings.size == 0 and rep.min_ratio_global > 1e-10)
        worst_global = min(worst_global, rep.min_ratio_global)
        worst_local = min(worst_local, rep.min_ratio_local)
    ok = bad_nodes == bad_alt == bad_ratio == bad_merged == 0
    _verdict(3, ok,
             f"{RANDOM_PAIRS} pairs: node/alternation/merged-count failures {bad_nodes}/{bad_alt}/{bad_merged}; "
             f"min|W|/max|W| > 1e-10 failed in {bad_ratio} (worst global {worst_global:.1e}, "
             f"worst 5%-window {worst_local:.1e})")


def test_criterion_04_w_identity():
    worst = max(check_W_derivative_identity(p.u1, p.u2) for _, p in _random_pairs())
    s0 = seed_spectrum()
    closed = check_W_derivative_identity(s0.eigenfunctions[0], s0.eigenfunctions[1])
    _verdict(4, worst < 1e-4 and closed < 1e-6,
             f"random pairs worst {worst:.2e} (tol 1e-4); (psi0, psi1) {closed:.2e} (tol 1e-6)")


def test_criterion_05_case_table():
    s0 = seed_spectrum()
    devs, failed = {}, []
    for name in sorted(CASES):
        c = case(name)
        cmp = verify_outcome(c.pair, c.outcome, 8, s0, c.partner, tol=1e-5)
        devs[name] = cmp.max_deviation
        if not cmp.passed or c.outcome.case_label == "unknown":
            failed.append(name)
    a = case("A")
    both = np.concatenate([s0.levels, a.partner.levels])
    count = lambda E: int(np.sum(np.abs(both - E) < 1e-5))
    multiset = count(1.5) == 1 and count(2.5) == 1 and all(count(s0.levels[n]) == 2 for n in range(6))
    worst = max(devs.values())
    _verdict(5, not failed and multiset,
             f"cases A-F worst level deviation {worst:.2e} (tol 1e-5), failed {failed or 'none'}; "
             f"case A degeneracy multiset {'ok' if multiset else 'wrong'}")


def test_criterion_06_superalgebra():
    s0 = seed_spectrum()
    worst = {"inter": 0.0, "LadjL": 0.0, "LLadj": 0.0, "kernel": 0.0}
    smallest_set = 10**9
    for name in sorted(CASES):
        c = case(name)
        rep = factorization_residual(c.pair, s0, c.partner)
        worst["inter"] = max(worst["inter"], rep.intertwining_residual)
        worst["LadjL"] = max(worst["LadjL"], rep.factorization_residual_L_adj_L)
        worst["LLadj"] = max(worst["LLadj"], rep.factorization_residual_L_L_adj)
        worst["kernel"] = max(worst["kernel"], rep.kernel_annihilation)
        smallest_set = min(smallest_set, rep.test_set_size)
    ok = (worst["inter"] < 1e-4 and worst["LadjL"] < 1e-4 and worst["LLadj"] < 1e-4
          and worst["kernel"] < 1e-8 and smallest_set >= 6)
    _verdict(6, ok,
             f"intertwining {worst['inter']:.2e}, L+L {worst['LadjL']:.2e}, LL+ {worst['LLadj']:.2e} "
             f"(tol 1e-4); |Lu|/|u| {worst['kernel']:.1e} (tol 1e-8); smallest test set {smallest_set}")


def test_criterion_07_asymptotic_reversion():
    per = {}
    for name in sorted(CASES):
        pair = case(name).pair
        n = pair.grid.n
        m = int(round(0.05 * n))
        dv = np.r_[pair.V2[:m] - pair.V0_values[:m], pair.V2[-m:] - pair.V0_values[-m:]]
        per[name] = float(np.max(np.abs(dv)))
    ok = all(v < 1e-3 for v in per.values())
    detail = ", ".join(f"{k} {v:.3g}" for k, v in per.items())
    _verdict(7, ok, f"max|V2-V0| on outer 5%: {detail} (tol 1e-3)")


def test_criterion_08_integrability():
    s0 = seed_spectrum()
    mismatches = 0
    for name in sorted(CASES):
        c = case(name)
        flags = integrability_flags(c.pair)
        deleted_pred = {a for a, f in ((c.pair.alpha1, flags["u1"]), (c.pair.alpha2, flags["u2"])) if f}
        created_pred = {a for a, f in ((c.pair.alpha1, flags["v1"]), (c.pair.alpha2, flags["v2"])) if f}
        h0 = s0.levels[:7]
        h2 = c.partner.levels
        top = h0[-1]
        deleted_obs = {float(E) for E in h0 if np.min(np.abs(h2 - E)) > 1e-5}
        created_obs = {float(E) for E in h2 if E < top and np.min(np.abs(h0 - E)) > 1e-5}
        match = lambda pred, obs: len(pred) == len(obs) and all(
            any(abs(p - o) < 1e-5 for o in obs) for p in pred)
        mismatches += (not match(deleted_pred, deleted_obs)) + (not match(created_pred, created_obs))
    _verdict(8, mismatches == 0, f"flag-vs-spectrum mismatches over cases A-F: {mismatches}")


def test_criterion_09_completeness():
    s0 = seed_spectrum()
    sizes = (4, 8, 12, 16)
    lines, ok = [], True
    for name in ("A", "F"):
        c = case(name)
        res = completeness_check(c.pair, c.outcome, s0, gaussian_probes(c.pair.grid.x), sizes)
        monotone = all(all(b <= a for a, b in zip(r, r[1:])) for r in res["residuals"].values())
        worst_name, worst = max(((k, r[-1]) for k, r in res["residuals"].items()), key=lambda t: t[1])
        ok &= monotone and worst < 1e-2
        lines.append(f"{name}: monotone={monotone}, worst M=16 residual {worst:.3g} [{worst_name}]")
    _verdict(9, ok, "; ".join(lines) + " (tol 1e-2)")


def test_criterion_10_refinement_order():
    V = make_builtin_potential("harmonic")
    errs = []
    for n in (401, 801):
        spec = compute_spectrum(V, 8, Grid(-10.0, 10.0, n))
        errs.append(float(np.max(np.abs(spec.levels - (2 * np.arange(9) + 1)))))
    ratio = errs[0] / errs[1]
    _verdict(10, ratio >= 16, f"error {errs[0]:.3e} -> {errs[1]:.3e} on halving h, ratio {ratio:.3f} (need >= 16)")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    for num in sorted(ACCEPTANCE_LINES):
        print(ACCEPTANCE_LINES[num])
