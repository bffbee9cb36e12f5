"""
Superalgebra residuals and spectral-outcome bookkeeping for a pair.

The six outcomes for gap ``k`` (``E_k <= alpha1 < alpha2 <= E_(k+1)``):

==  ===============================  ==================  ==================
id  transformation functions         deleted             created
==  ===============================  ==================  ==================
A   both mid-gap, both growing       --                  alpha1, alpha2
B   both mid-gap, u2 zero-asymptotic --                  alpha1
C   u2 = psi_(k+1), u1 growing       E_(k+1)             alpha1
D   u1 = psi_k, u2 growing           E_k                 alpha2
E   u1 = psi_k, u2 zero-asymptotic   E_k                 --
F   u1 = psi_k, u2 = psi_(k+1)       E_k, E_(k+1)        --
==  ===============================  ==================  ==================
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .darboux import (
    DarbouxError,
    DarbouxPair,
    KernelFunctions,
    apply_L,
    apply_L_adjoint,
    kernel_functions,
)
from .ode import AsymptoticError, WaveFunction, asymptotic_class, d2, trapezoid
from .regularity import EIGEN_TOL, TransformSpec, one_sided_pair
from .spectrum import Spectrum, compute_spectrum

__all__ = [
    "CASE_LABELS",
    "SpectralOutcome",
    "OutcomeComparison",
    "AlgebraReport",
    "VerificationError",
    "predict_outcome",
    "verify_outcome",
    "intertwining_residual",
    "factorization_residual",
    "completeness_check",
    "gaussian_probes",
    "completeness_basis",
    "integrability_flags",
    "interior",
    "make_test_set",
    "expected_levels",
]

CASE_LABELS = (
    "A_two_created",
    "B_one_created",
    "C_delete_upper_create_lower",
    "D_delete_lower_create_upper",
    "E_delete_only",
    "F_krein_double_delete",
)

EDGE_FRACTION = 0.05
LEVEL_TOL = 1e-5
ORTHO_TOL = 1e-6


class VerificationError(RuntimeError):
    pass


def interior(n: int, fraction: float = EDGE_FRACTION) -> slice:
    """Indices with the outer ``fraction`` of samples removed on each side."""
    m = int(round(fraction * n))
    return slice(m, n - m)


@dataclass(frozen=True)
class SpectralOutcome:
    case_label: str
    deleted: tuple
    created: tuple
    basis_note: str
    k: int = 0
    excluded_levels: tuple = ()
    kernel_members: tuple = ()
    u_square_integrable: tuple = (False, False)
    v_square_integrable: tuple = (False, False)

    def to_dict(self) -> dict:
        return asdict(self)


def _safe_class(u: WaveFunction) -> str:
    try:
        return asymptotic_class(u)
    except AsymptoticError:
        return "undetermined"


def predict_outcome(spec: TransformSpec, u1: WaveFunction, u2: WaveFunction, spectrum: Spectrum) -> SpectralOutcome:
    """
    Case label, deleted and created levels from where the energies sit in
    the gap and from the tail behaviour of ``u1, u2``.

    A configuration outside the six cases gets the label ``unknown``.
    """
    k = spec.k
    Ek, Ek1 = spectrum.levels[k], spectrum.levels[k + 1]
    low = abs(spec.alpha1 - Ek) <= EIGEN_TOL
    high = abs(spec.alpha2 - Ek1) <= EIGEN_TOL
    c1, c2 = _safe_class(u1), _safe_class(u2)
    zero_one_side = ("zero_left", "zero_right")
    a1, a2 = float(spec.alpha1), float(spec.alpha2)

    if low and high and c1 == c2 == "zero_both":
        label, deleted, created = CASE_LABELS[5], (float(Ek), float(Ek1)), ()
        excluded, members = (k, k + 1), ()
    elif low and not high and c1 == "zero_both" and c2 == "growing_both":
        label, deleted, created = CASE_LABELS[3], (float(Ek),), (a2,)
        excluded, members = (k,), ("v2",)
    elif low and not high and c1 == "zero_both" and c2 in zero_one_side:
        label, deleted, created = CASE_LABELS[4], (float(Ek),), ()
        excluded, members = (k,), ()
    elif high and not low and c1 == "growing_both" and c2 == "zero_both":
        label, deleted, created = CASE_LABELS[2], (float(Ek1),), (a1,)
        excluded, members = (k + 1,), ("v1",)
    elif not low and not high and c1 == c2 == "growing_both":
        label, deleted, created = CASE_LABELS[0], (), (a1, a2)
        excluded, members = (), ("v1", "v2")
    elif not low and not high and c1 == "growing_both" and c2 in zero_one_side:
        label, deleted, created = CASE_LABELS[1], (), (a1,)
        excluded, members = (), ("v1",)
    else:
        return SpectralOutcome(
            "unknown", (), (), f"no case matches (u1: {c1}, u2: {c2}, "
            f"alpha1 at E_k: {low}, alpha2 at E_k+1: {high})", k,
        )

    parts = list(members) + ["L psi_n, n >= 0"]
    if excluded:
        parts[-1] = "L psi_n, n >= 0, n not in {" + ", ".join(map(str, excluded)) + "}"
    note = "{" + ", ".join(parts) + "} is complete in L2(R)"
    u_l2 = (c1 == "zero_both", c2 == "zero_both")
    v_l2 = ("v1" in members, "v2" in members)
    return SpectralOutcome(label, deleted, created, note, k, excluded, members, u_l2, v_l2)


@dataclass(frozen=True)
class OutcomeComparison:
    passed: bool
    expected: tuple
    observed: tuple
    max_deviation: float
    unmatched: tuple = ()
    tolerance: float = LEVEL_TOL

    def to_dict(self) -> dict:
        return asdict(self)


def expected_levels(spectrum0: Spectrum, outcome: SpectralOutcome, count: int) -> np.ndarray:
    """Lowest ``count`` levels of ``(spec(h0) minus deleted) union created``."""
    keep = [E for E in spectrum0.levels if all(abs(E - d) > EIGEN_TOL for d in outcome.deleted)]
    levels = np.sort(np.concatenate([keep, np.asarray(outcome.created, dtype=float)]))
    if levels.size < count:
        raise VerificationError(
            f"seed spectrum has too few levels ({levels.size}) to predict {count} partner levels"
        )
    return levels[:count]


def verify_outcome(
    pair: DarbouxPair,
    predicted: SpectralOutcome,
    k_max: int,
    spectrum0: Spectrum,
    spectrum2: Spectrum | None = None,
    tol: float = LEVEL_TOL,
) -> OutcomeComparison:
    """
    Recompute the spectrum of the tabulated V2 up to ``k_max`` and compare
    level by level with the prediction.
    """
    if spectrum2 is None:
        spectrum2 = compute_spectrum(pair.V2_potential, k_max, pair.grid)
    observed = spectrum2.levels[: k_max + 1]
    expected = expected_levels(spectrum0, predicted, k_max + 1)
    dev = np.abs(observed - expected)
    unmatched = tuple(float(E) for E, d in zip(observed, dev) if d > tol)
    return OutcomeComparison(
        bool(dev.max() <= tol), tuple(map(float, expected)), tuple(map(float, observed)),
        float(dev.max()), unmatched, tol,
    )


def _gap_solution(pair: DarbouxPair, E: float) -> WaveFunction:
    fL, fR = one_sided_pair(pair.V0, E, pair.grid)
    return WaveFunction(pair.grid, 0.6 * fL.values + 0.8 * fR.values, E, label=f"gap@{E:g}")


def _intertwining(pair: DarbouxPair, tests: list[WaveFunction]) -> tuple[float, int]:
    h = pair.grid.h
    sl = interior(pair.grid.n)
    worst, used = 0.0, 0
    for f in tests:
        if not isinstance(f, WaveFunction):
            f = _gap_solution(pair, float(f))
        Lf = apply_L(pair, f).values
        scale = np.max(np.abs(Lf[sl]))
        if scale <= 1e-8 * np.max(np.abs(f.values[sl])) * max(1.0, np.max(np.abs(pair.V0_values[sl]))):
            continue
        r = -d2(Lf, h) + (pair.V2 - f.energy) * Lf
        worst = max(worst, float(np.max(np.abs(r[sl])) / scale))
        used += 1
    if used == 0:
        raise VerificationError("every test function lies in the kernel of L")
    return worst, used


def intertwining_residual(pair: DarbouxPair, tests: list) -> float:
    """
    ``max_f |h2 (L f) - E (L f)|_inf / |L f|_inf`` over the interior, with a
    stencil second derivative. Functions in the kernel of L are skipped.
    Plain numbers in ``tests`` are read as energies and replaced by a
    generic mix of the one-sided solutions there.

    Growing gap solutions are poorly conditioned here: in the tails ``L f``
    is orders of magnitude smaller than the terms that produce it.
    """
    return _intertwining(pair, tests)[0]


@dataclass(frozen=True)
class AlgebraReport:
    intertwining_residual: float
    factorization_residual_L_adj_L: float
    factorization_residual_L_L_adj: float
    test_set_size: int
    kernel_annihilation: float = 0.0
    adjoint_kernel_residual: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def make_test_set(pair: DarbouxPair, spectrum0: Spectrum, n_eigen: int = 8, gap_energies=()) -> list[WaveFunction]:
    """Eigenfunctions of h0 plus growing gap solutions at the given energies."""
    tests = list(spectrum0.eigenfunctions[:n_eigen])
    for E in gap_energies:
        tests.append(_gap_solution(pair, E))
    return tests


def factorization_residual(
    pair: DarbouxPair,
    spectrum0: Spectrum,
    spectrum2: Spectrum,
    tests: list[WaveFunction] | None = None,
    n_eigen: int = 6,
) -> AlgebraReport:
    """
    Check ``L+ L = (h0 - a1)(h0 - a2)`` on eigenfunctions of h0 and
    ``L L+ = (h2 - a1)(h2 - a2)`` on eigenfunctions of h2, plus the
    intertwining residual on ``tests`` and the kernel annihilation of
    ``u1, u2`` and ``v1, v2``.

    Second derivatives inside the compositions are eliminated through the
    Schrodinger equation of whichever Hamiltonian the intermediate
    function solves, so the only stencils are first derivatives.
    """
    a1, a2 = pair.alpha1, pair.alpha2
    sl = interior(pair.grid.n)
    if tests is None:
        tests = make_test_set(pair, spectrum0, n_eigen + 2)

    res_ll = 0.0
    for psi in spectrum0.eigenfunctions[:n_eigen]:
        E = psi.energy
        lp = apply_L(pair, psi)
        back = apply_L_adjoint(pair, lp.values, energy=E)
        want = (E - a1) * (E - a2) * psi.values
        res_ll = max(res_ll, float(np.max(np.abs(back - want)[sl]) / np.max(np.abs(psi.values[sl]))))

    res_rr = 0.0
    for chi in spectrum2.eigenfunctions[:n_eigen]:
        E = chi.energy
        w = apply_L_adjoint(pair, chi.values, energy=E)
        fwd = apply_L(pair, WaveFunction(pair.grid, w, E)).values
        want = (E - a1) * (E - a2) * chi.values
        res_rr = max(res_rr, float(np.max(np.abs(fwd - want)[sl]) / np.max(np.abs(chi.values[sl]))))

    kern = 0.0
    for u in (pair.u1, pair.u2):
        out = apply_L(pair, u).values
        kern = max(kern, float(np.max(np.abs(out[sl])) / np.max(np.abs(u.values[sl]))))

    kf = kernel_functions(pair)
    adj = 0.0
    for v in (kf.v1, kf.v2):
        out = apply_L_adjoint(pair, v.values)
        adj = max(adj, float(np.max(np.abs(out[sl])) / np.max(np.abs(v.values[sl]))))

    inter, used = _intertwining(pair, tests)
    return AlgebraReport(inter, res_ll, res_rr, used, kern, adj)


def integrability_flags(pair: DarbouxPair, kf: KernelFunctions | None = None) -> dict:
    """Observed square integrability of ``u1, u2, v1, v2`` from tail slopes."""
    kf = kf or kernel_functions(pair)
    return {
        "u1": _safe_class(pair.u1) == "zero_both",
        "u2": _safe_class(pair.u2) == "zero_both",
        "v1": kf.v1_square_integrable,
        "v2": kf.v2_square_integrable,
    }


def gaussian_probes(x: np.ndarray, centers=(-2.0, 0.0, 2.0), widths=(0.5, 1.0, 2.0)) -> dict:
    """``exp(-((x - c) / w)^2)`` for every centre/width combination."""
    return {
        f"gauss(c={c:g},w={w:g})": np.exp(-(((x - c) / w) ** 2))
        for c in centers
        for w in widths
    }


def completeness_basis(
    pair: DarbouxPair, outcome: SpectralOutcome, spectrum0: Spectrum, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    The declared basis ordered by energy: normalized ``L psi_n`` (excluded
    levels removed) and the square-integrable kernel functions. Returns
    ``(energies, columns)``.
    """
    kf = kernel_functions(pair)
    h = pair.grid.h
    items = []
    for name in outcome.kernel_members:
        v = kf.v1 if name == "v1" else kf.v2
        items.append((v.energy, v.values / np.sqrt(trapezoid(v.values**2, h))))
    for n, psi in enumerate(spectrum0.eigenfunctions):
        if n in outcome.excluded_levels:
            continue
        phi = apply_L(pair, psi).values
        items.append((psi.energy, phi / np.sqrt(trapezoid(phi**2, h))))
        if len(items) >= size + len(outcome.kernel_members):
            break
    items.sort(key=lambda t: t[0])
    items = items[:size]
    if len(items) < size:
        raise VerificationError(f"only {len(items)} basis functions available, {size} requested")
    return np.array([e for e, _ in items]), np.column_stack([c for _, c in items])


def completeness_check(
    pair: DarbouxPair,
    outcome: SpectralOutcome,
    spectrum0: Spectrum,
    probes: dict,
    sizes=(4, 8, 12, 16),
) -> dict:
    """
    Reconstruction residual ``|p - sum <e_i, p> e_i|_2 / |p|_2`` of each
    probe using the first ``M`` basis elements, for every ``M`` in
    ``sizes``. Raises if the declared set is not orthonormal.
    """
    h = pair.grid.h
    n = pair.grid.n
    wts = np.full(n, h)
    wts[0] = wts[-1] = 0.5 * h
    sw = np.sqrt(wts)
    _, B = completeness_basis(pair, outcome, spectrum0, max(sizes))
    G = (B * wts[:, None]).T @ B
    off = float(np.max(np.abs(G - np.eye(G.shape[0]))))
    if off > ORTHO_TOL:
        raise VerificationError(f"declared basis is not orthonormal (max |G - I| = {off:.3g})")
    # Gram-Schmidt in the weighted inner product keeps the nested spans
    Q, _ = np.linalg.qr(B * sw[:, None])
    out = {}
    for name, p in probes.items():
        pw = p * sw
        norm = np.linalg.norm(pw)
        res = []
        for M in sizes:
            Qm = Q[:, :M]
            r = pw - Qm @ (Qm.T @ pw)
            res.append(float(np.linalg.norm(r) / norm))
        out[name] = res
    return {"sizes": list(sizes), "residuals": out, "orthonormality_defect": off}
