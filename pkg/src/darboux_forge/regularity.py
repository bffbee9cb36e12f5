"""
Transformation functions with prescribed nodes, and regularity checks of
the Wronskian ``W(u1, u2)``.

A solution at a gap energy is a combination of the two one-sided
solutions ``fL`` (decaying at the left edge) and ``fR`` (decaying at the
right edge). Generic combinations grow at both infinities and have either
``k+1`` or ``k+2`` nodes in gap ``k``; the pure ones keep one zero
asymptotic and have ``k+1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .darboux import DarbouxPair
from .ode import (
    AsymptoticError,
    WaveFunction,
    asymptotic_class,
    asymptotic_sides,
    count_nodes,
    d1,
    integrate,
    mix,
    node_positions,
)
from .potential import Grid, Potential
from .spectrum import Spectrum

__all__ = [
    "Selector",
    "TransformSpec",
    "RegularityReport",
    "AlternationReport",
    "ConstructionError",
    "one_sided_pair",
    "construct_u_with_nodes",
    "build_transformation_function",
    "check_alternating_zeros",
    "verify_wronskian_regularity",
    "check_W_derivative_identity",
    "gap_index",
]

THETA_POINTS = 256
ZERO_FREE_RATIO = 1e-10
EIGEN_TOL = 1e-7


class ConstructionError(RuntimeError):
    """No transformation function matches the requested properties."""


@dataclass(frozen=True)
class Selector:
    """
    How a transformation function is chosen at its energy.

    ``kind`` is one of ``eigenstate``, ``mixed`` (``value`` = theta),
    ``target_nodes`` (``value`` = node count), ``pure_left``, ``pure_right``.
    """

    kind: str
    value: float | None = None

    KINDS = ("eigenstate", "mixed", "target_nodes", "pure_left", "pure_right")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown selector {self.kind!r}; expected one of {self.KINDS}")
        if self.kind in ("mixed", "target_nodes") and self.value is None:
            raise ValueError(f"selector {self.kind} needs a value")

    @classmethod
    def parse(cls, text: str) -> "Selector":
        """``"target_nodes:2"``, ``"mixed:0.7"``, ``"eigenstate"``, ..."""
        kind, _, val = str(text).partition(":")
        kind = kind.strip()
        if not val:
            return cls(kind)
        num = float(val)
        return cls(kind, int(num) if kind == "target_nodes" else num)

    def __str__(self):
        return self.kind if self.value is None else f"{self.kind}:{self.value:g}"


def gap_index(spectrum: Spectrum, alpha: float) -> int:
    """``k`` with ``E_k <= alpha < E_(k+1)`` (alpha at E_k counts as gap k)."""
    levels = spectrum.levels
    k = int(np.searchsorted(levels, alpha + EIGEN_TOL, side="right")) - 1
    if k < 0:
        raise ValueError(f"alpha={alpha} lies below the ground state {levels[0]}")
    return k


def _eigen_match(spectrum: Spectrum, alpha: float) -> int | None:
    hits = np.flatnonzero(np.abs(spectrum.levels - alpha) <= EIGEN_TOL)
    return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class TransformSpec:
    """Gap index, the two energies and how ``u1, u2`` are selected."""

    k: int
    alpha1: float
    alpha2: float
    u1_selector: Selector
    u2_selector: Selector

    def validate(self, spectrum: Spectrum) -> None:
        """Check ``E_(k+1) >= alpha2 > alpha1 >= E_k`` and the selector rules."""
        lv = spectrum.levels
        if self.k + 1 >= lv.size:
            raise ValueError(f"spectrum does not reach E_{self.k + 1}")
        Ek, Ek1 = lv[self.k], lv[self.k + 1]
        if not self.alpha2 > self.alpha1:
            raise ValueError(f"need alpha2 > alpha1, got {self.alpha1}, {self.alpha2}")
        if self.alpha1 < Ek - EIGEN_TOL or self.alpha2 > Ek1 + EIGEN_TOL:
            raise ValueError(
                f"energies must satisfy E_{self.k + 1}={Ek1:.10g} >= alpha2 > alpha1 >= E_{self.k}={Ek:.10g}"
            )
        for alpha, sel, name in ((self.alpha1, self.u1_selector, "u1"), (self.alpha2, self.u2_selector, "u2")):
            at_level = _eigen_match(spectrum, alpha) is not None
            if sel.kind == "eigenstate" and not at_level:
                raise ValueError(f"{name}: eigenstate selector but alpha={alpha} is not an eigenvalue")
            if sel.kind != "eigenstate" and at_level:
                raise ValueError(f"{name}: alpha={alpha} is an eigenvalue; use the eigenstate selector")


def _interior_rms(f: WaveFunction, v: np.ndarray, alpha: float) -> float:
    allowed = np.flatnonzero(v <= alpha)
    if allowed.size >= 2:
        sl = slice(allowed[0], allowed[-1] + 1)
    else:
        n = f.grid.n
        sl = slice(int(0.45 * n), int(0.55 * n) + 1)
    return float(np.sqrt(np.mean(f.values[sl] ** 2)))


def one_sided_pair(V: Potential, alpha: float, grid: Grid) -> tuple[WaveFunction, WaveFunction]:
    """
    ``(fL, fR)`` at energy ``alpha``, each scaled to unit RMS over the
    classically allowed region so that mixing angles are comparable.
    """
    v = V.on(grid)
    fL = integrate(V, alpha, grid, "left")
    fR = integrate(V, alpha, grid, "right")
    fL = fL.scaled(1.0 / _interior_rms(fL, v, alpha)).with_label(f"fL@{alpha:g}")
    fR = fR.scaled(1.0 / _interior_rms(fR, v, alpha)).with_label(f"fR@{alpha:g}")
    return fL, fR


def _is_growing_both(f: WaveFunction) -> bool:
    return asymptotic_sides(f) == ("growing", "growing")


def construct_u_with_nodes(
    V: Potential,
    alpha: float,
    target_nodes: int,
    grid: Grid,
    spectrum: Spectrum | None = None,
    resolution: int = THETA_POINTS,
) -> WaveFunction:
    """
    Growing-at-both-ends solution at ``alpha`` with ``target_nodes`` nodes.

    Scans ``theta`` over a uniform partition of ``[0, pi)`` (pure one-sided
    angles excluded) and returns the first mix that qualifies; the
    partition is refined tenfold once if nothing is found. If ``alpha`` is
    an eigenvalue of the supplied spectrum the eigenfunction is returned
    instead, provided its node count matches.
    """
    if spectrum is not None:
        j = _eigen_match(spectrum, alpha)
        if j is not None:
            psi = spectrum.eigenfunctions[j]
            if psi.node_count != target_nodes:
                raise ConstructionError(
                    f"alpha={alpha} is E_{j}; its eigenfunction has {psi.node_count} nodes, not {target_nodes}"
                )
            return psi
    fL, fR = one_sided_pair(V, alpha, grid)
    seen = set()
    for res in (resolution, 10 * resolution):
        for j in range(1, res):
            if 2 * j == res:
                continue
            theta = math.pi * j / res
            u = mix(fL, fR, theta)
            n = u.node_count
            seen.add(n)
            if n == target_nodes and _is_growing_both(u):
                return u.with_label(f"u(alpha={alpha:g}, theta={theta:.6g}, nodes={n})")
    raise ConstructionError(
        f"no mix at alpha={alpha} has {target_nodes} nodes and grows at both ends; "
        f"observed node counts {sorted(seen)}"
    )


def build_transformation_function(
    V: Potential, alpha: float, selector: Selector, grid: Grid, spectrum: Spectrum
) -> WaveFunction:
    """Resolve a selector into a concrete transformation function."""
    if selector.kind == "eigenstate":
        j = _eigen_match(spectrum, alpha)
        if j is None:
            raise ConstructionError(f"alpha={alpha} is not an eigenvalue of the seed")
        return spectrum.eigenfunctions[j]
    if selector.kind == "target_nodes":
        return construct_u_with_nodes(V, alpha, int(selector.value), grid, spectrum)
    fL, fR = one_sided_pair(V, alpha, grid)
    if selector.kind == "pure_left":
        return fL
    if selector.kind == "pure_right":
        return fR
    return mix(fL, fR, float(selector.value))


@dataclass(frozen=True)
class AlternationReport:
    alternating: bool
    n1: int
    n2: int
    merged: tuple = field(default=())


def check_alternating_zeros(u1: WaveFunction, u2: WaveFunction) -> AlternationReport:
    """
    Zeros of ``u1`` and ``u2`` interlace strictly and their counts differ
    by one. The merged ordered list of all zeros is reported.
    """
    z1 = node_positions(u1)
    z2 = node_positions(u2)
    merged = np.concatenate([z1, z2])
    tags = np.concatenate([np.ones(z1.size, int), 2 * np.ones(z2.size, int)])
    order = np.argsort(merged, kind="stable")
    merged, tags = merged[order], tags[order]
    ok = abs(z1.size - z2.size) == 1 and bool(np.all(tags[1:] != tags[:-1]))
    return AlternationReport(ok, int(z1.size), int(z2.size), tuple(float(z) for z in merged))


@dataclass(frozen=True)
class RegularityReport:
    node_counts: tuple
    alternating: bool
    min_abs_W: float
    min_ratio_global: float
    min_ratio_local: float
    zero_free: bool
    theorem_case: str
    merged_zeros: tuple = ()
    extrema_at_zeros: bool = True
    single_signed_core: bool = True
    monotone_segments: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _tails_decrease(W: np.ndarray) -> bool:
    a = np.abs(W)
    n = a.size
    m = max(4, n // 10)
    return bool(a[0] < a[m] and a[-1] < a[-1 - m])


def verify_wronskian_regularity(pair: DarbouxPair, spectrum: Spectrum) -> RegularityReport:
    """
    Numerically instantiate the zero-free theorems for ``W(u1, u2)``.

    W counts as zero-free when it never changes sign on the grid and
    ``|W|`` never dips below 1e-10 of its own maximum over a window of 5%
    of the grid. The global ratio ``min|W| / max|W|`` is reported too but
    is not used: on wide grids W spans many orders of magnitude between
    centre and edges without coming near zero.
    """
    u1, u2 = pair.u1, pair.u2
    tr = pair.W
    h = pair.grid.h
    alt = check_alternating_zeros(u1, u2)
    zero_free = tr.zero_crossings.size == 0 and tr.min_ratio_local > ZERO_FREE_RATIO

    k = gap_index(spectrum, pair.alpha1)
    a1_is_level = _eigen_match(spectrum, pair.alpha1) is not None
    n1, n2 = alt.n1, alt.n2
    if a1_is_level and n1 == k and n2 == k + 1:
        case = "sec5_alpha1_eq_Ek"
    elif not a1_is_level and n1 == k + 2 and n2 == k + 1 and alt.alternating:
        case = "sec4_main"
    elif _safe_sides(u1) == ("decaying", "decaying") and _tails_decrease(tr.values):
        case = "sec5_W_to_zero"
    else:
        case = "unknown"

    merged = np.asarray(alt.merged)
    extrema = tr.extrema
    # every extremum of W sits at a zero of u1 u2 (W' = (a1 - a2) u1 u2)
    at_zeros = all(merged.size and np.min(np.abs(merged - e)) <= 1.5 * h for e in extrema)
    single = monotone = True
    if merged.size >= 2:
        x = pair.grid.x
        core = (x >= merged[0]) & (x <= merged[-1])
        signs = np.sign(tr.values[core])
        single = bool(np.all(signs == signs[0]))
        # no extremum strictly inside any interval between merged zeros
        for lo, hi in zip(merged[:-1], merged[1:]):
            inside = extrema[(extrema > lo + 1.5 * h) & (extrema < hi - 1.5 * h)]
            if inside.size:
                monotone = False
                break
    return RegularityReport(
        (n1, n2), alt.alternating, tr.min_abs, tr.min_ratio_global, tr.min_ratio_local,
        bool(zero_free), case, alt.merged, bool(at_zeros), single, monotone,
    )


def _safe_sides(f: WaveFunction):
    try:
        return asymptotic_sides(f)
    except AsymptoticError:
        return ("undetermined", "undetermined")


def check_W_derivative_identity(
    u1: WaveFunction, u2: WaveFunction, alpha1: float | None = None, alpha2: float | None = None
) -> float:
    """
    ``max |stencil W' - (alpha1 - alpha2) u1 u2|`` over the interior,
    divided by ``max |W'|``; for equal energies, where ``W'`` vanishes,
    divided by ``max |W|`` instead.
    """
    a1 = u1.energy if alpha1 is None else alpha1
    a2 = u2.energy if alpha2 is None else alpha2
    h = u1.grid.h
    W = u1.values * u2.derivative - u2.values * u1.derivative
    dW = d1(W, h)
    exact = (a1 - a2) * u1.values * u2.values
    inner = slice(2, -2)
    resid = float(np.max(np.abs(dW - exact)[inner]))
    scale = float(np.max(np.abs(dW[inner])))
    if a1 == a2 or scale == 0.0:
        scale = float(np.max(np.abs(W)))
    return resid / scale
