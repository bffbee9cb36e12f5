"""
First- and second-order Darboux transformations on a grid.

For transformation functions ``u1, u2`` (solutions of ``h0 u = alpha u``)
the second-order intertwiner is

    L psi = W(u1, u2, psi) / W(u1, u2)
          = psi'' - (W'/W) psi' + a0 psi,
    a0    = [(V0 - alpha2) u1' u2 - (V0 - alpha1) u2' u1] / W,

and the transformed potential is ``V2 = V0 - 2 (log W)''``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .ode import WaveFunction, WronskianTrace, asymptotic_sides, d1, d2, node_positions, wronskian
from .potential import Grid, Potential, tabulated_potential

__all__ = [
    "DarbouxError",
    "FirstOrderResult",
    "DarbouxPair",
    "KernelFunctions",
    "first_order_transform",
    "second_order_transform",
    "apply_L",
    "apply_L_samples",
    "apply_L_adjoint",
    "apply_L_factorized",
    "kernel_functions",
    "pole_mask",
]


class DarbouxError(ValueError):
    pass


def pole_mask(x: np.ndarray, zeros: np.ndarray, h: float) -> np.ndarray:
    """Samples within one grid cell of any of the given zero locations."""
    mask = np.zeros(x.size, dtype=bool)
    for z in zeros:
        mask |= np.abs(x - z) <= h * (1 + 1e-9)
    return mask


@dataclass(frozen=True, eq=False)
class FirstOrderResult:
    """``V1 = V0 - 2 (log u)''`` with NaN at pole samples."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    poles: np.ndarray
    is_pole: np.ndarray = field(repr=False)


def first_order_transform(V0: Potential | np.ndarray, u: WaveFunction) -> FirstOrderResult:
    """
    Potential produced by a single first-order step with function ``u``.

    Poles are data rather than errors: samples within one cell of a zero
    of ``u`` are flagged and their values set to NaN.
    """
    grid = u.grid
    v0 = V0.on(grid) if isinstance(V0, Potential) else np.asarray(V0, dtype=float)
    f = u.values
    fp = d1(f, grid.h)
    fpp = d2(f, grid.h)
    poles = node_positions(u)
    mask = pole_mask(grid.x, poles, grid.h)
    with np.errstate(divide="ignore", invalid="ignore"):
        v1 = v0 - 2.0 * (fpp * f - fp * fp) / (f * f)
    v1 = np.where(mask, np.nan, v1)
    return FirstOrderResult(grid, v1, np.asarray(poles), mask)


@dataclass(frozen=True, eq=False)
class DarbouxPair:
    """
    A second-order transformation ``h0 -> h2`` and its ingredients.

    ``V2`` holds the samples of the new potential (NaN at poles when W has
    zeros); ``V2_potential`` is the tabulated potential, only available for
    regular pairs.
    """

    V0: Potential
    u1: WaveFunction
    u2: WaveFunction
    alpha1: float
    alpha2: float
    W: WronskianTrace
    W1: np.ndarray = field(repr=False)
    W2: np.ndarray = field(repr=False)
    V0_values: np.ndarray = field(repr=False)
    V1: FirstOrderResult = field(repr=False)
    V2: np.ndarray = field(repr=False)
    V2_poles: np.ndarray
    V2_is_pole: np.ndarray = field(repr=False)
    chain_class: str

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def regular(self) -> bool:
        return self.V2_poles.size == 0

    @cached_property
    def V2_potential(self) -> Potential:
        if not self.regular:
            raise DarbouxError("V2 has poles; it cannot be used as a potential")
        return tabulated_potential(self.grid.x, self.V2)

    @cached_property
    def log_derivative(self) -> np.ndarray:
        """``W'/W``."""
        return self.W1 / self.W.values

    @cached_property
    def a0(self) -> np.ndarray:
        u1, u2 = self.u1.values, self.u2.values
        v0 = self.V0_values
        return (
            (v0 - self.alpha2) * self.u1.derivative * u2
            - (v0 - self.alpha1) * self.u2.derivative * u1
        ) / self.W.values


def second_order_transform(V0: Potential, u1: WaveFunction, u2: WaveFunction) -> DarbouxPair:
    """
    Build ``V2 = V0 - 2 (W''/W - (W'/W)^2)`` from ``u1, u2``.

    ``W'`` and ``W''`` are taken from the Schrodinger equation,
    ``W' = (alpha1 - alpha2) u1 u2`` and
    ``W'' = (alpha1 - alpha2) (u1' u2 + u1 u2')``, with stencil values of
    ``u1', u2'``. Pairs whose Wronskian has zeros are still returned, with
    the poles of V2 flagged.
    """
    a1, a2 = float(u1.energy), float(u2.energy)
    if not a2 > a1:
        raise DarbouxError(f"need alpha2 > alpha1, got alpha1={a1}, alpha2={a2}")
    if u1.grid != u2.grid:
        raise DarbouxError("u1 and u2 live on different grids")
    grid = u1.grid
    trace = wronskian(u1, u2)
    # pointwise relative size, since growing and decaying factors can
    # differ by many orders of magnitude across the grid
    terms = np.abs(u1.values * u2.derivative) + np.abs(u1.derivative * u2.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(terms > 0, np.abs(trace.values) / terms, 0.0)
    if np.max(rel) <= 1e-8:
        raise DarbouxError("W(u1, u2) vanishes identically: u1 and u2 are dependent")

    v0 = V0.on(grid)
    W = trace.values
    W1 = (a1 - a2) * u1.values * u2.values
    W2 = (a1 - a2) * (u1.derivative * u2.values + u1.values * u2.derivative)
    with np.errstate(divide="ignore", invalid="ignore"):
        v2 = v0 - 2.0 * (W2 / W - (W1 / W) ** 2)
    mask = pole_mask(grid.x, trace.zero_crossings, grid.h)
    v2 = np.where(mask, np.nan, v2)
    if not mask.any() and not np.all(np.isfinite(v2)):
        raise DarbouxError("V2 is not finite although W has no sign change")

    v1 = first_order_transform(v0, u1)
    chain = "completely_reducible" if v1.poles.size == 0 else "irreducible_singular"
    return DarbouxPair(
        V0, u1, u2, a1, a2, trace, W1, W2, v0, v1, v2,
        np.asarray(trace.zero_crossings), mask, chain,
    )


def _require_regular(pair: DarbouxPair):
    if not pair.regular:
        raise DarbouxError(
            f"W has zeros at x = {np.round(pair.V2_poles, 6).tolist()}; the pair is not regular"
        )


def apply_L(pair: DarbouxPair, psi: WaveFunction) -> WaveFunction:
    """
    ``L psi`` for a solution ``psi`` of ``h0 psi = E psi``, ``E = psi.energy``.

    The second derivative is eliminated with ``psi'' = (V0 - E) psi``, so only
    ``psi`` and a stencil ``psi'`` enter. The result solves ``h2 phi = E phi``.
    """
    _require_regular(pair)
    if psi.grid != pair.grid:
        raise DarbouxError("psi lives on a different grid")
    f = psi.values
    fpp = (pair.V0_values - psi.energy) * f
    out = fpp - pair.log_derivative * psi.derivative + pair.a0 * f
    return WaveFunction(pair.grid, out, psi.energy, label=f"L[{psi.label}]")


def apply_L_samples(pair: DarbouxPair, f: np.ndarray) -> np.ndarray:
    """``L f`` for arbitrary samples, all derivatives by stencils."""
    _require_regular(pair)
    h = pair.grid.h
    return d2(f, h) - pair.log_derivative * d1(f, h) + pair.a0 * f


def apply_L_adjoint(pair: DarbouxPair, f: WaveFunction | np.ndarray, energy: float | None = None) -> np.ndarray:
    """
    Formal adjoint ``L+ f = f'' + (W'/W) f' + [(W'/W)' + a0] f``.

    With ``energy`` given, ``f`` is taken to solve ``h2 f = energy f`` and
    ``f''`` is eliminated through V2; otherwise stencils are used. The
    coefficient ``(W'/W)'`` equals ``(V0 - V2) / 2``.
    """
    _require_regular(pair)
    h = pair.grid.h
    vals = f.values if isinstance(f, WaveFunction) else np.asarray(f, dtype=float)
    fp = d1(vals, h)
    if energy is None:
        fpp = d2(vals, h)
    else:
        fpp = (pair.V2 - energy) * vals
    dlog = 0.5 * (pair.V0_values - pair.V2)
    return fpp + pair.log_derivative * fp + (dlog + pair.a0) * vals


def apply_L_factorized(pair: DarbouxPair, psi: WaveFunction) -> np.ndarray:
    """
    ``L psi`` as two first-order steps: ``L1 = -d + u1'/u1`` then
    ``L2 = -d + v'/v`` with ``v = L1 u2``. Singular wherever ``u1`` vanishes.
    """
    h = pair.grid.h
    u1, u2 = pair.u1, pair.u2
    with np.errstate(divide="ignore", invalid="ignore"):
        w1 = u1.derivative / u1.values
        step1 = -psi.derivative + w1 * psi.values
        v = -u2.derivative + w1 * u2.values
        w2 = d1(v, h) / v
        return -d1(step1, h) + w2 * step1


@dataclass(frozen=True, eq=False)
class KernelFunctions:
    """Basis ``v1 = u2/W``, ``v2 = u1/W`` of the kernel of the adjoint."""

    v1: WaveFunction
    v2: WaveFunction
    v1_square_integrable: bool
    v2_square_integrable: bool


def _is_square_integrable(f: WaveFunction) -> bool:
    return asymptotic_sides(f) == ("decaying", "decaying")


def kernel_functions(pair: DarbouxPair) -> KernelFunctions:
    """
    ``v1`` solves ``h2 v1 = alpha1 v1`` and ``v2`` solves ``h2 v2 = alpha2 v2``.
    Square integrability is read from the tail slopes.
    """
    _require_regular(pair)
    W = pair.W.values
    v1 = WaveFunction(pair.grid, pair.u2.values / W, pair.alpha1, label="v1")
    v2 = WaveFunction(pair.grid, pair.u1.values / W, pair.alpha2, label="v2")
    return KernelFunctions(v1, v2, _is_square_integrable(v1), _is_square_integrable(v2))
