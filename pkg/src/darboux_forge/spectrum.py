"""
Discrete spectrum by shooting.

Levels are bracketed with the Sturm count of the left-integrated solution
(the number of its sign changes equals the number of eigenvalues below E)
and refined by bisection on the sign of the discrete Wronskian between
the left and right solutions at the matching point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ode import IntegrationError, WaveFunction, _materialize, sweep
from .potential import Grid, Potential

__all__ = ["Spectrum", "SpectrumError", "compute_spectrum", "compute_spectrum_samples", "eigenfunction"]

# bisection runs until the bracket cannot shrink further; E_TOL is the
# guaranteed bound. Stopping early leaves a derivative kink at the glue
# point that stencil derivatives of L psi amplify.
E_TOL = 1e-9
MISMATCH_TOL = 1e-6


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    levels: np.ndarray
    eigenfunctions: list = field(repr=False)
    mismatch: np.ndarray = field(repr=False)
    mismatch_tolerance: float
    grid: Grid = field(repr=False)

    def __len__(self):
        return len(self.levels)

    @property
    def k_max(self) -> int:
        return len(self.levels) - 1


def _sturm_count(v: np.ndarray, E: float, h: float) -> int:
    return sweep(v, E, h, "left")[2]


def _match_index(v: np.ndarray, E: float) -> int:
    allowed = np.flatnonzero(v <= E)
    if allowed.size == 0:
        return v.size // 2
    return int(allowed[-1])


def _defect(v: np.ndarray, E: float, h: float, m: int) -> tuple[float, float]:
    """
    Sign of the discrete Wronskian ``yL[m] yR[m+1] - yL[m+1] yR[m]`` and the
    log-derivative mismatch ``(yR[m+1]/yR[m] - yL[m+1]/yL[m]) / h``.
    """
    n = v.size
    yL, lsL, _ = sweep(v, E, h, "left", stop=m + 1)
    yR, lsR, _ = sweep(v, E, h, "right", stop=n - m)
    # bring each pair of samples to a common scale
    l0, l1 = yL[m], math.ldexp(yL[m + 1], int(lsL[m + 1] - lsL[m]))
    r0, r1 = yR[m], math.ldexp(yR[m + 1], int(lsR[m + 1] - lsR[m]))
    wr = l0 * r1 - l1 * r0
    scale = max(abs(l0), abs(l1)) * max(abs(r0), abs(r1))
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = (r1 / r0 - l1 / l0) / h if l0 != 0 and r0 != 0 else math.inf
    return wr / scale, logd


def _glue(v: np.ndarray, E: float, grid: Grid, m: int) -> WaveFunction:
    h = grid.h
    n = grid.n
    yL, lsL, _ = sweep(v, E, h, "left", stop=m + 1)
    yR, lsR, _ = sweep(v, E, h, "right", stop=n - 1 - m)
    left, topL = _materialize(yL[: m + 1], lsL[: m + 1])
    right, topR = _materialize(yR[m:], lsR[m:])
    # match at index m
    right = right * (left[m] / right[0])
    vals = np.concatenate([left, right[1:]])
    wf = WaveFunction(grid, vals, E)
    # sign convention: positive just inside the left edge
    if wf.values[2] < 0:
        wf = wf.scaled(-1.0)
    return wf.normalize()


def compute_spectrum(V: Potential, k_max: int, grid: Grid, tol: float = 0.0) -> Spectrum:
    """
    Levels ``E_0 < ... < E_kmax`` and normalized eigenfunctions of
    ``-d^2/dx^2 + V`` on the grid.
    """
    return compute_spectrum_samples(V.on(grid), k_max, grid, tol)


def compute_spectrum_samples(v: np.ndarray, k_max: int, grid: Grid, tol: float = 0.0) -> Spectrum:
    """:func:`compute_spectrum` on pre-sampled potential values."""
    if k_max < 0:
        raise SpectrumError("k_max must be non-negative")
    v = np.asarray(v, dtype=float)
    h = grid.h
    edge = min(v[0], v[1], v[-1], v[-2])
    lo = float(v.min())
    # an upper energy with at least k_max + 1 levels below it
    hi = lo + 1.0
    while _sturm_count(v, hi, h) < k_max + 1:
        if hi >= edge - 1e-9:
            raise SpectrumError(
                f"grid too narrow: fewer than {k_max + 1} levels below the edge value {edge:.6g}"
            )
        hi = min(lo + 2.0 * (hi - lo), edge - 1e-9)

    levels, funcs, defects = [], [], []
    lower = lo
    for k in range(k_max + 1):
        # Sturm bisection: count(a) <= k < count(b)
        a, b = lower, hi
        while b - a > max(1e-3, 1e-6 * abs(b)):
            c = 0.5 * (a + b)
            if _sturm_count(v, c, h) >= k + 1:
                b = c
            else:
                a = c
        # isolate: exactly one level in [a, b]
        while _sturm_count(v, a, h) != k:
            a = 0.5 * (a + b)
        m = _match_index(v, b)
        m = min(max(m, 2), v.size - 4)
        sa, _ = _defect(v, a, h, m)
        sb, _ = _defect(v, b, h, m)
        if sa == 0.0:
            b = a
        elif sb == 0.0:
            a = b
        elif sa * sb > 0:
            # fall back to the Sturm count alone
            while b - a > tol:
                c = 0.5 * (a + b)
                if c in (a, b):
                    break
                if _sturm_count(v, c, h) >= k + 1:
                    b = c
                else:
                    a = c
        else:
            while b - a > tol:
                c = 0.5 * (a + b)
                if c in (a, b):
                    break
                sc, _ = _defect(v, c, h, m)
                if sc == 0.0:
                    a = b = c
                    break
                if sc * sa > 0:
                    a, sa = c, sc
                else:
                    b = c
        E = 0.5 * (a + b)
        m = min(max(_match_index(v, E), 2), v.size - 4)
        try:
            wf = _glue(v, E, grid, m)
        except IntegrationError as exc:
            raise SpectrumError(f"level {k}: {exc}") from exc
        levels.append(E)
        funcs.append(wf.with_label(f"psi_{k}"))
        defects.append(abs(_defect(v, E, h, m)[1]))
        lower = E
    return Spectrum(np.array(levels), funcs, np.array(defects), MISMATCH_TOL, grid)


def eigenfunction(spec: Spectrum, k: int) -> WaveFunction:
    if not 0 <= k < len(spec.levels):
        raise IndexError(f"level {k} not computed (k_max={spec.k_max})")
    return spec.eigenfunctions[k]
