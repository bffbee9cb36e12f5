"""
Solutions of ``-psi'' + V psi = E psi`` at arbitrary energy.

Solutions are propagated with the Numerov recurrence from a two-point WKB
seed in a classically forbidden edge, so ``integrate(..., side="left")``
returns the solution that decays toward ``x_min``. Derivatives are taken
with five-point stencils, which keeps them at the integrator's order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np
from scipy.ndimage import maximum_filter1d

from .potential import Grid, Potential

__all__ = [
    "WaveFunction",
    "WronskianTrace",
    "IntegrationError",
    "AsymptoticError",
    "integrate",
    "integrate_samples",
    "mix",
    "count_nodes",
    "node_positions",
    "wronskian",
    "asymptotic_sides",
    "asymptotic_class",
    "d1",
    "d2",
    "trapezoid",
]

RESCALE_EVERY = 500
NODE_FLOOR = 1e-12
EDGE_SKIP = 2
ASYM_FRACTION = 0.10


class IntegrationError(RuntimeError):
    """The requested solution cannot be seeded or propagated."""


class AsymptoticError(ValueError):
    """Tail behaviour cannot be read off the samples."""


# --------------------------------------------------------------------------
# stencils

def d1(f: np.ndarray, h: float) -> np.ndarray:
    """First derivative, 5-point central stencil, one-sided at the edges."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12.0 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12.0 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12.0 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12.0 * h)
    return out


def d2(f: np.ndarray, h: float) -> np.ndarray:
    """Second derivative, 5-point central stencil, 6-point one-sided at the edges."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    h2 = 12.0 * h * h
    out[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / h2
    out[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) / h2
    out[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / h2
    out[-1] = (45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]) / h2
    out[-2] = (10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]) / h2
    return out


def trapezoid(f: np.ndarray, h: float) -> float:
    return float(h * (np.sum(f) - 0.5 * (f[0] + f[-1])))


# --------------------------------------------------------------------------
# Numerov kernel

@numba.njit(cache=True)
def _numerov_sweep(q, h, y0, y1, stop):
    """
    Propagate ``y'' = -q y`` from indices 0, 1 up to ``stop`` (inclusive).

    Returns the raw samples, the per-sample binary exponent (true value is
    ``y * 2**exp``) and the number of sign changes seen. Rescaling is by
    powers of two so that it is exact.
    """
    n = q.size
    y = np.zeros(n)
    ex = np.zeros(n, dtype=np.int64)
    c = h * h / 12.0
    y[0] = y0
    y[1] = y1
    cur = 0
    flips = 0
    if y0 * y1 < 0.0:
        flips += 1
    last_sign = 1.0 if y1 > 0 else (-1.0 if y1 < 0 else (1.0 if y0 > 0 else -1.0))
    for i in range(1, stop):
        a = 1.0 + c * q[i + 1]
        b = 2.0 * (1.0 - 5.0 * c * q[i])
        d = 1.0 + c * q[i - 1]
        y[i + 1] = (b * y[i] - d * y[i - 1]) / a
        ex[i + 1] = cur
        v = y[i + 1]
        if v != 0.0:
            s = 1.0 if v > 0 else -1.0
            if s != last_sign:
                flips += 1
                last_sign = s
        if (i + 1) % RESCALE_EVERY == 0:
            m = max(abs(y[i + 1]), abs(y[i]))
            if m > 0.0:
                e = math.frexp(m)[1]
                y[i + 1] = math.ldexp(y[i + 1], -e)
                y[i] = math.ldexp(y[i], -e)
                cur += e
                ex[i + 1] = cur
                ex[i] = cur
    return y, ex, flips


def _seed(q_edge0: float, q_edge1: float, h: float) -> float:
    """Ratio psi(x1)/psi(x0) of the decaying WKB ansatz, x1 one step inward."""
    k0 = math.sqrt(-q_edge0)
    k1 = math.sqrt(-q_edge1)
    return math.exp(0.5 * h * (k0 + k1))


def _materialize(y: np.ndarray, ex: np.ndarray, upto: int | None = None):
    """
    Fold per-sample binary exponents into one array with max |y| in [0.5, 1).

    Returns the samples and the natural-log scale that was divided out.
    """
    if upto is not None:
        y = y[: upto + 1]
        ex = ex[: upto + 1]
    mant, e = np.frexp(y)
    e = e.astype(np.int64) + ex
    nz = y != 0.0
    if not nz.any():
        raise IntegrationError("solution vanished identically")
    top = int(e[nz].max())
    vals = np.ldexp(mant, e - top)
    return vals, top * math.log(2.0)


def sweep(v: np.ndarray, E: float, h: float, side: str, stop: int | None = None):
    """
    Raw one-sided Numerov sweep on potential samples ``v``.

    Returns ``(y, exponents, flips)`` in the original index order; only
    samples reached by the sweep are meaningful. ``stop`` counts steps
    from the starting edge.
    """
    q = E - np.asarray(v, dtype=float)
    if side == "right":
        q = q[::-1].copy()
    elif side != "left":
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if q[0] >= 0.0 or q[1] >= 0.0:
        raise IntegrationError(
            f"E={E} is not below V at the {side} edge; no decaying seed exists"
        )
    n = q.size
    stop = n - 1 if stop is None else int(stop)
    y, ls, flips = _numerov_sweep(q, h, 1.0, _seed(q[0], q[1], h), stop)
    if not np.all(np.isfinite(y[: stop + 1])):
        raise IntegrationError("overflow despite rescaling")
    if side == "right":
        y, ls = y[::-1].copy(), ls[::-1].copy()
    return y, ls, flips


# --------------------------------------------------------------------------
# wave functions

@dataclass(frozen=True, eq=False)
class WaveFunction:
    """
    Samples of a real solution at energy ``energy``.

    ``values`` carries an arbitrary overall factor; the true amplitude is
    ``values * exp(log_scale)`` relative to the seed.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    energy: float
    log_scale: float = 0.0
    normalized: bool = False
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wave function samples must be finite")
        object.__setattr__(self, "values", vals)

    @cached_property
    def x(self) -> np.ndarray:
        return self.grid.x

    @cached_property
    def derivative(self) -> np.ndarray:
        return d1(self.values, self.grid.h)

    @cached_property
    def node_count(self) -> int:
        return count_nodes(self)

    @cached_property
    def asym_left(self) -> str:
        return asymptotic_sides(self)[0]

    @cached_property
    def asym_right(self) -> str:
        return asymptotic_sides(self)[1]

    def norm(self) -> float:
        return math.sqrt(trapezoid(self.values**2, self.grid.h))

    def normalize(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero function")
        return WaveFunction(
            self.grid, self.values / nrm, self.energy,
            self.log_scale + math.log(nrm), True, self.label,
        )

    def scaled(self, factor: float) -> "WaveFunction":
        return WaveFunction(self.grid, self.values * factor, self.energy, self.log_scale, False, self.label)

    def with_label(self, label: str) -> "WaveFunction":
        return WaveFunction(self.grid, self.values, self.energy, self.log_scale, self.normalized, label)


def integrate(V: Potential, E: float, grid: Grid, side: str = "left") -> WaveFunction:
    """
    Solution at energy ``E`` that decays toward the ``side`` edge.

    The seed is the two-point WKB ansatz ``exp(-int sqrt(V - E))`` at the
    two outermost samples; the overall sign makes the first interior
    sample positive.
    """
    return integrate_samples(V.on(grid), E, grid, side)


def integrate_samples(v: np.ndarray, E: float, grid: Grid, side: str = "left") -> WaveFunction:
    """:func:`integrate` on pre-sampled potential values."""
    y, ls, _ = sweep(v, E, grid.h, side)
    vals, top = _materialize(y, ls)
    return WaveFunction(grid, vals, float(E), top, False, f"{side}@{E:g}")


def mix(fL: WaveFunction, fR: WaveFunction, theta: float) -> WaveFunction:
    """``cos(theta) fL + sin(theta) fR`` for two solutions at the same energy."""
    if fL.grid != fR.grid:
        raise ValueError("cannot mix solutions on different grids")
    if not math.isclose(fL.energy, fR.energy, rel_tol=0.0, abs_tol=1e-12 * max(1.0, abs(fL.energy))):
        raise ValueError(f"energy mismatch: {fL.energy} vs {fR.energy}")
    if theta == 0.0:
        return fL
    vals = math.cos(theta) * fL.values + math.sin(theta) * fR.values
    return WaveFunction(fL.grid, vals, fL.energy, 0.0, False, f"mix({theta:.6g})@{fL.energy:g}")


# --------------------------------------------------------------------------
# nodes

def _floor(values: np.ndarray) -> np.ndarray:
    # local envelope: a global max would bury interior nodes of solutions
    # that grow by many orders of magnitude toward the edges
    width = max(5, 2 * (values.size // 40) + 1)
    return NODE_FLOOR * maximum_filter1d(np.abs(values), size=width, mode="nearest")


def node_positions(psi: WaveFunction | np.ndarray, x: np.ndarray | None = None) -> np.ndarray:
    """
    Interior zero locations, linearly interpolated between samples.

    Only sign changes between samples above the node-noise floor count;
    the seed samples at either edge are ignored.
    """
    if isinstance(psi, WaveFunction):
        vals, x = psi.values, psi.x
    else:
        vals = np.asarray(psi, dtype=float)
    if x is None:
        raise ValueError("x positions required for raw samples")
    lo, hi = EDGE_SKIP, vals.size - EDGE_SKIP
    v = vals[lo:hi]
    xs = x[lo:hi]
    keep = np.flatnonzero(np.abs(v) > _floor(vals)[lo:hi])
    if keep.size < 2:
        return np.empty(0)
    a, b = keep[:-1], keep[1:]
    hit = (np.sign(v[a]) != np.sign(v[b])) & (b - a <= 3)
    a, b = a[hit], b[hit]
    # zero of the chord between the two bracketing samples
    t = v[a] / (v[a] - v[b])
    return xs[a] + t * (xs[b] - xs[a])


def count_nodes(psi: WaveFunction) -> int:
    """Number of interior sign changes above the node-noise floor."""
    if not np.any(psi.values):
        warnings.warn("node count of an all-zero function", RuntimeWarning, stacklevel=2)
        return 0
    return int(node_positions(psi).size)


# --------------------------------------------------------------------------
# asymptotics

def asymptotic_sides(psi: WaveFunction) -> tuple[str, str]:
    """
    ``(left, right)`` tail tags, each ``decaying``, ``growing`` or
    ``undetermined``, from a straight-line fit of ``log|psi|`` over the
    outer 10% of the grid on that side. A tail that has underflowed to
    exact zeros at the edge counts as decaying.
    """
    vals, x = psi.values, psi.x
    m = max(4, int(ASYM_FRACTION * vals.size))
    out = []
    for sl, toward in ((slice(0, m), -1.0), (slice(vals.size - m, None), 1.0)):
        seg, xs = vals[sl], x[sl]
        nz = seg != 0.0
        # exact zeros left by underflow sit in one block at the outer end
        outer = nz[::-1] if toward > 0 else nz
        first = int(np.argmax(outer)) if outer.any() else outer.size
        if nz.sum() < 4 or not np.all(outer[first:]):
            out.append("undetermined")
            continue
        seg, xs = seg[nz], xs[nz]
        if np.any(np.sign(seg) != np.sign(seg[0])):
            out.append("undetermined")
            continue
        if first > 0:
            out.append("decaying")
            continue
        slope = np.polyfit(xs, np.log(np.abs(seg)), 1)[0]
        out.append("growing" if slope * toward > 0 else "decaying")
    return out[0], out[1]


_CLASSES = {
    ("decaying", "growing"): "zero_left",
    ("growing", "decaying"): "zero_right",
    ("decaying", "decaying"): "zero_both",
    ("growing", "growing"): "growing_both",
}


def asymptotic_class(psi: WaveFunction) -> str:
    """
    One of ``zero_left``, ``zero_right``, ``zero_both``, ``growing_both``.

    ``zero_left`` means decaying at the left infinity and growing at the
    right one.
    """
    sides = (psi.asym_left, psi.asym_right)
    if "undetermined" in sides:
        raise AsymptoticError(f"tail fit region contains nodes or underflow: {sides}")
    return _CLASSES[sides]


# --------------------------------------------------------------------------
# Wronskians

@dataclass(frozen=True, eq=False)
class WronskianTrace:
    """``W = u1 u2' - u2 u1'`` on the grid, with its zeros and extrema."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    alpha1: float
    alpha2: float
    min_abs: float
    max_abs: float
    min_ratio_local: float
    zero_crossings: np.ndarray = field(repr=False)
    extrema: np.ndarray = field(repr=False)

    @property
    def min_ratio_global(self) -> float:
        return self.min_abs / self.max_abs if self.max_abs > 0 else 0.0

    @cached_property
    def derivative(self) -> np.ndarray:
        return d1(self.values, self.grid.h)

    @cached_property
    def second_derivative(self) -> np.ndarray:
        return d2(self.values, self.grid.h)


def _local_ratio(values: np.ndarray) -> float:
    """Smallest ``|W| / max(|W| over a window of 5% of the grid)``."""
    width = max(5, 2 * (values.size // 40) + 1)
    env = maximum_filter1d(np.abs(values), size=width, mode="nearest")
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(env > 0, np.abs(values) / env, 0.0)
    return float(r.min())


def wronskian(u1: WaveFunction, u2: WaveFunction) -> WronskianTrace:
    """
    Wronskian of two sampled solutions with stencil derivatives.

    Extrema are sign changes of the stencil derivative of W; for equal
    energies W is constant and its derivative is pure rounding noise, so
    no extrema are reported.
    """
    if u1.grid != u2.grid:
        raise ValueError("Wronskian needs both functions on the same grid")
    grid = u1.grid
    W = u1.values * u2.derivative - u2.values * u1.derivative
    aw = np.abs(W)
    zeros = node_positions(W, u1.x) if np.any(W) else np.empty(0)
    if u1.energy == u2.energy:
        extrema = np.empty(0)
    else:
        extrema = node_positions(d1(W, grid.h), u1.x)
    return WronskianTrace(
        grid, W, u1.energy, u2.energy,
        float(aw.min()), float(aw.max()),
        _local_ratio(W) if np.any(W) else 0.0,
        zeros, extrema,
    )
