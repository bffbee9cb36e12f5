"""
Seed potentials, uniform grids and the integral-condition classifier.

A :class:`Potential` is either a builtin closed form (``harmonic``,
``quartic``, ``shifted_harmonic``) or a table of samples interpolated by a
cubic spline. Tables are how transformed potentials are fed back in as new
seeds, so the CSV reader accepts both ``x,V`` and ``x,value`` headers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "Grid",
    "Potential",
    "PotentialClass",
    "PotentialError",
    "make_builtin_potential",
    "tabulated_potential",
    "read_potential_csv",
    "classify_potential",
    "BUILTIN_NAMES",
]

BUILTIN_NAMES = ("harmonic", "quartic", "shifted_harmonic")

# thresholds for the improper-integral convergence test
CONVERGENCE_THRESHOLD = 1e-6
NEAR_ZERO_V = 1e-8


class PotentialError(ValueError):
    """Raised for invalid potentials, grids or potential files."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a truncated real line, ``x_min < 0 < x_max``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 11:
            raise PotentialError(f"grid needs n >= 11 points, got {self.n}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise PotentialError("grid bounds must be finite")
        if not (self.x_min < 0.0 < self.x_max):
            raise PotentialError(
                f"grid must straddle the origin, got [{self.x_min}, {self.x_max}]"
            )

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    def refined(self) -> "Grid":
        """Same interval with the spacing halved."""
        return Grid(self.x_min, self.x_max, 2 * self.n - 1)


@dataclass(frozen=True)
class Potential:
    """
    Real potential V(x) of a 1D Schrodinger operator ``-d^2/dx^2 + V``.

    Parameters
    ----------
    name : str
        Builtin kind or ``"tabulated"``.
    params : tuple of float
        Builtin parameters (empty for tables).
    table_x, table_v : ndarray, optional
        Samples for tabulated potentials.
    lower_bound : float
        A value V never goes below (``-inf`` when unknown).
    symmetry_hint : str
        ``"even"`` or ``"none"``.
    """

    name: str
    params: tuple = ()
    table_x: np.ndarray | None = field(default=None, repr=False, compare=False)
    table_v: np.ndarray | None = field(default=None, repr=False, compare=False)
    lower_bound: float = -math.inf
    symmetry_hint: str = "none"
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return "tabulated" if self.name == "tabulated" else "builtin"

    @property
    def is_confining(self) -> bool:
        return self.kind == "builtin"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == "harmonic":
            (k,) = self.params
            return k * x**2
        if self.name == "quartic":
            (g,) = self.params
            return g * x**4
        if self.name == "shifted_harmonic":
            k, c = self.params
            return k * x**2 + c
        return self._eval_table(x)

    def _eval_table(self, x: np.ndarray) -> np.ndarray:
        xs, spline = self.table_x, self._spline
        out = np.asarray(spline(x), dtype=float)
        # quadratic Taylor continuation beyond either end of the table
        for x0, mask in ((xs[0], x < xs[0]), (xs[-1], x > xs[-1])):
            if np.any(mask):
                d = x[mask] - x0
                out[mask] = spline(x0) + spline(x0, 1) * d + 0.5 * spline(x0, 2) * d**2
        return out

    def on(self, grid: Grid) -> np.ndarray:
        """Samples on a grid."""
        if (
            self.kind == "tabulated"
            and self.table_x.size == grid.n
            and self.table_x[0] == grid.x_min
            and self.table_x[-1] == grid.x_max
        ):
            # same grid as the table: return the samples themselves
            return self.table_v.copy()
        return self(grid.x)


def make_builtin_potential(name: str, params: Sequence[float] = ()) -> Potential:
    """
    Build one of the closed-form seeds.

    ``harmonic [k]`` is ``k x^2``, ``quartic [g]`` is ``g x^4`` and
    ``shifted_harmonic [k, c]`` is ``k x^2 + c``.

    >>> make_builtin_potential("harmonic", [1.0])(2.0)
    array(4.)
    """
    if name not in BUILTIN_NAMES:
        raise PotentialError(f"unknown potential {name!r}; expected one of {BUILTIN_NAMES}")
    params = tuple(float(p) for p in params)
    if not all(math.isfinite(p) for p in params):
        raise PotentialError(f"non-finite parameter in {params}")
    expected = {"harmonic": 1, "quartic": 1, "shifted_harmonic": 2}[name]
    if len(params) == 0 and name != "shifted_harmonic":
        params = (1.0,)
    if len(params) != expected:
        raise PotentialError(f"{name} takes {expected} parameter(s), got {len(params)}")
    if params[0] <= 0:
        raise PotentialError(f"{name} needs a positive stiffness to confine, got {params[0]}")
    lower = params[1] if name == "shifted_harmonic" else 0.0
    return Potential(name, params, lower_bound=lower, symmetry_hint="even")


def tabulated_potential(x: Sequence[float], v: Sequence[float]) -> Potential:
    """Cubic-spline potential through the samples ``(x, v)``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size < 4:
        raise PotentialError("tabulated potential needs matching 1D arrays of >= 4 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise PotentialError("tabulated potential contains non-finite samples")
    if np.any(np.diff(x) <= 0):
        raise PotentialError("tabulated x must be strictly increasing")
    spline = CubicSpline(x, v)
    return Potential(
        "tabulated",
        table_x=x,
        table_v=v,
        lower_bound=float(v.min()),
        _spline=spline,
    )


def read_potential_csv(path: str | Path) -> Potential:
    """
    Read a two-column ``x,V`` table (``x,value`` is accepted too, so that
    exported transformed potentials can be used as seeds).

    Rows flagged in an ``is_pole`` column are rejected: a singular
    potential is not a valid seed.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise PotentialError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] != "x" or header[1] not in ("V", "value"):
            raise PotentialError(f"{path}: expected header 'x,V', got {','.join(header)}")
        pole_col = header.index("is_pole") if "is_pole" in header else None
        xs, vs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if pole_col is not None and row[pole_col].strip() not in ("0", ""):
                raise PotentialError(f"{path}:{lineno}: pole-marked row cannot seed a potential")
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except (ValueError, IndexError):
                raise PotentialError(f"{path}:{lineno}: malformed row {row!r}") from None
    return tabulated_potential(xs, vs)


@dataclass(frozen=True)
class PotentialClass:
    """Label plus the three integral values on the truncated grid."""

    label: str
    integral_values: tuple
    converged: tuple = (False, False, False)


def _trapz(y: np.ndarray, h: float) -> float:
    return float(h * (y.sum() - 0.5 * (y[0] + y[-1])))


def _converges(integrand: np.ndarray, x: np.ndarray, h: float) -> bool:
    """
    Numerical convergence of an improper integral over both infinities.

    The mass over the outer half ``x_max/2 <= |x| <= x_max`` must either be
    below the absolute threshold, or be shrinking relative to the mass over
    ``x_max/4 <= |x| < x_max/2`` (ratio < 0.75, i.e. decay faster than about
    ``|x|^-1.4``).
    """
    a = np.abs(x)
    reach = min(-x[0], x[-1])
    outer = _trapz_masked(integrand, (a >= reach / 2) & (a <= reach), h)
    inner = _trapz_masked(integrand, (a >= reach / 4) & (a < reach / 2), h)
    if outer < CONVERGENCE_THRESHOLD:
        return True
    return inner > 0 and outer / inner < 0.75


def _trapz_masked(y: np.ndarray, mask: np.ndarray, h: float) -> float:
    # masks here are unions of at most two contiguous runs; summing the
    # trapezoid of each run keeps the rule exact for piecewise domains
    total = 0.0
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return 0.0
    breaks = np.flatnonzero(np.diff(idx) > 1)
    for run in np.split(idx, breaks + 1):
        if run.size > 1:
            total += _trapz(y[run], h)
    return total


def classify_potential(V: Potential, grid: Grid, core: float = 1.0) -> PotentialClass:
    """
    Evaluate the scattering integral ``int |x V| dx`` and the two confining
    integrals ``int |V'/V^(5/4)|^2 dx``, ``int |V''|/|V|^(3/2) dx`` by the
    trapezoid rule, and decide which improper integrals converge.

    The confining conditions constrain behaviour at infinity, so their
    integrands are evaluated on ``|x| >= core`` only; the integrands have
    non-integrable singularities at interior zeros of V that say nothing
    about the tails. Samples with ``|V| < 1e-8`` in that region are dropped
    and the confining label is then withheld.
    """
    x = grid.x
    h = grid.h
    v = V.on(grid)
    if not np.all(np.isfinite(v)):
        raise PotentialError("potential is not finite on the grid")
    if np.all(v == 0.0):
        return PotentialClass("unknown", (0.0, math.nan, math.nan))

    scatter = np.abs(x * v)
    i_scatter = _trapz(scatter, h)
    scatter_ok = _converges(scatter, x, h)

    dv = np.gradient(v, h, edge_order=2)
    d2v = np.gradient(dv, h, edge_order=2)
    av = np.abs(v)
    region = np.abs(x) >= core
    usable = region & (av >= NEAR_ZERO_V)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(usable, (np.abs(dv) / av**1.25) ** 2, 0.0)
        second = np.where(usable, np.abs(d2v) / av**1.5, 0.0)
    i_first = _trapz_masked(first, region, h)
    i_second = _trapz_masked(second, region, h)
    conf_ok = bool(
        usable.any()
        and not np.any(region & ~usable)
        and _converges(first, x, h)
        and _converges(second, x, h)
    )

    if scatter_ok:
        label = "scattering"
    elif conf_ok:
        label = "confining_regular"
    else:
        label = "unknown"
    return PotentialClass(
        label,
        (i_scatter, i_first, i_second),
        (bool(scatter_ok), conf_ok, conf_ok),
    )
