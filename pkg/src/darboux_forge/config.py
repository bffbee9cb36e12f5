"""
Run configuration: flat ``key = value`` lines with dotted keys.

    # Krein deletion of the two lowest oscillator levels
    potential.name = "harmonic"
    grid.n = 20001
    transform.k = 0
    transform.alpha1 = 1.0
    transform.alpha2 = 3.0
    transform.u1 = "eigenstate"
    transform.u2 = "eigenstate"

Values are parsed as JSON when possible and kept as bare strings
otherwise. ``#`` starts a comment.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .regularity import Selector

__all__ = ["ConfigError", "RunConfig", "DEFAULT_TOLERANCES", "parse_config", "load_config"]

DEFAULT_TOLERANCES = {
    # partner levels against (spec(h0) minus deleted) union created
    "level": 1e-5,
    "intertwining": 1e-4,
    "factorization": 1e-4,
    # |L u| relative to |u|
    "kernel": 1e-8,
    "w_identity": 1e-4,
    # windowed min|W|/max|W|
    "zero_free_ratio": 1e-10,
}

KNOWN_KEYS = {
    "potential.name", "potential.params", "potential.file",
    "grid.x_min", "grid.x_max", "grid.n",
    "transform.k", "transform.alpha1", "transform.alpha2", "transform.u1", "transform.u2",
    "spectrum.k_max", "output.dir",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    alpha1: float
    alpha2: float
    u1: str
    u2: str
    k: int = 0
    potential_name: str | None = None
    potential_params: tuple = ()
    potential_file: str | None = None
    x_min: float = -10.0
    x_max: float = 10.0
    n: int = 20001
    k_max: int = 8
    output_dir: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str | None = None

    def __post_init__(self):
        if (self.potential_name is None) == (self.potential_file is None):
            raise ConfigError("exactly one of potential.name and potential.file is required")
        if self.potential_file is not None and not Path(self.potential_file).is_file():
            raise ConfigError(f"potential file not found: {self.potential_file}")
        for name in ("alpha1", "alpha2", "x_min", "x_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.alpha2 > self.alpha1:
            raise ConfigError(f"need alpha1 < alpha2, got alpha1={self.alpha1}, alpha2={self.alpha2}")
        if not self.x_min < 0 < self.x_max:
            raise ConfigError("grid must satisfy x_min < 0 < x_max")
        if self.n < 11:
            raise ConfigError("grid.n must be at least 11")
        if self.k < 0 or self.k_max < 0:
            raise ConfigError("transform.k and spectrum.k_max must be non-negative")
        for name in ("u1", "u2"):
            try:
                Selector.parse(getattr(self, name))
            except ValueError as exc:
                raise ConfigError(f"transform.{name}: {exc}") from None
        for key, val in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance.{key} must be a positive number")

    def with_overrides(self, *, n=None, x_max=None, k_max=None) -> "RunConfig":
        """Command-line overrides; ``x_max`` sets a symmetric interval."""
        changes = {}
        if n is not None:
            changes["n"] = int(n)
        if x_max is not None:
            changes.update(x_min=-float(x_max), x_max=float(x_max))
        if k_max is not None:
            changes["k_max"] = int(k_max)
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        d["potential_params"] = list(self.potential_params)
        return d


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _pairs(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _value(val.strip())
    return out


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Build a :class:`RunConfig`; relative paths resolve against ``base_dir``."""
    raw = _pairs(text)
    base = Path(base_dir)
    tols = dict(DEFAULT_TOLERANCES)
    for key in list(raw):
        if key.startswith("tolerance."):
            tols[key.split(".", 1)[1]] = raw.pop(key)
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    for key in ("transform.alpha1", "transform.alpha2", "transform.u1", "transform.u2"):
        if key not in raw:
            raise ConfigError(f"missing {key}")

    def num(key, default, kind=float):
        val = raw.get(key, default)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{key} must be a number, got {val!r}")
        if kind is int and val != int(val):
            raise ConfigError(f"{key} must be an integer")
        return kind(val)

    params = raw.get("potential.params", [])
    if not isinstance(params, list):
        params = [params]
    pfile = raw.get("potential.file")
    if pfile is not None:
        pfile = str(base / str(pfile))
    outdir = str(base / str(raw.get("output.dir", "out")))
    try:
        return RunConfig(
            alpha1=num("transform.alpha1", None),
            alpha2=num("transform.alpha2", None),
            u1=str(raw["transform.u1"]),
            u2=str(raw["transform.u2"]),
            k=num("transform.k", 0, int),
            potential_name=raw.get("potential.name"),
            potential_params=tuple(params),
            potential_file=pfile,
            x_min=num("grid.x_min", -10.0),
            x_max=num("grid.x_max", 10.0),
            n=num("grid.n", 20001, int),
            k_max=num("spectrum.k_max", 8, int),
            output_dir=outdir,
            tolerances=tols,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return replace(parse_config(text, path.parent), source=str(path))
