"""
``forge`` command line.

    forge run configs/case_f.cfg
    forge suite configs/ --out results --jobs 4
    forge spectrum configs/case_f.cfg --k-max 12
"""

from __future__ import annotations

import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .config import ConfigError, load_config
from .pipeline import EXIT_CONFIG, EXIT_CONSTRUCT, build_potential, run_pipeline, write_spectrum_csv
from .potential import Grid, PotentialError
from .spectrum import SpectrumError, compute_spectrum

__all__ = ["main", "forge"]

CONFIG_GLOB = "*.cfg"


def _overrides(f):
    f = click.option("--k-max", type=int, default=None, help="Highest level index to compute.")(f)
    f = click.option("--x-max", type=float, default=None, help="Use the grid [-X, X].")(f)
    f = click.option("--grid-n", type=int, default=None, help="Number of grid points.")(f)
    return f


def _load(path, grid_n, x_max, k_max):
    return load_config(path).with_overrides(n=grid_n, x_max=x_max, k_max=k_max)


def _run_one(path: str, outdir: str | None, grid_n, x_max, k_max) -> tuple[str, int, str]:
    try:
        cfg = _load(path, grid_n, x_max, k_max)
    except ConfigError as exc:
        return path, EXIT_CONFIG, f"config error: {exc}"
    res = run_pipeline(cfg, outdir)
    return path, res.exit_code, res.message


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def forge(verbose):
    """Second-order Darboux transformations of 1D Schrodinger operators."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@forge.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@_overrides
def run(config, out, grid_n, x_max, k_max):
    """Run one configuration."""
    _, code, msg = _run_one(config, out, grid_n, x_max, k_max)
    click.echo(f"{config}: {msg}", err=code != 0)
    sys.exit(code)


@forge.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Parent directory; each config writes to <out>/<config stem>.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@_overrides
def suite(directory, out, jobs, grid_n, x_max, k_max):
    """Run every *.cfg in DIRECTORY in parallel. Exits with the worst code."""
    paths = sorted(str(p) for p in Path(directory).glob(CONFIG_GLOB))
    if not paths:
        click.echo(f"no {CONFIG_GLOB} files in {directory}", err=True)
        sys.exit(EXIT_CONFIG)
    base = Path(out) if out else Path(directory) / "results"
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(_run_one, p, str(base / Path(p).stem), grid_n, x_max, k_max) for p in paths
        ]
        results = [f.result() for f in futures]
    worst = 0
    for path, code, msg in results:
        click.echo(f"[{code}] {Path(path).name}: {msg}")
        worst = max(worst, code)
    sys.exit(worst)


@forge.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write k,E to this CSV.")
@_overrides
def spectrum(config, out, grid_n, x_max, k_max):
    """Print the seed spectrum as k,E."""
    try:
        cfg = _load(config, grid_n, x_max, k_max)
        V = build_potential(cfg)
        grid = Grid(cfg.x_min, cfg.x_max, cfg.n)
    except (ConfigError, PotentialError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        spec = compute_spectrum(V, cfg.k_max, grid)
    except SpectrumError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONSTRUCT)
    click.echo("k,E")
    for k, E in enumerate(spec.levels):
        click.echo(f"{k},{float(E)!r}")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_spectrum_csv(out, spec)


def main():
    forge()


if __name__ == "__main__":
    main()
