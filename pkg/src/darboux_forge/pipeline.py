"""
Construct, analyze and verify one transformation, then write the report
and the plot data.

Exit codes: 0 every check passed, 1 a verification failed (outputs are
still written), 2 bad configuration, 3 construction failed.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .darboux import DarbouxError, DarbouxPair, apply_L, kernel_functions, second_order_transform
from .potential import Grid, PotentialError, make_builtin_potential, read_potential_csv
from .regularity import (
    ConstructionError,
    Selector,
    TransformSpec,
    build_transformation_function,
    check_W_derivative_identity,
    verify_wronskian_regularity,
)
from .spectrum import Spectrum, SpectrumError, compute_spectrum
from .susy import (
    VerificationError,
    completeness_check,
    factorization_residual,
    gaussian_probes,
    integrability_flags,
    predict_outcome,
    verify_outcome,
)

__all__ = [
    "EXIT_OK",
    "EXIT_VERIFY",
    "EXIT_CONFIG",
    "EXIT_CONSTRUCT",
    "RunResult",
    "run_pipeline",
    "emit_plot_data",
    "write_spectrum_csv",
    "build_potential",
]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_CONSTRUCT = 0, 1, 2, 3

# extra seed levels beyond k_max, enough for a 16-element completeness basis
SEED_LEVELS = 19
COMPLETENESS_SIZES = (4, 8, 12, 16)
PHI_COUNT = 4


@dataclass
class RunResult:
    exit_code: int
    report: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    message: str = ""


def build_potential(cfg: RunConfig):
    if cfg.potential_file is not None:
        return read_potential_csv(cfg.potential_file)
    return make_builtin_potential(cfg.potential_name, cfg.potential_params)


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_rows(path: Path, header: list, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _xy(path: Path, x: np.ndarray, y: np.ndarray) -> Path:
    return _write_rows(path, ["x", "value"], ((_fmt(a), _fmt(b)) for a, b in zip(x, y)))


def _xy_poles(path: Path, x: np.ndarray, y: np.ndarray, is_pole: np.ndarray) -> Path:
    # pole rows carry an empty value, never NaN
    rows = ((_fmt(a), "" if p else _fmt(b), int(p)) for a, b, p in zip(x, y, is_pole))
    return _write_rows(path, ["x", "value", "is_pole"], rows)


def write_spectrum_csv(path: str | Path, spectrum: Spectrum, k_max: int | None = None) -> Path:
    levels = spectrum.levels if k_max is None else spectrum.levels[: k_max + 1]
    return _write_rows(Path(path), ["k", "E"], ((k, _fmt(E)) for k, E in enumerate(levels)))


def emit_plot_data(pair: DarbouxPair, outdir: str | Path, phis=()) -> list[Path]:
    """
    One CSV per quantity: ``V0, V1, V2, u1, u2, W`` and, for regular
    pairs, ``v1, v2``. ``phis`` holds ``(n, samples)`` pairs written as
    ``phi_<n>.csv``. ``V1`` always has an ``is_pole`` column; ``V2`` gets
    one only when the pair has poles.
    """
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    x = pair.grid.x
    files = [
        _xy(out / "V0.csv", x, pair.V0_values),
        _xy_poles(out / "V1.csv", x, pair.V1.values, pair.V1.is_pole),
    ]
    if pair.regular:
        files.append(_xy(out / "V2.csv", x, pair.V2))
    else:
        files.append(_xy_poles(out / "V2.csv", x, pair.V2, pair.V2_is_pole))
    files += [
        _xy(out / "u1.csv", x, pair.u1.values),
        _xy(out / "u2.csv", x, pair.u2.values),
        _xy(out / "W.csv", x, pair.W.values),
    ]
    if pair.regular:
        kf = kernel_functions(pair)
        files += [_xy(out / "v1.csv", x, kf.v1.values), _xy(out / "v2.csv", x, kf.v2.values)]
    for n, samples in phis:
        files.append(_xy(out / f"phi_{n}.csv", x, samples))
    return files


def _seed_spectrum(V, cfg: RunConfig, grid: Grid) -> Spectrum:
    need = max(cfg.k_max + 3, cfg.k + 2)
    try:
        return compute_spectrum(V, max(need, SEED_LEVELS), grid)
    except SpectrumError:
        return compute_spectrum(V, need, grid)


def _check(value, tol, passed=None) -> dict:
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"value": value, "tolerance": tol, "passed": ok}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_report(out: Path, report: dict) -> Path:
    report = dict(report)
    report["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path = out / "report.json"
    path.write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def run_pipeline(cfg: RunConfig, outdir: str | Path | None = None) -> RunResult:
    """Run one configuration end to end. Nothing is written on exit codes 2 and 3."""
    out = Path(outdir if outdir is not None else cfg.output_dir)
    tol = cfg.tolerances
    try:
        V = build_potential(cfg)
        grid = Grid(cfg.x_min, cfg.x_max, cfg.n)
        u1_sel, u2_sel = Selector.parse(cfg.u1), Selector.parse(cfg.u2)
    except (PotentialError, ConfigError, ValueError) as exc:
        return RunResult(EXIT_CONFIG, message=f"config error: {exc}")

    try:
        s0 = _seed_spectrum(V, cfg, grid)
    except SpectrumError as exc:
        return RunResult(EXIT_CONSTRUCT, message=f"seed spectrum: {exc}")

    spec = TransformSpec(cfg.k, cfg.alpha1, cfg.alpha2, u1_sel, u2_sel)
    try:
        spec.validate(s0)
    except ValueError as exc:
        return RunResult(EXIT_CONFIG, message=f"config error: {exc}")

    try:
        u1 = build_transformation_function(V, cfg.alpha1, u1_sel, grid, s0)
        u2 = build_transformation_function(V, cfg.alpha2, u2_sel, grid, s0)
        pair = second_order_transform(V, u1, u2)
    except (ConstructionError, DarbouxError) as exc:
        return RunResult(EXIT_CONSTRUCT, message=f"construction failed: {exc}")

    log.info("pair built: chain=%s regular=%s", pair.chain_class, pair.regular)
    reg = verify_wronskian_regularity(pair, s0)
    w_ident = check_W_derivative_identity(u1, u2)
    predicted = predict_outcome(spec, u1, u2, s0)

    checks = {
        "zero_free": _check(
            pair.W.min_ratio_local, tol["zero_free_ratio"],
            passed=pair.W.zero_crossings.size == 0 and pair.W.min_ratio_local > tol["zero_free_ratio"],
        ),
        "w_identity": _check(w_ident, tol["w_identity"]),
        "case_identified": _check(predicted.case_label, "known", passed=predicted.case_label != "unknown"),
    }
    report = {
        "version": __version__,
        "config": cfg.to_dict(),
        "seed_spectrum": list(s0.levels[: cfg.k_max + 1]),
        "transformation": {
            "k": cfg.k, "alpha1": cfg.alpha1, "alpha2": cfg.alpha2,
            "u1": {"selector": cfg.u1, "nodes": u1.node_count, "label": u1.label},
            "u2": {"selector": cfg.u2, "nodes": u2.node_count, "label": u2.label},
            "chain_class": pair.chain_class,
            "v1_poles": list(pair.V1.poles),
            "v2_poles": list(pair.V2_poles),
        },
        "regularity": reg.to_dict(),
        "w_identity_residual": w_ident,
        "predicted_outcome": predicted.to_dict(),
    }

    phis = []
    s2 = None
    if pair.regular:
        try:
            s2 = compute_spectrum(pair.V2_potential, cfg.k_max, grid)
        except SpectrumError as exc:
            report["verified_outcome"] = {"error": str(exc)}
            checks["outcome"] = _check(None, tol["level"], passed=False)
        if s2 is not None:
            cmp = verify_outcome(pair, predicted, cfg.k_max, s0, s2, tol["level"]) \
                if predicted.case_label != "unknown" else None
            if cmp is not None:
                report["verified_outcome"] = cmp.to_dict()
                checks["outcome"] = _check(cmp.max_deviation, tol["level"])
            report["partner_spectrum"] = list(s2.levels)

            alg = factorization_residual(pair, s0, s2)
            report["algebra"] = alg.to_dict()
            checks["intertwining"] = _check(alg.intertwining_residual, tol["intertwining"])
            checks["factorization"] = _check(
                max(alg.factorization_residual_L_adj_L, alg.factorization_residual_L_L_adj),
                tol["factorization"],
            )
            checks["kernel"] = _check(alg.kernel_annihilation, tol["kernel"])

            flags = integrability_flags(pair)
            report["integrability"] = flags
            if predicted.case_label != "unknown":
                agree = (flags["u1"], flags["u2"]) == tuple(predicted.u_square_integrable) and \
                    (flags["v1"], flags["v2"]) == tuple(predicted.v_square_integrable)
                checks["integrability"] = _check(int(not agree), 0, passed=agree)

                try:
                    comp = completeness_check(pair, predicted, s0, gaussian_probes(grid.x), COMPLETENESS_SIZES)
                except VerificationError as exc:
                    comp = {"error": str(exc)}
                report["completeness"] = comp

            edge = max(1, int(round(0.05 * grid.n)))
            dv = np.r_[pair.V2[:edge] - pair.V0_values[:edge], pair.V2[-edge:] - pair.V0_values[-edge:]]
            report["edge_max_abs_V2_minus_V0"] = float(np.max(np.abs(dv)))

        kept = [n for n in range(len(s0)) if n not in predicted.excluded_levels][:PHI_COUNT]
        phis = [(n, apply_L(pair, s0.eigenfunctions[n]).values) for n in kept]
    else:
        checks["regular"] = _check(len(pair.V2_poles), 0, passed=False)

    passed = all(c["passed"] for c in checks.values())
    report["checks"] = checks
    report["passed"] = passed

    files = emit_plot_data(pair, out, phis)
    files.append(write_spectrum_csv(out / "spectrum_h0.csv", s0, cfg.k_max))
    if s2 is not None:
        files.append(write_spectrum_csv(out / "spectrum_h2.csv", s2))
    files.append(_write_report(out, report))
    failed = sorted(k for k, c in checks.items() if not c["passed"])
    msg = "all checks passed" if passed else "failed: " + ", ".join(failed)
    return RunResult(EXIT_OK if passed else EXIT_VERIFY, report, files, msg)
