"""Command-line surface: synth, prune, unmix, eval, experiment.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 numerical
failure (solver divergence). Every command is deterministic given its
arguments; the experiment wall-time column is the one exception and can be
dropped with --no-timing.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import HsiCube, IndexSet, SpectralLibrary, reconstruct
from .denoise import denoise
from .errors import (
    HeaderParse,
    InvalidP,
    IoFailure,
    MissingFile,
    NonFiniteIterate,
    RaggedRows,
    SizeMismatch,
    SpecpruneError,
)
from .io import dumps_canonical, load_cube, load_library, save_cube, save_report, write_json
from .metrics import EvalReport, asad, sad, sre
from .pruning import PruneResult, omp_prune, prune_nnd
from .solver import SolverConfig, default_lambda, default_rho, sunsal
from .synth import SceneSpec, generate_scene

_IO_ERRORS = (MissingFile, IoFailure, SizeMismatch, HeaderParse, RaggedRows, OSError)

# the denoise stage has two plausible readings of "subtract the noise";
# reports record the implemented one explicitly
DENOISE_NOTE = (
    "denoise subtracts each band's full regression residual vector, "
    "not the band's scalar deviation"
)


# ---------------------------------------------------------------- helpers


def _parse_indices(text: str) -> tuple[int, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(int(t) for t in items)
    except ValueError as exc:
        raise SpecpruneError(f"bad index list {text!r}: {exc}") from exc


def _indices_from_json(path: str) -> tuple[int, ...]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"no JSON file at {p}")
    try:
        doc = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"could not read indices from {p}: {exc}") from exc
    for key in ("selected_indices", "indices"):
        if isinstance(doc, dict) and key in doc:
            return tuple(int(i) for i in doc[key])
    raise SpecpruneError(f"{p} has neither 'selected_indices' nor 'indices'")


def _solver_config(args, *, lam_default: Optional[float] = None) -> SolverConfig:
    lam = args.lam if args.lam is not None else lam_default
    return SolverConfig(
        lam=lam,
        rho=args.rho,
        max_iter=args.max_iter,
        tol_primal=args.tol_primal,
        tol_dual=args.tol_dual,
        nonneg=not args.no_nonneg,
        sum_to_one=args.sum_to_one,
    )


def _add_solver_flags(p: argparse.ArgumentParser, *, sum_to_one_default: bool) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sparsity weight (default: data-scaled)")
    p.add_argument("--rho", type=float, default=None,
                   help="ADMM penalty (default: 0.1*lambda, floored)")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tol-primal", type=float, default=1e-6)
    p.add_argument("--tol-dual", type=float, default=1e-6)
    p.add_argument("--no-nonneg", action="store_true",
                   help="drop the nonnegativity constraint")
    if sum_to_one_default:
        p.add_argument("--no-sum-to-one", dest="no_sum_to_one", action="store_true",
                       help="drop the sum-to-one constraint")
    else:
        p.add_argument("--sum-to-one", action="store_true",
                       help="add the sum-to-one constraint")


def _sre_fields(value: float) -> dict:
    if math.isinf(value):
        return {"sre_db": None, "sre_exact": True}
    return {"sre_db": value, "sre_exact": False}


# ---------------------------------------------------------------- score plot


def _render_score_svg(
    scores: Sequence[float],
    selected: Sequence[int],
    truth: Optional[Sequence[int]],
    path,
) -> Path:
    """Write a per-atom score scatter as a standalone SVG file."""
    w, h = 720, 360
    ml, mr, mt, mb = 60, 20, 28, 44
    k = len(scores)
    finite = [s for s in scores if math.isfinite(s)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    if hi - lo < 1e-30:
        hi = lo + 1.0
    pad = 0.06 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(i: float) -> float:
        return ml + (w - ml - mr) * (i / max(k - 1, 1))

    def sy(v: float) -> float:
        return mt + (h - mt - mb) * (1.0 - (v - lo) / (hi - lo))

    sel = set(int(i) for i in selected)
    tru = set(int(i) for i in truth) if truth is not None else set()
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{ml}" y1="{h - mb}" x2="{w - mr}" y2="{h - mb}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h - mb}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{(ml + w - mr) / 2:.6g}" y="{h - 10}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13">atom index</text>',
        f'<text x="16" y="{(mt + h - mb) / 2:.6g}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {(mt + h - mb) / 2:.6g})">score</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = sy(v)
        parts.append(
            f'<line x1="{ml}" y1="{y:.6g}" x2="{w - mr}" y2="{y:.6g}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{ml - 6}" y="{y + 4:.6g}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    for i, s in enumerate(scores):
        if not math.isfinite(s):
            continue
        x, y = sx(i), sy(s)
        fill = "#1f77b4" if i in sel else "#999999"
        parts.append(f'<circle cx="{x:.6g}" cy="{y:.6g}" r="4" fill="{fill}"/>')
        if i in tru:
            parts.append(
                f'<circle cx="{x:.6g}" cy="{y:.6g}" r="7" fill="none" '
                'stroke="#d62728" stroke-width="2"/>'
            )
    legend = "selected = blue, other = gray"
    if truth is not None:
        legend += ", true atoms ringed red"
    parts.append(
        f'<text x="{ml}" y="{mt - 10}" font-family="sans-serif" '
        f'font-size="12">{legend}</text>'
    )
    parts.append("</svg>")
    out = Path(path)
    try:
        out.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise IoFailure(f"could not write plot to {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    library = load_library(args.lib)
    spec = SceneSpec(
        n_pixels=args.pixels,
        n_endmembers=args.endmembers,
        max_purity=args.purity,
        snr_db=args.snr,
        seed=args.seed,
        library_indices=_parse_indices(args.indices) if args.indices else None,
    )
    truth = generate_scene(library, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_cube(truth.noisy_cube, out / "cube.json")
    written = ["cube.json", "cube.bin", "truth.json"]
    if args.keep_clean:
        save_cube(truth.clean_cube, out / "clean.json")
        written += ["clean.json", "clean.bin"]
    truth_doc = {
        "schema": 1,
        "indices": list(truth.indices),
        "names": [library.names[i] for i in truth.indices],
        "seed": spec.seed,
        "library": str(args.lib),
        "n_pixels": spec.n_pixels,
        "n_endmembers": spec.n_endmembers,
        "max_purity": spec.max_purity,
        "snr_db": spec.snr_db,
    }
    write_json(truth_doc, out / "truth.json")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _prune_config_echo(args, algo: str, lam_resolved: Optional[float]) -> dict:
    echo = {
        "algorithm": algo,
        "p": args.p,
        "cube": str(args.cube),
        "library": str(args.lib),
        "denoise": not args.no_denoise,
        "ridge": args.ridge,
    }
    if algo == "nnd":
        echo.update(
            {
                "lambda": lam_resolved,
                "lambda_mode": "user" if args.lam is not None else "auto",
                "rho": args.rho if args.rho is not None else default_rho(lam_resolved),
                "max_iter": args.max_iter,
                "tol_primal": args.tol_primal,
                "tol_dual": args.tol_dual,
                "nonneg": not args.no_nonneg,
                "sum_to_one": args.sum_to_one,
                "score_order": args.score_order,
            }
        )
    else:
        echo["residual_tol"] = args.residual_tol
    return echo


def cmd_prune(args) -> int:
    cube = load_cube(args.cube)
    library = load_library(args.lib)
    notes = []
    if not args.no_denoise:
        cube = denoise(cube, ridge=args.ridge)
        notes.append(DENOISE_NOTE)
    if args.algo == "nnd":
        config = _solver_config(args)
        result = prune_nnd(cube, library, args.p, config, score_order=args.score_order)
        lam_resolved = (
            config.lam if config.lam is not None else default_lambda(cube, library)
        )
    else:
        result = omp_prune(cube, library, args.p, residual_tol=args.residual_tol)
        lam_resolved = None
    save_report(
        result,
        args.out,
        names=library.names,
        config=_prune_config_echo(args, args.algo, lam_resolved),
        seed=None,
        notes=notes,
    )
    if args.plot:
        truth_idx = None
        if args.truth:
            truth_idx = _indices_from_json(args.truth)
        _render_score_svg(result.scores, list(result.selected), truth_idx, args.plot)
    names = ", ".join(library.names[i] for i in result.selected)
    print(f"selected [{', '.join(str(i) for i in result.selected)}]: {names}")
    print(f"report written to {args.out}")
    return 0


def cmd_unmix(args) -> int:
    cube = load_cube(args.cube)
    library = load_library(args.lib)
    if args.indices:
        indices = _parse_indices(args.indices)
    elif args.from_json:
        indices = _indices_from_json(args.from_json)
    else:
        raise SpecpruneError("give --indices or --from-json")
    if len(indices) == 0:
        raise InvalidP("no atoms selected for unmixing")
    index_set = IndexSet(indices)
    index_set.check_bounds(library.n_atoms)
    sub = library.subset(index_set)
    config = _solver_config_unmix(args)
    abundances, diag = sunsal(cube, sub, config)
    recon = reconstruct(sub, abundances)
    reference = load_cube(args.reference) if args.reference else cube
    sre_db = sre(reference, recon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_cube(HsiCube(abundances.data), out / "abundance.json")
    lam = config.lam if config.lam is not None else default_lambda(cube, sub)
    doc = {
        "schema": 1,
        "indices": list(index_set),
        "names": list(sub.names),
        "lambda": lam,
        "rho": config.rho if config.rho is not None else default_rho(lam),
        "iterations": diag.iterations,
        "converged": diag.converged,
        "nonneg": config.nonneg,
        "sum_to_one": config.sum_to_one,
        "cube": str(args.cube),
        "library": str(args.lib),
        "reference": str(args.reference) if args.reference else None,
    }
    doc.update(_sre_fields(sre_db))
    write_json(doc, out / "unmix.json")
    shown = "exact" if math.isinf(sre_db) else f"{sre_db:.2f} dB"
    print(f"unmixed {len(index_set)} atoms: SRE {shown}")
    return 0


def _solver_config_unmix(args) -> SolverConfig:
    return SolverConfig(
        lam=args.lam if args.lam is not None else 0.0,
        rho=args.rho,
        max_iter=args.max_iter,
        tol_primal=args.tol_primal,
        tol_dual=args.tol_dual,
        nonneg=not args.no_nonneg,
        sum_to_one=not args.no_sum_to_one,
    )


def cmd_eval(args) -> int:
    truth_path = Path(args.truth)
    report_path = Path(args.report)
    for p in (truth_path, report_path):
        if not p.is_file():
            raise MissingFile(f"no file at {p}")
    try:
        truth_doc = json.loads(truth_path.read_text())
        report_doc = json.loads(report_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"could not read eval inputs: {exc}") from exc
    lib_path = args.lib or report_doc.get("config", {}).get("library") or truth_doc.get("library")
    if not lib_path:
        raise SpecpruneError("no library path given or recorded in inputs")
    library = load_library(lib_path)
    true_idx = IndexSet(tuple(int(i) for i in truth_doc["indices"]))
    est_idx = IndexSet(tuple(int(i) for i in report_doc["selected_indices"]))
    true_idx.check_bounds(library.n_atoms)
    est_idx.check_bounds(library.n_atoms)
    detection = 1.0 if set(true_idx).issubset(set(est_idx)) else 0.0
    t_sigs = library.data[list(true_idx)]
    e_sigs = library.data[list(est_idx)] if len(est_idx) else np.empty((0, library.n_bands))
    asad_val, pairs = asad(t_sigs, e_sigs)
    matched = {ti: sad(t_sigs[ti], e_sigs[ei]) for ti, ei in pairs}
    per_em = tuple(matched.get(i, math.pi / 2.0) for i in range(len(true_idx)))
    sre_db: Optional[float] = None
    sre_exact = False
    if args.cube:
        cube = load_cube(args.cube)
        if len(est_idx) >= 2:
            sub = library.subset(est_idx)
            abundances, _ = sunsal(cube, sub, SolverConfig(lam=0.0, sum_to_one=True))
            value = sre(cube, reconstruct(sub, abundances))
            sre_exact = math.isinf(value)
            sre_db = None if sre_exact else value
    doc = {
        "schema": 1,
        "asad": asad_val,
        "sre": sre_db,
        "sre_exact": sre_exact,
        "detection": detection,
        "per_endmember_sad": list(per_em),
        "true_indices": list(true_idx),
        "selected_indices": list(est_idx),
    }
    if args.out:
        write_json(doc, args.out)
        print(f"metrics written to {args.out}")
    else:
        sys.stdout.write(dumps_canonical(doc))
    return 0


# ---------------------------------------------------------------- experiment


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated contents of an experiment spec JSON."""

    library: str
    n_pixels: tuple[int, ...]
    n_endmembers: tuple[int, ...]
    max_purity: tuple[float, ...]
    snr_db: tuple[Optional[float], ...]
    trials_per_cell: int
    base_seed: int
    algorithms: tuple[str, ...]
    solver: dict
    denoise: bool
    residual_tol: float

    def __post_init__(self) -> None:
        for axis in ("n_pixels", "n_endmembers", "max_purity", "snr_db"):
            if len(getattr(self, axis)) == 0:
                raise SpecpruneError(f"experiment axis {axis} is empty")
        if self.trials_per_cell < 1:
            raise SpecpruneError("trials_per_cell must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise SpecpruneError("base_seed must fit in 64 bits")
        bad = set(self.algorithms) - {"nnd", "omp"}
        if bad or not self.algorithms:
            raise SpecpruneError(
                f"algorithms must be a nonempty subset of nnd/omp, got {self.algorithms}"
            )

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"no experiment spec at {p}")
        try:
            doc = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(f"could not read {p}: {exc}") from exc
        if not isinstance(doc, dict) or "library" not in doc:
            raise SpecpruneError(f"{p} must be a JSON object with a 'library' key")
        try:
            return cls(
                library=str(doc["library"]),
                n_pixels=tuple(int(v) for v in doc.get("n_pixels", [500])),
                n_endmembers=tuple(int(v) for v in doc.get("n_endmembers", [5])),
                max_purity=tuple(float(v) for v in doc.get("max_purity", [1.0])),
                snr_db=tuple(
                    None if v is None else float(v) for v in doc.get("snr_db", [None])
                ),
                trials_per_cell=int(doc.get("trials_per_cell", 1)),
                base_seed=int(doc.get("base_seed", 0)),
                algorithms=tuple(doc.get("algorithms", ["nnd", "omp"])),
                solver=dict(doc.get("solver", {})),
                denoise=bool(doc.get("denoise", True)),
                residual_tol=float(doc.get("residual_tol", 1e-4)),
            )
        except (TypeError, ValueError) as exc:
            raise SpecpruneError(f"malformed experiment spec {p}: {exc}") from exc


_SOLVER_KEYS = {
    "lambda": "lam",
    "rho": "rho",
    "max_iter": "max_iter",
    "tol_primal": "tol_primal",
    "tol_dual": "tol_dual",
    "nonneg": "nonneg",
    "sum_to_one": "sum_to_one",
}


def _experiment_solver_config(overrides: dict) -> SolverConfig:
    kwargs = {}
    for key, value in overrides.items():
        if key not in _SOLVER_KEYS:
            raise SpecpruneError(f"unknown solver override {key!r}")
        kwargs[_SOLVER_KEYS[key]] = value
    return SolverConfig(**kwargs)


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.12g" % value
    return str(value)


def _run_experiment_row(
    library: SpectralLibrary,
    spec: ExperimentSpec,
    config: SolverConfig,
    cell_idx: int,
    cell: tuple,
    trial: int,
    algo: str,
    seed: int,
    with_timing: bool,
) -> dict:
    n_pix, p, purity, snr = cell
    scene = generate_scene(
        library,
        SceneSpec(
            n_pixels=n_pix,
            n_endmembers=p,
            max_purity=purity,
            snr_db=snr,
            seed=seed,
        ),
    )
    t0 = time.perf_counter()
    cube = denoise(scene.noisy_cube) if spec.denoise else scene.noisy_cube
    if algo == "nnd":
        result = prune_nnd(cube, library, p, config)
    else:
        result = omp_prune(cube, library, p, residual_tol=spec.residual_tol)
    wall = time.perf_counter() - t0
    truth_set = set(scene.indices)
    selected = list(result.selected)
    detected = truth_set.issubset(set(selected))
    delta_margin = None
    detected_alt = None
    if algo == "nnd":
        scores = np.array(result.scores)
        mask = np.zeros(library.n_atoms, dtype=bool)
        mask[list(truth_set)] = True
        delta_margin = float(scores[mask].min() - scores[~mask].max())
        alt = np.lexsort((np.arange(len(scores)), scores))[:p]
        detected_alt = truth_set.issubset(set(int(i) for i in alt))
    sre_db = None
    if len(selected) >= 2:
        sub = library.subset(selected)
        abundances, _ = sunsal(cube, sub, SolverConfig(lam=0.0, sum_to_one=True))
        sre_db = sre(scene.clean_cube, reconstruct(sub, abundances))
    asad_val, _ = asad(
        library.data[list(scene.indices)],
        library.data[selected] if selected else np.empty((0, library.n_bands)),
    )
    row = {
        "schema": 1,
        "row_type": "data",
        "cell": cell_idx,
        "n_pixels": n_pix,
        "n_endmembers": p,
        "max_purity": purity,
        "snr_db": snr,
        "algo": algo,
        "trial": trial,
        "seed": seed,
        "delta_margin": delta_margin,
        "detected": detected,
        "detected_alt": detected_alt,
        "sre_db": sre_db,
        "asad_rad": asad_val,
    }
    if with_timing:
        row["wall_s"] = wall
    return row


def _aggregate_rows(rows: list[dict], with_timing: bool) -> list[dict]:
    def mean(values) -> Optional[float]:
        vals = [v for v in values if v is not None]
        if not vals:
            return None
        return float(np.mean([1.0 if v is True else 0.0 if v is False else v for v in vals]))

    out = []
    seen: list[tuple] = []
    for row in rows:
        key = (row["cell"], row["algo"])
        if key not in seen:
            seen.append(key)
    for cell_idx, algo in seen:
        group = [r for r in rows if (r["cell"], r["algo"]) == (cell_idx, algo)]
        first = group[0]
        agg = {
            "schema": 1,
            "row_type": "aggregate",
            "cell": cell_idx,
            "n_pixels": first["n_pixels"],
            "n_endmembers": first["n_endmembers"],
            "max_purity": first["max_purity"],
            "snr_db": first["snr_db"],
            "algo": algo,
            "trial": None,
            "seed": None,
            "delta_margin": mean(r["delta_margin"] for r in group),
            "detected": mean(r["detected"] for r in group),
            "detected_alt": mean(r["detected_alt"] for r in group),
            "sre_db": mean(r["sre_db"] for r in group),
            "asad_rad": mean(r["asad_rad"] for r in group),
        }
        if with_timing:
            agg["wall_s"] = mean(r.get("wall_s") for r in group)
        out.append(agg)
    return out


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_file(args.spec)
    library = load_library(spec.library)
    config = _experiment_solver_config(spec.solver)
    with_timing = not args.no_timing
    cells = list(
        itertools.product(spec.n_pixels, spec.n_endmembers, spec.max_purity, spec.snr_db)
    )
    tasks = []
    row_idx = 0
    for cell_idx, cell in enumerate(cells):
        for trial in range(spec.trials_per_cell):
            for algo in spec.algorithms:
                tasks.append((cell_idx, cell, trial, algo, spec.base_seed + row_idx))
                row_idx += 1

    def run(task) -> dict:
        cell_idx, cell, trial, algo, seed = task
        return _run_experiment_row(
            library, spec, config, cell_idx, cell, trial, algo, seed, with_timing
        )

    workers = int(os.environ.get("SPECPRUNE_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    rows.extend(_aggregate_rows(rows, with_timing))

    fields = [
        "schema", "row_type", "cell", "n_pixels", "n_endmembers", "max_purity",
        "snr_db", "algo", "trial", "seed", "delta_margin", "detected",
        "detected_alt", "sre_db", "asad_rad",
    ]
    if with_timing:
        fields.append("wall_s")
    out = Path(args.out)
    try:
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(fields)
            for row in rows:
                writer.writerow([_fmt_cell(row.get(f)) for f in fields])
    except OSError as exc:
        raise IoFailure(f"could not write {out}: {exc}") from exc
    n_data = sum(1 for r in rows if r["row_type"] == "data")
    print(f"wrote {n_data} data rows + {len(rows) - n_data} aggregates to {out}")
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specprune",
        description="Prune spectral libraries for sparse hyperspectral unmixing.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("--lib", required=True, help="library CSV")
    p_synth.add_argument("--pixels", type=int, required=True)
    p_synth.add_argument("--endmembers", type=int, required=True)
    p_synth.add_argument("--purity", type=float, default=1.0)
    p_synth.add_argument("--snr", type=float, default=None, help="SNR in dB (default noiseless)")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--indices", default=None, help="pin active atoms, e.g. 3,7,9")
    p_synth.add_argument("--keep-clean", action="store_true", help="also write the clean cube")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_prune = sub.add_parser("prune", help="score and select library atoms")
    p_prune.add_argument("--cube", required=True, help="cube header JSON")
    p_prune.add_argument("--lib", required=True, help="library CSV")
    p_prune.add_argument("--p", type=int, required=True, help="atoms to keep")
    p_prune.add_argument("--algo", choices=("nnd", "omp"), default="nnd")
    p_prune.add_argument("--no-denoise", action="store_true")
    p_prune.add_argument("--ridge", type=float, default=None,
                         help="denoise ridge (default: data-scaled)")
    p_prune.add_argument("--score-order", choices=("max", "min"), default="max",
                         help="keep atoms with largest (default) or smallest scores")
    p_prune.add_argument("--residual-tol", type=float, default=1e-4,
                         help="omp relative residual stop")
    _add_solver_flags(p_prune, sum_to_one_default=False)
    p_prune.add_argument("--out", default="report.json")
    p_prune.add_argument("--plot", default=None, help="write per-atom score SVG here")
    p_prune.add_argument("--truth", default=None,
                         help="truth JSON for plot markers")
    p_prune.set_defaults(func=cmd_prune)

    p_unmix = sub.add_parser("unmix", help="estimate abundances on selected atoms")
    p_unmix.add_argument("--cube", required=True)
    p_unmix.add_argument("--lib", required=True)
    p_unmix.add_argument("--indices", default=None, help="e.g. 3,7,9")
    p_unmix.add_argument("--from-json", default=None,
                         help="read selected_indices (or indices) from this JSON")
    _add_solver_flags(p_unmix, sum_to_one_default=True)
    p_unmix.add_argument("--reference", default=None,
                         help="score SRE against this cube instead of the input")
    p_unmix.add_argument("--out", default="unmix_out", help="output directory")
    p_unmix.set_defaults(func=cmd_unmix)

    p_eval = sub.add_parser("eval", help="score one pruning run against truth")
    p_eval.add_argument("--truth", required=True, help="truth JSON from synth")
    p_eval.add_argument("--report", required=True, help="report JSON from prune")
    p_eval.add_argument("--lib", default=None, help="library CSV override")
    p_eval.add_argument("--cube", default=None,
                        help="cube for an SRE unmix pass (optional)")
    p_eval.add_argument("--out", default=None, help="metrics JSON (default stdout)")
    p_eval.set_defaults(func=cmd_eval)

    p_exp = sub.add_parser("experiment", help="run a factorial sweep to CSV")
    p_exp.add_argument("--spec", required=True, help="experiment spec JSON")
    p_exp.add_argument("--out", required=True, help="CSV path")
    p_exp.add_argument("--no-timing", action="store_true",
                       help="drop the wall-time column for byte-stable output")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteIterate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SpecpruneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
