"""File formats: cubes (JSON header + raw f64), libraries (CSV), reports (JSON).

Cube layout: a small JSON header describing dimensions next to a raw binary
payload of little-endian float64 in pixel-major order (band varies fastest).
The header file is the addressable artifact; the payload shares its stem
with a .bin suffix.

All JSON written here is canonical: keys sorted, floats rendered with %.12g,
NaN and infinities as null, one trailing newline. Identical inputs therefore
serialize to identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import HsiCube, SpectralLibrary
from .errors import (
    EmptyLibrary,
    HeaderParse,
    IoFailure,
    MissingFile,
    NonFiniteData,
    RaggedRows,
    SizeMismatch,
)
from .pruning import PruneResult

__all__ = [
    "CubeHeader",
    "load_cube",
    "save_cube",
    "load_library",
    "save_library",
    "save_report",
    "dumps_canonical",
    "write_json",
]

_DTYPE_TAG = "f64le"
_INTERLEAVE_TAG = "pixel-major"


@dataclass(frozen=True)
class CubeHeader:
    """Validated contents of a cube header file."""

    lines: int
    samples: int
    bands: int
    dtype: str = _DTYPE_TAG
    interleave: str = _INTERLEAVE_TAG
    wavelengths: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.lines < 1 or self.samples < 1 or self.bands < 1:
            raise HeaderParse(
                f"dimensions must be positive: lines={self.lines} "
                f"samples={self.samples} bands={self.bands}"
            )
        if self.dtype != _DTYPE_TAG:
            raise HeaderParse(f"unsupported dtype {self.dtype!r}, expected {_DTYPE_TAG!r}")
        if self.interleave != _INTERLEAVE_TAG:
            raise HeaderParse(
                f"unsupported interleave {self.interleave!r}, expected {_INTERLEAVE_TAG!r}"
            )
        if self.wavelengths is not None:
            wl = tuple(float(w) for w in self.wavelengths)
            if len(wl) != self.bands:
                raise HeaderParse(
                    f"{len(wl)} wavelengths for {self.bands} bands"
                )
            object.__setattr__(self, "wavelengths", wl)

    @property
    def n_pixels(self) -> int:
        return self.lines * self.samples

    @classmethod
    def from_mapping(cls, obj: Mapping) -> "CubeHeader":
        if not isinstance(obj, Mapping):
            raise HeaderParse(f"header must be a JSON object, got {type(obj).__name__}")
        required = ("lines", "samples", "bands", "dtype", "interleave")
        missing = [key for key in required if key not in obj]
        if missing:
            raise HeaderParse(f"header missing keys: {', '.join(missing)}")
        try:
            return cls(
                lines=int(obj["lines"]),
                samples=int(obj["samples"]),
                bands=int(obj["bands"]),
                dtype=str(obj["dtype"]),
                interleave=str(obj["interleave"]),
                wavelengths=(
                    tuple(float(w) for w in obj["wavelengths"])
                    if obj.get("wavelengths") is not None
                    else None
                ),
            )
        except (TypeError, ValueError) as exc:
            raise HeaderParse(f"malformed header field: {exc}") from exc


def _payload_path(header_path: Path) -> Path:
    return header_path.with_suffix(".bin")


def load_cube(path) -> HsiCube:
    """Read a cube from its header file; the payload sits next to it."""
    header_path = Path(path)
    if not header_path.is_file():
        raise MissingFile(f"no cube header at {header_path}")
    try:
        text = header_path.read_text()
    except OSError as exc:
        raise IoFailure(f"could not read {header_path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HeaderParse(f"{header_path} is not valid JSON: {exc}") from exc
    header = CubeHeader.from_mapping(obj)
    payload = _payload_path(header_path)
    if not payload.is_file():
        raise MissingFile(f"no payload at {payload}")
    try:
        blob = payload.read_bytes()
    except OSError as exc:
        raise IoFailure(f"could not read {payload}: {exc}") from exc
    expected = header.n_pixels * header.bands * 8
    if len(blob) != expected:
        raise SizeMismatch(
            f"{payload} holds {len(blob)} bytes, header implies {expected}"
        )
    data = np.frombuffer(blob, dtype="<f8").reshape(header.n_pixels, header.bands)
    return HsiCube(
        data,
        wavelengths=header.wavelengths,
        lines=header.lines,
        samples=header.samples,
    )


def save_cube(cube: HsiCube, path) -> tuple[Path, Path]:
    """Write header JSON and raw payload; returns (header_path, payload_path)."""
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    header = {
        "lines": cube.lines,
        "samples": cube.samples,
        "bands": cube.n_bands,
        "dtype": _DTYPE_TAG,
        "interleave": _INTERLEAVE_TAG,
    }
    if cube.wavelengths is not None:
        header["wavelengths"] = list(cube.wavelengths)
    payload = _payload_path(header_path)
    try:
        header_path.write_text(json.dumps(header, sort_keys=True) + "\n")
        payload.write_bytes(np.ascontiguousarray(cube.data, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoFailure(f"could not write cube to {header_path}: {exc}") from exc
    return header_path, payload


def load_library(path) -> SpectralLibrary:
    """Read a CSV library: one atom per row, name first, then band values.

    Blank lines and lines starting with # are skipped. An optional first
    data row whose name field is 'wavelength' carries band centers. Values
    may use scientific notation.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"no library at {p}")
    try:
        text = p.read_text()
    except OSError as exc:
        raise IoFailure(f"could not read {p}: {exc}") from exc
    rows: list[tuple[str, list[float]]] = []
    wavelengths: Optional[list[float]] = None
    width: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        # comments are recognized on the raw line, so a quoted name that
        # begins with '#' is still an atom row
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([raw]), [])
        if not fields:
            continue
        name = fields[0].strip()
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise NonFiniteData(f"{p} line {lineno}: unparseable value ({exc})") from exc
        if any(not math.isfinite(v) for v in values):
            raise NonFiniteData(f"{p} line {lineno}: non-finite value")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise RaggedRows(
                f"{p} line {lineno}: {len(values)} values, expected {width}"
            )
        if name.lower() == "wavelength" and wavelengths is None and not rows:
            wavelengths = values
            continue
        rows.append((name, values))
    if not rows:
        raise EmptyLibrary(f"{p} holds no atom rows")
    data = np.array([v for _, v in rows])
    return SpectralLibrary(
        data,
        tuple(name for name, _ in rows),
        tuple(wavelengths) if wavelengths is not None else None,
    )


def save_library(library: SpectralLibrary, path) -> Path:
    """Write a library CSV that load_library reads back exactly.

    Values use 17 significant digits, which round-trips float64.
    """
    p = Path(path)
    lines = []
    if library.wavelengths is not None:
        lines.append("wavelength," + ",".join("%.17g" % w for w in library.wavelengths))
    for name, row in zip(library.names, library.data):
        cell = name
        # quote names that would otherwise read back as a comment or lose
        # surrounding whitespace, besides the usual CSV special characters
        if any(ch in name for ch in ',"\n\r') or name.lstrip().startswith("#") or name != name.strip():
            cell = '"' + name.replace('"', '""') + '"'
        lines.append(cell + "," + ",".join("%.17g" % v for v in row))
    try:
        p.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"could not write library to {p}: {exc}") from exc
    return p


def _canonical(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return "null"
        return "%.12g" % v
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",".join(f"{json.dumps(k)}:{_canonical(v)}" for k, v in items)
        return "{" + body + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    raise IoFailure(f"cannot serialize {type(obj).__name__} canonically")


def dumps_canonical(obj) -> str:
    """Canonical JSON text: sorted keys, %.12g floats, NaN/inf as null."""
    return _canonical(obj) + "\n"


def write_json(obj, path) -> Path:
    p = Path(path)
    try:
        p.write_text(dumps_canonical(obj))
    except OSError as exc:
        raise IoFailure(f"could not write {p}: {exc}") from exc
    return p


def _metrics_json(metrics) -> Optional[dict]:
    if metrics is None:
        return None
    out = {
        "asad": metrics.asad,
        "sre": metrics.sre_db,
        "detection": metrics.detection,
    }
    if metrics.sre_db is not None and math.isinf(metrics.sre_db):
        out["sre"] = None
        out["sre_exact"] = True
    if metrics.per_endmember_sad:
        out["per_endmember_sad"] = list(metrics.per_endmember_sad)
    return out


def save_report(
    result: PruneResult,
    path,
    *,
    names: Sequence[str],
    config: Mapping,
    metrics=None,
    seed: Optional[int] = None,
    notes: Sequence[str] = (),
) -> Path:
    """Write a pruning report: selection, scores, config echo, metrics, seed.

    NaN scores (the OMP unselected sentinel) serialize to null; an infinite
    SRE serializes to null plus "sre_exact": true.
    """
    if len(names) != len(result.scores):
        raise SizeMismatch(f"{len(names)} names for {len(result.scores)} scores")
    report = {
        "selected_indices": list(result.selected),
        "selected_names": [str(names[i]) for i in result.selected],
        "scores": list(result.scores),
        "base_nuclear_norm": result.base_nuclear_norm,
        "algorithm": result.algorithm,
        "config": dict(config),
        "metrics": _metrics_json(metrics),
        "seed": seed,
    }
    if notes:
        report["notes"] = [str(n) for n in notes]
    return write_json(report, path)
