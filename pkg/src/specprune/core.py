"""Domain types shared by every stage of the pipeline.

Conventions (used consistently across the package):
  * pixels are rows: a cube is (N, L) with N pixels and L bands,
  * a library is (K, L) with K atoms as rows,
  * an abundance matrix is (N, K), one row of coefficients per pixel.

All arrays are converted to C-contiguous float64 and frozen (writeable flag
cleared) at construction, and non-finite entries are rejected there, so the
numerical code can assume clean inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
import numpy.typing as npt

from .errors import (
    DimensionMismatch,
    EmptyLibrary,
    IndexOutOfRange,
    NonFiniteData,
    ZeroNormAtom,
)

__all__ = [
    "NDArrayF",
    "HsiCube",
    "SpectralLibrary",
    "ConstraintMode",
    "AbundanceMatrix",
    "IndexSet",
    "validate_pair",
    "reconstruct",
]

NDArrayF = npt.NDArray[np.float64]

# slack allowed when checking declared abundance constraints
NONNEG_SLACK = 1e-9
SUM_TO_ONE_SLACK = 1e-6


def _frozen_f64(values, name: str, ndim: int = 2) -> NDArrayF:
    # always copy so freezing never mutates a caller-owned array
    arr = np.array(values, dtype=np.float64, order="C", copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        where = np.argwhere(~np.isfinite(arr))[0]
        raise NonFiniteData(f"{name} has a non-finite entry at {tuple(int(v) for v in where)}")
    arr.setflags(write=False)
    return arr


def _check_wavelengths(wavelengths, n_bands: int) -> tuple[float, ...] | None:
    if wavelengths is None:
        return None
    wl = tuple(float(w) for w in wavelengths)
    if len(wl) != n_bands:
        raise DimensionMismatch(
            f"wavelengths has {len(wl)} entries for {n_bands} bands"
        )
    if any(not np.isfinite(w) for w in wl):
        raise NonFiniteData("wavelengths contain a non-finite value")
    if any(b <= a for a, b in zip(wl, wl[1:])):
        raise DimensionMismatch("wavelengths must be strictly increasing")
    return wl


@dataclass(frozen=True, eq=False)
class HsiCube:
    """A hyperspectral cube flattened to pixel-major order.

    data is (N, L): N pixels, L bands. lines * samples must equal N; a plain
    pixel list defaults to lines=N, samples=1.
    """

    data: NDArrayF
    wavelengths: tuple[float, ...] | None = None
    lines: int | None = None
    samples: int | None = None

    def __post_init__(self) -> None:
        data = _frozen_f64(self.data, "cube data")
        n, l = data.shape
        if n < 1:
            raise DimensionMismatch("cube needs at least one pixel")
        if l < 2:
            raise DimensionMismatch("cube needs at least two bands")
        lines = self.lines if self.lines is not None else n
        samples = self.samples if self.samples is not None else (
            1 if self.lines is None else n // max(self.lines, 1)
        )
        if lines < 1 or samples < 1 or lines * samples != n:
            raise DimensionMismatch(
                f"lines*samples = {lines}*{samples} does not match {n} pixels"
            )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "lines", int(lines))
        object.__setattr__(self, "samples", int(samples))
        object.__setattr__(self, "wavelengths", _check_wavelengths(self.wavelengths, l))

    @property
    def n_pixels(self) -> int:
        return self.data.shape[0]

    @property
    def n_bands(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class SpectralLibrary:
    """A dictionary of K spectral signatures over L shared bands.

    Atoms are rows of data (K, L). Every atom must have a positive norm;
    names are one identifier per atom (not required to be unique) and are
    generated as atom_000, atom_001, ... when omitted.
    """

    data: NDArrayF
    names: tuple[str, ...] | None = None
    wavelengths: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        data = _frozen_f64(self.data, "library data")
        k, l = data.shape
        if k < 2:
            raise EmptyLibrary(f"library must hold at least 2 atoms, got {k}")
        if l < 2:
            raise DimensionMismatch("library needs at least two bands")
        norms = np.linalg.norm(data, axis=1)
        if (norms == 0.0).any():
            idx = int(np.argmin(norms))
            raise ZeroNormAtom(f"library atom {idx} has zero norm")
        if self.names is None:
            names = tuple(f"atom_{i:03d}" for i in range(k))
        else:
            names = tuple(str(n) for n in self.names)
        if len(names) != k:
            raise DimensionMismatch(f"{len(names)} names for {k} atoms")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "wavelengths", _check_wavelengths(self.wavelengths, l))

    @property
    def n_atoms(self) -> int:
        return self.data.shape[0]

    @property
    def n_bands(self) -> int:
        return self.data.shape[1]

    def subset(self, indices: Sequence[int] | "IndexSet") -> "SpectralLibrary":
        """Sub-library restricted to the given atoms, order preserved."""
        idx = list(indices)
        for i in idx:
            if not 0 <= int(i) < self.n_atoms:
                raise IndexOutOfRange(f"atom index {i} outside 0..{self.n_atoms - 1}")
        sel = [int(i) for i in idx]
        return SpectralLibrary(
            self.data[sel],
            tuple(self.names[i] for i in sel),
            self.wavelengths,
        )


@dataclass(frozen=True)
class ConstraintMode:
    """Which abundance constraints a matrix claims to satisfy."""

    nonneg: bool = False
    sum_to_one: bool = False


@dataclass(frozen=True, eq=False)
class AbundanceMatrix:
    """Per-pixel mixing coefficients, (N, K), with declared constraints.

    Declared constraints are verified at construction: nonnegativity up to
    1e-9 below zero, row sums within 1e-6 of one.
    """

    data: NDArrayF
    constraint_mode: ConstraintMode = ConstraintMode()

    def __post_init__(self) -> None:
        data = _frozen_f64(self.data, "abundance data")
        mode = self.constraint_mode
        if mode.nonneg and data.min(initial=0.0) < -NONNEG_SLACK:
            raise DimensionMismatch(
                f"abundances declared nonnegative but min is {data.min():.3e}"
            )
        if mode.sum_to_one:
            sums = data.sum(axis=1)
            worst = float(np.abs(sums - 1.0).max())
            if worst > SUM_TO_ONE_SLACK:
                raise DimensionMismatch(
                    f"abundances declared sum-to-one but worst row deviates by {worst:.3e}"
                )
        object.__setattr__(self, "data", data)

    @property
    def n_pixels(self) -> int:
        return self.data.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class IndexSet:
    """An ordered set of distinct library indices."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise IndexOutOfRange(f"negative index in {idx}")
        if len(set(idx)) != len(idx):
            raise IndexOutOfRange(f"duplicate indices in {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i: object) -> bool:
        return i in self.indices

    def check_bounds(self, n_atoms: int) -> None:
        for i in self.indices:
            if i >= n_atoms:
                raise IndexOutOfRange(f"index {i} outside 0..{n_atoms - 1}")


def validate_pair(cube: HsiCube, library: SpectralLibrary) -> None:
    """Raise DimensionMismatch unless cube and library share the band axis."""
    if cube.n_bands != library.n_bands:
        raise DimensionMismatch(
            f"cube has {cube.n_bands} bands, library has {library.n_bands}"
        )


def reconstruct(library: SpectralLibrary, abundances: AbundanceMatrix) -> HsiCube:
    """Mix abundances through the library: returns the (N, L) cube M @ D."""
    if abundances.n_atoms != library.n_atoms:
        raise DimensionMismatch(
            f"abundances cover {abundances.n_atoms} atoms, library has {library.n_atoms}"
        )
    return HsiCube(abundances.data @ library.data, wavelengths=library.wavelengths)
