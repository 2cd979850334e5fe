"""Synthetic scene generation with a fully documented random stream.

Reproducibility contract: every random quantity is derived from raw 64-bit
outputs of the Philox4x64-10 counter generator keyed directly with the user
seed. Derived draws use fixed, documented maps (see the PortableStream
docstrings and the README reproducibility section) rather than library
distribution routines, so the byte stream of a scene can be reproduced from
the seed in any language with a Philox implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .core import (
    AbundanceMatrix,
    ConstraintMode,
    HsiCube,
    IndexSet,
    NDArrayF,
    SpectralLibrary,
)
from .errors import DimensionMismatch, InfeasiblePurity, IndexOutOfRange, SpecpruneError
from .pruning import mutual_coherence

__all__ = [
    "SceneSpec",
    "SceneTruth",
    "PortableStream",
    "generate_abundances",
    "generate_scene",
    "generate_smooth_library",
]

# rejection attempts per abundance row before the deterministic fallback
MAX_REJECTIONS = 10_000
PURITY_SLACK = 1e-12


class PortableStream:
    """Documented sampling layer over Philox4x64-10 raw outputs.

    Maps, each consuming raw draws in sequence:
      * uniform in (0, 1): ((raw >> 11) + 0.5) * 2**-53,
      * exponential(1): -log(uniform),
      * standard normal: Phi^{-1}(uniform) (inverse normal CDF),
      * integer below m: raw % m, rejecting raw >= floor(2^64 / m) * m,
      * permutation of k: Fisher-Yates from the top index down.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= int(seed) < 2**64:
            raise SpecpruneError(f"seed must fit in 64 bits, got {seed}")
        self._bits = np.random.Philox(key=int(seed))

    def raw(self, n: int) -> np.ndarray:
        out = self._bits.random_raw(n)
        return np.atleast_1d(np.asarray(out, dtype=np.uint64))

    def uniform_open(self, n: int) -> NDArrayF:
        r = self.raw(n)
        return ((r >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def exponential(self, n: int) -> NDArrayF:
        return -np.log(self.uniform_open(n))

    def normal(self, n: int) -> NDArrayF:
        return ndtri(self.uniform_open(n))

    def randbelow(self, m: int) -> int:
        if m <= 0:
            raise SpecpruneError(f"randbelow needs m > 0, got {m}")
        limit = (2**64 // m) * m
        while True:
            r = int(self.raw(1)[0])
            if r < limit:
                return r % m

    def permutation(self, k: int) -> list[int]:
        out = list(range(k))
        for i in range(k - 1, 0, -1):
            j = self.randbelow(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene.

    max_purity caps the largest abundance coefficient per pixel and must be
    at least 1/n_endmembers for the simplex to contain a feasible point.
    snr_db None means noiseless. library_indices, when given, pins the
    active atoms instead of drawing them from the stream.
    """

    n_pixels: int
    n_endmembers: int
    max_purity: float = 1.0
    snr_db: Optional[float] = None
    seed: int = 0
    library_indices: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.n_pixels < 1:
            raise SpecpruneError(f"n_pixels must be >= 1, got {self.n_pixels}")
        if self.n_endmembers < 1:
            raise SpecpruneError(
                f"n_endmembers must be >= 1, got {self.n_endmembers}"
            )
        if not 0.0 < self.max_purity <= 1.0:
            raise SpecpruneError(f"max_purity must be in (0, 1], got {self.max_purity}")
        if self.max_purity < 1.0 / self.n_endmembers - PURITY_SLACK:
            raise InfeasiblePurity(
                f"infeasible purity: max_purity {self.max_purity} below "
                f"1/{self.n_endmembers}"
            )
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise SpecpruneError("snr_db must be finite or None")
        if self.library_indices is not None:
            idx = tuple(int(i) for i in self.library_indices)
            if len(idx) != self.n_endmembers:
                raise DimensionMismatch(
                    f"{len(idx)} pinned indices for {self.n_endmembers} endmembers"
                )
            object.__setattr__(self, "library_indices", idx)


@dataclass(frozen=True, eq=False)
class SceneTruth:
    """Ground truth for a generated scene."""

    indices: IndexSet
    abundances: AbundanceMatrix
    clean_cube: HsiCube
    noisy_cube: HsiCube
    spec: SceneSpec

    def __post_init__(self) -> None:
        if len(self.indices) != self.abundances.n_atoms:
            raise DimensionMismatch("one abundance column per active atom expected")
        worst = float(self.abundances.data.max())
        if worst > self.spec.max_purity + PURITY_SLACK:
            raise SpecpruneError(
                f"abundance {worst} exceeds max_purity {self.spec.max_purity}"
            )


def _abundance_rows(stream: PortableStream, n: int, p: int, max_purity: float) -> NDArrayF:
    """n rows drawn uniformly from the simplex, rejected above max_purity."""
    rows = np.empty((n, p))
    cap = max_purity + PURITY_SLACK
    for r in range(n):
        row = None
        for _ in range(MAX_REJECTIONS):
            e = stream.exponential(p)
            candidate = e / e.sum()
            if candidate.max() <= cap:
                row = candidate
                break
        if row is None:
            # deterministic fallback: pull the peak down to the cap and
            # spread the excess over the rest; repeat because the rescale
            # can push the runner-up over the cap when purity is near 1/p
            row = candidate
            for _ in range(100):
                if row.max() <= cap:
                    break
                j = int(np.argmax(row))
                rest = 1.0 - row[j]
                if rest <= 0.0:
                    row = np.full(p, 1.0 / p)
                    break
                scale = (1.0 - max_purity) / rest
                row = row * scale
                row[j] = max_purity
            else:
                row = np.full(p, 1.0 / p)
        rows[r] = row
    # exact renormalization; drift is at rounding level so the cap holds
    rows /= rows.sum(axis=1, keepdims=True)
    return rows


def generate_abundances(n: int, p: int, max_purity: float, seed: int) -> NDArrayF:
    """Uniform simplex abundances with a purity cap, (n, p).

    Rejection sampling row by row (up to 10000 attempts each) from
    exponential draws normalized to sum one; see PortableStream for the
    exact stream consumption.
    """
    if p < 1 or n < 1:
        raise SpecpruneError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if not 0.0 < max_purity <= 1.0:
        raise SpecpruneError(f"max_purity must be in (0, 1], got {max_purity}")
    if max_purity < 1.0 / p - PURITY_SLACK:
        raise InfeasiblePurity(
            f"infeasible purity: max_purity {max_purity} below 1/{p}"
        )
    return _abundance_rows(PortableStream(seed), n, p, max_purity)


def generate_scene(library: SpectralLibrary, spec: SceneSpec) -> SceneTruth:
    """Draw a scene from the library per spec; fully determined by spec.seed.

    Stream consumption order: active atom permutation (skipped when indices
    are pinned), abundance rows, then the noise matrix. noisy equals clean
    exactly when snr_db is None. Gaussian noise is rescaled after drawing so
    the realized SNR matches snr_db exactly.
    """
    k = library.n_atoms
    p = spec.n_endmembers
    if p > k:
        raise IndexOutOfRange(f"scene wants {p} endmembers from a {k}-atom library")
    stream = PortableStream(spec.seed)
    if spec.library_indices is not None:
        indices = IndexSet(spec.library_indices)
        indices.check_bounds(k)
    else:
        indices = IndexSet(tuple(stream.permutation(k)[:p]))
    a = _abundance_rows(stream, spec.n_pixels, p, spec.max_purity)
    clean = a @ library.data[list(indices)]
    if spec.snr_db is None:
        noisy = clean
    else:
        raw = stream.normal(spec.n_pixels * library.n_bands).reshape(
            spec.n_pixels, library.n_bands
        )
        clean_norm = float(np.linalg.norm(clean))
        raw_norm = float(np.linalg.norm(raw))
        scale = clean_norm / (raw_norm * 10.0 ** (spec.snr_db / 20.0))
        noisy = clean + scale * raw
    return SceneTruth(
        indices=indices,
        abundances=AbundanceMatrix(a, ConstraintMode(nonneg=True, sum_to_one=True)),
        clean_cube=HsiCube(clean, wavelengths=library.wavelengths),
        noisy_cube=HsiCube(noisy, wavelengths=library.wavelengths),
        spec=spec,
    )


def generate_smooth_library(
    k: int,
    n_bands: int,
    seed: int,
    max_coherence: float = 0.8,
) -> SpectralLibrary:
    """Gaussian-bump spectra with mutual coherence at most max_coherence.

    Bump centers are spread quasi-uniformly with seeded jitter; a shared
    width starts wide and shrinks geometrically until the coherence cap
    holds, so the result is deterministic in (k, n_bands, seed, cap).
    """
    if k < 2:
        raise SpecpruneError(f"need at least 2 atoms, got {k}")
    if n_bands < 2 * k:
        raise SpecpruneError(
            f"need n_bands >= 2k for separable bumps, got {n_bands} < {2 * k}"
        )
    if not 0.0 < max_coherence < 1.0:
        raise SpecpruneError(f"max_coherence must be in (0, 1), got {max_coherence}")
    stream = PortableStream(seed)
    spacing = n_bands / k
    jitter = (stream.uniform_open(k) - 0.5) * 0.4 * spacing
    centers = (np.arange(k) + 0.5) * spacing + jitter
    amplitudes = 0.6 + 0.8 * stream.uniform_open(k)
    grid = np.arange(n_bands, dtype=np.float64)
    width = 1.2 * spacing
    for _ in range(200):
        rows = np.exp(-((grid[None, :] - centers[:, None]) ** 2) / (2.0 * width**2))
        rows = rows * amplitudes[:, None]
        lib = SpectralLibrary(
            rows,
            tuple(f"atom_{i:03d}" for i in range(k)),
            tuple(400.0 + 2100.0 * b / (n_bands - 1) for b in range(n_bands)),
        )
        if mutual_coherence(lib) <= max_coherence:
            return lib
        width *= 0.85
    raise SpecpruneError(
        f"could not reach coherence {max_coherence} with {k} atoms over {n_bands} bands"
    )
