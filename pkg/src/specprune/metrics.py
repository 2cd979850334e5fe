"""Quality metrics: spectral angles, reconstruction error, detection rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import HsiCube, SpectralLibrary
from .errors import DimensionMismatch, EmptyTrials, NonFiniteData, SpecpruneError, ZeroNormAtom

__all__ = ["sad", "asad", "sre", "detection_probability", "EvalReport"]


@dataclass(frozen=True)
class EvalReport:
    """Bundle of evaluation numbers for one pruning run.

    sre_db is None when not applicable, math.inf is represented by None
    plus sre_exact=True in serialized form (see io.save_report).
    """

    asad: Optional[float] = None
    sre_db: Optional[float] = None
    detection: Optional[float] = None
    per_endmember_sad: tuple[float, ...] = ()


def _as_signature(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).ravel()
    if not np.isfinite(arr).all():
        raise NonFiniteData("signature has non-finite entries")
    return arr


def sad(s1, s2) -> float:
    """Spectral angle between two signatures, radians in [0, pi]."""
    a = _as_signature(s1)
    b = _as_signature(s2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"signature lengths differ: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormAtom("sad needs nonzero signatures")
    c = float(np.dot(a, b)) / (na * nb)
    return float(np.arccos(min(1.0, max(-1.0, c))))


def _as_matrix(lib) -> np.ndarray:
    if isinstance(lib, SpectralLibrary):
        return lib.data
    arr = np.asarray(lib, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected signatures as rows, got shape {arr.shape}")
    return arr


def asad(true_sigs, est_sigs) -> tuple[float, tuple[tuple[int, int], ...]]:
    """Average spectral angle under greedy one-to-one matching.

    Pairs are matched smallest angle first without replacement; true
    signatures left unmatched contribute pi/2 each. The average divides by
    the number of true signatures. Returns (value, matching) where matching
    holds (true_index, est_index) pairs.
    """
    t = _as_matrix(true_sigs)
    e = _as_matrix(est_sigs)
    if t.shape[0] == 0:
        raise SpecpruneError("asad needs at least one true signature")
    if t.shape[1] != e.shape[1]:
        raise DimensionMismatch(
            f"band counts differ: {t.shape[1]} vs {e.shape[1]}"
        )
    n_true = t.shape[0]
    n_est = e.shape[0]
    angles = np.empty((n_true, n_est))
    for i in range(n_true):
        for j in range(n_est):
            angles[i, j] = sad(t[i], e[j])
    pairs: list[tuple[int, int]] = []
    total = 0.0
    free_t = set(range(n_true))
    free_e = set(range(n_est))
    while free_t and free_e:
        best = min(
            ((angles[i, j], i, j) for i in sorted(free_t) for j in sorted(free_e)),
            key=lambda rec: (rec[0], rec[1], rec[2]),
        )
        total += best[0]
        pairs.append((best[1], best[2]))
        free_t.discard(best[1])
        free_e.discard(best[2])
    total += (math.pi / 2.0) * len(free_t)
    return total / n_true, tuple(pairs)


def sre(reference, estimate) -> float:
    """Signal to reconstruction error, 10*log10(||X||_F / ||X - Xhat||_F) dB.

    Returns math.inf for an exact reconstruction; serialization maps that to
    null plus an exactness flag.
    """
    x = reference.data if isinstance(reference, HsiCube) else np.asarray(reference, dtype=np.float64)
    xh = estimate.data if isinstance(estimate, HsiCube) else np.asarray(estimate, dtype=np.float64)
    if x.shape != xh.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {xh.shape}")
    if not (np.isfinite(x).all() and np.isfinite(xh).all()):
        raise NonFiniteData("sre inputs must be finite")
    err = float(np.linalg.norm(x - xh))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.linalg.norm(x)) / err)


def detection_probability(
    true_sets: Sequence, est_sets: Sequence
) -> float:
    """Fraction of trials whose true index set is contained in the estimate."""
    if len(true_sets) != len(est_sets):
        raise DimensionMismatch(
            f"{len(true_sets)} true sets vs {len(est_sets)} estimates"
        )
    if len(true_sets) == 0:
        raise EmptyTrials("need at least one trial")
    hits = sum(
        1 for t, e in zip(true_sets, est_sets) if set(t).issubset(set(e))
    )
    return hits / len(true_sets)
