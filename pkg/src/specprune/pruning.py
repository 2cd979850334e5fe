"""Library pruning by nuclear-norm-difference scoring, plus an OMP baseline.

The main routine scores each library atom by how little the nuclear norm of
the abundance matrix grows when that atom is offered to the solver as one
extra pixel. Atoms already active in the scene land inside the span of the
existing abundances, so appending them barely moves the singular values;
foreign atoms open a new direction and pay a full singular value. Scores are
base minus appended norm (always <= 0 up to solver tolerance), and the p
largest are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    AbundanceMatrix,
    HsiCube,
    IndexSet,
    NDArrayF,
    SpectralLibrary,
    validate_pair,
)
from .errors import InvalidP, NonFiniteData, SpecpruneError
from .solver import SolveDiagnostics, SolverConfig, _admm, _augment, _finalize, default_lambda, default_rho

__all__ = [
    "PruneResult",
    "nuclear_norm",
    "mutual_coherence",
    "prune_nnd",
    "omp_prune",
]


@dataclass(frozen=True)
class PruneResult:
    """Scores for every atom plus the selected subset.

    scores has length K. For the nuclear-norm path all scores are finite and
    base_nuclear_norm is the norm of the unappended solve. For the OMP path
    scores rank selected atoms (K for the first pick, descending) and are
    NaN for atoms never selected; base_nuclear_norm is NaN. NaN serializes
    to null in reports.
    """

    scores: tuple[float, ...]
    selected: IndexSet
    base_nuclear_norm: float
    per_atom_diagnostics: tuple[SolveDiagnostics, ...]
    algorithm: str = "nnd"

    def __post_init__(self) -> None:
        if self.algorithm == "nnd":
            if any(not math.isfinite(s) for s in self.scores):
                raise NonFiniteData("nnd scores must be finite")
            if len(self.per_atom_diagnostics) != len(self.scores):
                raise SpecpruneError("one diagnostics record per atom expected")
        if len(self.selected) > len(self.scores):
            raise InvalidP(
                f"{len(self.selected)} selections from {len(self.scores)} atoms"
            )
        self.selected.check_bounds(len(self.scores))


def nuclear_norm(m) -> float:
    """Sum of singular values of a real matrix.

    Computed from the eigenvalues of the smaller Gram matrix (m^T m or
    m m^T). Eigenvalues below the rank tolerance max(shape)*eps*eig_max
    are numerically zero and clamped before the square root; without the
    clamp their rounding noise would be amplified by the square root on
    rank-deficient inputs. Cost is one symmetric eigendecomposition of
    the smaller side.
    """
    if isinstance(m, AbundanceMatrix):
        m = m.data
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise SpecpruneError(f"nuclear_norm expects a matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteData("nuclear_norm input has non-finite entries")
    if arr.shape[0] >= arr.shape[1]:
        gram = arr.T @ arr
    else:
        gram = arr @ arr.T
    eigs = np.linalg.eigvalsh(gram)
    tol = max(arr.shape) * np.finfo(np.float64).eps * max(float(eigs[-1]), 0.0)
    eigs = np.where(eigs > tol, eigs, 0.0)
    return float(np.sqrt(eigs).sum())


def mutual_coherence(library) -> float:
    """Largest |cos angle| between two distinct atoms (rows), in [0, 1].

    Accepts a SpectralLibrary or a plain atoms-by-bands array.
    """
    d = library.data if isinstance(library, SpectralLibrary) else np.asarray(library, dtype=np.float64)
    norms = np.linalg.norm(d, axis=1, keepdims=True)
    g = (d / norms) @ (d / norms).T
    np.fill_diagonal(g, 0.0)
    return float(np.abs(g).max())


def _rank_by_score(scores: NDArrayF, p: int, score_order: str) -> list[int]:
    """Indices of the p best scores; ties break toward the lower index."""
    if score_order == "max":
        order = np.lexsort((np.arange(len(scores)), -scores))
    elif score_order == "min":
        order = np.lexsort((np.arange(len(scores)), scores))
    else:
        raise SpecpruneError(f"score_order must be 'max' or 'min', got {score_order!r}")
    return [int(i) for i in order[:p]]


def prune_nnd(
    cube: HsiCube,
    library: SpectralLibrary,
    p: int,
    config: SolverConfig = SolverConfig(),
    score_order: str = "max",
) -> PruneResult:
    """Score every atom by appended-solve nuclear norm change, keep the best p.

    One base solve produces M and its nuclear norm; then each atom d_i is
    appended to the cube as an extra pixel, the solve is repeated warm
    started from M padded with a zero row (dual state carried over, which
    does not move the fixed point), and the score is
    base - ||appended solve||_*. The sparsity weight is resolved once on the
    base cube and shared by all appended solves. The per-atom solves are
    independent; run sequentially here so results never depend on schedule.
    """
    validate_pair(cube, library)
    k = library.n_atoms
    if not 1 <= p <= k:
        raise InvalidP(f"p must be in 1..{k}, got {p}")
    lam = config.lam if config.lam is not None else default_lambda(cube, library)
    rho = config.rho if config.rho is not None else default_rho(lam)
    x = cube.data
    d = library.data
    if config.sum_to_one:
        x, d = _augment(x, d)
    gram = d @ d.T
    gram_inv = np.linalg.inv(2.0 * gram + rho * np.eye(k))
    corr = x @ d.T
    x_sq = float(np.dot(x.ravel(), x.ravel()))
    admm_kwargs = dict(
        lam=lam,
        rho=rho,
        max_iter=config.max_iter,
        tol_primal=config.tol_primal,
        tol_dual=config.tol_dual,
        nonneg=config.nonneg,
    )
    z0 = config.warm_start.data if config.warm_start is not None else None
    z_base, u_base, _ = _admm(corr, gram, gram_inv, x_sq, z0=z0, **admm_kwargs)
    m_base = _finalize(z_base, config.nonneg, config.sum_to_one)
    base_nn = nuclear_norm(m_base.data)

    zero_row = np.zeros((1, k))
    scores = np.empty(k)
    diagnostics: list[SolveDiagnostics] = []
    for i in range(k):
        corr_i = np.vstack([corr, gram[i : i + 1]])
        x_sq_i = x_sq + float(gram[i, i])
        z0_i = np.vstack([m_base.data, zero_row])
        u0_i = np.vstack([u_base, zero_row])
        z_i, _, diag_i = _admm(
            corr_i, gram, gram_inv, x_sq_i, z0=z0_i, u0=u0_i, **admm_kwargs
        )
        m_i = _finalize(z_i, config.nonneg, config.sum_to_one)
        scores[i] = base_nn - nuclear_norm(m_i.data)
        diagnostics.append(diag_i)

    selected = _rank_by_score(scores, p, score_order)
    return PruneResult(
        scores=tuple(float(s) for s in scores),
        selected=IndexSet(tuple(selected)),
        base_nuclear_norm=base_nn,
        per_atom_diagnostics=tuple(diagnostics),
        algorithm="nnd",
    )


def omp_prune(
    cube: HsiCube,
    library: SpectralLibrary,
    p: int,
    residual_tol: float = 1e-4,
) -> PruneResult:
    """Greedy baseline: pick atoms by aggregate correlation with the residual.

    Each round selects the atom maximizing ||R d_i^T||_2 over unit-normalized
    atoms, refits the selected set by least squares, and updates the residual.
    Stops after p atoms, when ||R||_F / ||X||_F <= residual_tol, or when the
    relative residual decrease falls below 1e-6; may return fewer than p
    atoms. Scores encode selection order (K first, K-1 next, ...), NaN for
    unselected atoms.
    """
    validate_pair(cube, library)
    k = library.n_atoms
    if not 1 <= p <= k:
        raise InvalidP(f"p must be in 1..{k}, got {p}")
    if not residual_tol >= 0.0:
        raise SpecpruneError(f"residual_tol must be >= 0, got {residual_tol}")
    x = cube.data
    d = library.data
    d_unit = d / np.linalg.norm(d, axis=1, keepdims=True)
    x_norm = float(np.linalg.norm(x))
    scores = np.full(k, np.nan)
    chosen: list[int] = []
    residual = x.copy()
    prev_norm = x_norm
    if x_norm == 0.0:
        return PruneResult(
            scores=tuple(scores),
            selected=IndexSet(()),
            base_nuclear_norm=float("nan"),
            per_atom_diagnostics=(),
            algorithm="omp",
        )
    for round_idx in range(p):
        if float(np.linalg.norm(residual)) / x_norm <= residual_tol:
            break
        corr = np.linalg.norm(residual @ d_unit.T, axis=0)
        corr[chosen] = -np.inf
        pick = int(np.argmax(corr))
        chosen.append(pick)
        scores[pick] = float(k - round_idx)
        sub = d[chosen]
        coef, *_ = np.linalg.lstsq(sub.T, x.T, rcond=None)
        residual = x - coef.T @ sub
        cur_norm = float(np.linalg.norm(residual))
        if prev_norm > 0.0 and (prev_norm - cur_norm) / prev_norm < 1e-6:
            break
        prev_norm = cur_norm
    return PruneResult(
        scores=tuple(scores),
        selected=IndexSet(tuple(chosen)),
        base_nuclear_norm=float("nan"),
        per_atom_diagnostics=(),
        algorithm="omp",
    )
