"""Sparse abundance estimation by ADMM.

Solves, per cube,

    minimize_M  ||X - M D||_F^2 + lambda * ||M||_1

optionally subject to nonnegativity and row sums of one. The problem is
separable across pixels; the solver iterates the whole matrix at once so a
single K x K factorization is shared by every pixel.

Splitting: with Z the shrunk copy of M and U the scaled dual,

    A <- (2 X D^T + rho (Z - U)) (2 D D^T + rho I)^{-1}
    Z <- shrink(A + U, lambda / rho)        (clamped at zero when nonneg)
    U <- U + A - Z

The sum-to-one constraint is handled by appending a constant pseudo-band
(value DELTA_ASC) to the data and to every atom, which penalizes row-sum
deviation inside the same quadratic term; the returned matrix is then
projected exactly onto the constraint set so declared constraints hold to
tight tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import AbundanceMatrix, ConstraintMode, HsiCube, NDArrayF, SpectralLibrary, validate_pair
from .errors import DimensionMismatch, NonFiniteIterate, SpecpruneError

__all__ = [
    "SolverConfig",
    "SolveDiagnostics",
    "soft_threshold",
    "default_lambda",
    "default_rho",
    "sunsal",
    "DELTA_ASC",
]

# weight of the appended pseudo-band enforcing row sums
DELTA_ASC = 10.0
# absolute floor for the ADMM penalty parameter, and the smaller value
# used when lam = 0 (pure least squares)
RHO_FLOOR = 1e-3
RHO_FLOOR_LSQ = 1e-4
# iterate magnitude beyond which the solve is declared divergent
DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one sunsal call.

    lam None means the data-scaled default 1e-3 * max |X d_i^T|; rho None
    means max(0.1 * lam, 1e-3). Tolerances are on residual norms divided by
    sqrt(N*K). warm_start, when given, seeds the split variable.
    """

    lam: Optional[float] = None
    rho: Optional[float] = None
    max_iter: int = 1000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    nonneg: bool = True
    sum_to_one: bool = False
    warm_start: Optional[AbundanceMatrix] = None

    def __post_init__(self) -> None:
        if self.lam is not None and not self.lam >= 0.0:
            raise SpecpruneError(f"lam must be >= 0, got {self.lam}")
        if self.rho is not None and not self.rho > 0.0:
            raise SpecpruneError(f"rho must be > 0, got {self.rho}")
        if self.max_iter < 1:
            raise SpecpruneError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol_primal > 0.0 or not self.tol_dual > 0.0:
            raise SpecpruneError("tolerances must be positive")


@dataclass(frozen=True)
class SolveDiagnostics:
    """What one solve did: iteration count, final residuals, objective path."""

    iterations: int
    final_primal_residual: float
    final_dual_residual: float
    objective_trace: tuple[float, ...]
    converged: bool

    def __post_init__(self) -> None:
        if len(self.objective_trace) != self.iterations:
            raise SpecpruneError(
                f"objective trace has {len(self.objective_trace)} entries "
                f"for {self.iterations} iterations"
            )


def soft_threshold(v, tau):
    """Shrink v toward zero by tau: sign(v) * max(|v| - tau, 0).

    Accepts scalars or arrays; tau must be nonnegative.
    """
    if np.any(np.asarray(tau) < 0):
        raise SpecpruneError(f"tau must be >= 0, got {tau}")
    v_arr = np.asarray(v, dtype=np.float64)
    out = np.maximum(v_arr - tau, 0.0) + np.minimum(v_arr + tau, 0.0)
    if np.isscalar(v) or v_arr.ndim == 0:
        return float(out)
    return out


def default_lambda(cube: HsiCube, library: SpectralLibrary) -> float:
    """Data-scaled sparsity weight: 1e-3 * max_{n,i} |x_n . d_i|."""
    validate_pair(cube, library)
    return 1e-3 * float(np.abs(cube.data @ library.data.T).max())


def default_rho(lam: float) -> float:
    """Penalty parameter tied to the sparsity weight.

    0.1 * lam floored at 1e-3; the pure least-squares case lam = 0 uses
    1e-4, where smaller rho converges faster.
    """
    if lam == 0.0:
        return RHO_FLOOR_LSQ
    return max(0.1 * lam, RHO_FLOOR)


def _project_rows_sum_to_one(m: NDArrayF, nonneg: bool) -> NDArrayF:
    """Exact Euclidean projection of each row onto the sum-to-one set."""
    if not nonneg:
        k = m.shape[1]
        return m + (1.0 - m.sum(axis=1, keepdims=True)) / k
    # simplex projection (sort based), vectorized over rows
    k = m.shape[1]
    s = np.sort(m, axis=1)[:, ::-1]
    cs = np.cumsum(s, axis=1) - 1.0
    j = np.arange(1, k + 1, dtype=np.float64)
    feasible = s - cs / j > 0.0
    last = k - np.argmax(feasible[:, ::-1], axis=1) - 1
    theta = cs[np.arange(m.shape[0]), last] / (last + 1.0)
    return np.maximum(m - theta[:, None], 0.0)


def _admm(
    corr: NDArrayF,
    gram: NDArrayF,
    gram_inv: NDArrayF,
    x_sq: float,
    *,
    lam: float,
    rho: float,
    max_iter: int,
    tol_primal: float,
    tol_dual: float,
    nonneg: bool,
    z0: Optional[NDArrayF] = None,
    u0: Optional[NDArrayF] = None,
) -> tuple[NDArrayF, NDArrayF, SolveDiagnostics]:
    """Iterate on precomputed pieces. corr is X D^T (N x K), gram is D D^T.

    Returns (z, u, diagnostics). z is the shrunk iterate, exactly sparse and
    feasible for the nonneg flag.
    """
    n, k = corr.shape
    z = np.zeros((n, k)) if z0 is None else np.array(z0, dtype=np.float64)
    u = np.zeros((n, k)) if u0 is None else np.array(u0, dtype=np.float64)
    if z.shape != (n, k) or u.shape != (n, k):
        raise DimensionMismatch(f"warm start shape {z.shape} does not match ({n}, {k})")
    scale = float(np.sqrt(n * k))
    tau = lam / rho
    corr2 = 2.0 * corr
    trace: list[float] = []
    a = np.empty((n, k))
    rhs = np.empty((n, k))
    r_primal = np.inf
    r_dual = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        np.subtract(z, u, out=rhs)
        rhs *= rho
        rhs += corr2
        np.dot(rhs, gram_inv, out=a)
        peak = float(np.abs(a).max())
        if not peak <= DIVERGENCE_CAP:
            raise NonFiniteIterate(
                f"iterate magnitude {peak:.3e} exceeded {DIVERGENCE_CAP:.0e} "
                f"at iteration {iterations}"
            )
        primal_sq, dual_sq, l1 = kernels.admm_elementwise_step(a, u, z, tau, nonneg)
        quad = x_sq - 2.0 * float(np.dot(z.ravel(), corr.ravel()))
        quad += float(np.dot(z.ravel(), (z @ gram).ravel()))
        trace.append(quad + lam * l1)
        r_primal = np.sqrt(primal_sq) / scale
        # iterate-change criterion, not scaled by rho: with rho floored at
        # 1e-3 the scaled version stops two decades short on lam=0 solves
        r_dual = np.sqrt(dual_sq) / scale
        if r_primal < tol_primal and r_dual < tol_dual:
            converged = True
            break
    diag = SolveDiagnostics(
        iterations=iterations,
        final_primal_residual=float(r_primal),
        final_dual_residual=float(r_dual),
        objective_trace=tuple(trace),
        converged=converged,
    )
    return z, u, diag


def _augment(x: NDArrayF, d: NDArrayF) -> tuple[NDArrayF, NDArrayF]:
    """Append the constant sum-to-one pseudo-band to data and atoms."""
    n = x.shape[0]
    k = d.shape[0]
    xa = np.hstack([x, np.full((n, 1), DELTA_ASC)])
    da = np.hstack([d, np.full((k, 1), DELTA_ASC)])
    return xa, da


def _finalize(z: NDArrayF, nonneg: bool, sum_to_one: bool) -> AbundanceMatrix:
    m = _project_rows_sum_to_one(z, nonneg) if sum_to_one else z
    return AbundanceMatrix(m, ConstraintMode(nonneg=nonneg, sum_to_one=sum_to_one))


def sunsal(
    cube: HsiCube,
    library: SpectralLibrary,
    config: SolverConfig = SolverConfig(),
) -> tuple[AbundanceMatrix, SolveDiagnostics]:
    """Estimate abundances for every pixel of cube against library.

    Returns the abundance matrix and per-solve diagnostics. Warm starts
    change the path, not the fixed point: warm and cold solves agree to
    within a small multiple of the tolerance.
    """
    validate_pair(cube, library)
    lam = config.lam if config.lam is not None else default_lambda(cube, library)
    rho = config.rho if config.rho is not None else default_rho(lam)
    x = cube.data
    d = library.data
    if config.sum_to_one:
        x, d = _augment(x, d)
    gram = d @ d.T
    gram_inv = np.linalg.inv(2.0 * gram + rho * np.eye(d.shape[0]))
    corr = x @ d.T
    x_sq = float(np.dot(x.ravel(), x.ravel()))
    z0 = None
    if config.warm_start is not None:
        ws = config.warm_start.data
        if ws.shape != (cube.n_pixels, library.n_atoms):
            raise DimensionMismatch(
                f"warm start shape {ws.shape} does not match "
                f"({cube.n_pixels}, {library.n_atoms})"
            )
        z0 = ws
    z, _, diag = _admm(
        corr,
        gram,
        gram_inv,
        x_sq,
        lam=lam,
        rho=rho,
        max_iter=config.max_iter,
        tol_primal=config.tol_primal,
        tol_dual=config.tol_dual,
        nonneg=config.nonneg,
        z0=z0,
    )
    return _finalize(z, config.nonneg, config.sum_to_one), diag
