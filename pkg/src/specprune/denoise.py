"""Noise estimation by leave-one-band-out multiple linear regression.

Hyperspectral bands are strongly collinear, so each band is well predicted
by the remaining L-1 bands. The regression residual is taken as the noise
in that band; subtracting the stacked residuals from the cube gives the
denoised cube, an exact additive decomposition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import HsiCube, NDArrayF
from .errors import SingularRegression, SpecpruneError

__all__ = ["NoiseEstimate", "estimate_noise_mlr", "denoise"]


@dataclass(frozen=True, eq=False)
class NoiseEstimate:
    """Per-pixel noise matrix (N, L) and per-band sample deviations (L,)."""

    noise: NDArrayF
    band_sigma: tuple[float, ...]

    def __post_init__(self) -> None:
        noise = np.ascontiguousarray(self.noise, dtype=np.float64)
        if noise.ndim != 2 or len(self.band_sigma) != noise.shape[1]:
            raise SpecpruneError("band_sigma must hold one value per band")
        noise.setflags(write=False)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "band_sigma", tuple(float(s) for s in self.band_sigma))


def _default_ridge(r: NDArrayF) -> float:
    # scaled to the mean band energy so damping is unit free
    return 1e-6 * float(np.trace(r)) / r.shape[0]


def estimate_noise_mlr(cube: HsiCube, ridge: Optional[float] = None) -> NoiseEstimate:
    """Regress each band on all others; residuals are the noise estimate.

    ridge damps the normal equations (ridge * I added before solving);
    None picks 1e-6 * trace(X^T X) / L. With ridge = 0 a singular per-band
    normal matrix raises SingularRegression. Degenerate inputs (a single
    pixel, or an all-zero cube) pass through with zero noise and a warning.
    """
    if ridge is not None and not ridge >= 0.0:
        raise SpecpruneError(f"ridge must be >= 0, got {ridge}")
    x = cube.data
    n, l = x.shape
    if n == 1:
        warnings.warn("single-pixel cube: noise estimate is zero", stacklevel=2)
        return NoiseEstimate(np.zeros((n, l)), tuple([0.0] * l))
    if n < l:
        warnings.warn(
            f"fewer pixels ({n}) than bands ({l}): regression is underdetermined",
            stacklevel=2,
        )
    r = x.T @ x
    if float(np.trace(r)) == 0.0:
        warnings.warn("all-zero cube: noise estimate is zero", stacklevel=2)
        return NoiseEstimate(np.zeros((n, l)), tuple([0.0] * l))
    if ridge is None:
        ridge = _default_ridge(r)
    noise = np.empty((n, l))
    keep = np.ones(l, dtype=bool)
    beta_full = np.zeros(l)
    for i in range(l):
        keep[i] = False
        a = r[np.ix_(keep, keep)]
        if ridge > 0.0:
            a = a + ridge * np.eye(l - 1)
        b = r[keep, i]
        try:
            beta = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise SingularRegression(
                f"normal matrix for band {i} is singular and ridge is 0"
            ) from exc
        beta_full[:] = 0.0
        beta_full[keep] = beta
        noise[:, i] = x[:, i] - x @ beta_full
        keep[i] = True
    band_sigma = noise.std(axis=0, ddof=1)
    return NoiseEstimate(noise, tuple(float(s) for s in band_sigma))


def denoise(cube: HsiCube, ridge: Optional[float] = None) -> HsiCube:
    """Subtract the regression noise estimate from the cube.

    denoise(cube).data + estimate.noise reproduces cube.data exactly; shape
    metadata and wavelengths are preserved.
    """
    est = estimate_noise_mlr(cube, ridge=ridge)
    return HsiCube(
        cube.data - est.noise,
        wavelengths=cube.wavelengths,
        lines=cube.lines,
        samples=cube.samples,
    )
