"""Numpy implementation of the fused ADMM elementwise update.

Semantically identical to the compiled twin in _kernels.pyx; the only
permitted difference is floating point summation order in the three
reductions, so the z and u buffers must match the compiled path bitwise.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def admm_elementwise_step(a, u, z, tau, nonneg):
    """One fused proximal/dual update, in place.

    Computes z_new = shrink(a + u, tau) (clamped at zero when nonneg),
    then u += a - z_new, writing z_new into z. Returns the tuple
    (sum (a - z_new)^2, sum (z_new - z_old)^2, sum |z_new|).
    """
    v = a + u
    if nonneg:
        # positive shrinkage branch only: max(v - tau, 0)
        z_new = v - tau
        np.maximum(z_new, 0.0, out=z_new)
    else:
        # max(v-tau,0) + min(v+tau,0): exactly one side is nonzero, so this
        # matches the branchy compiled form bitwise (no -0.0 artifacts)
        z_new = np.maximum(v - tau, 0.0)
        z_new += np.minimum(v + tau, 0.0)
    d = a - z_new
    primal_sq = float(np.dot(d.ravel(), d.ravel()))
    e = z_new - z
    dual_sq = float(np.dot(e.ravel(), e.ravel()))
    l1 = float(np.abs(z_new).sum())
    u += d
    z[...] = z_new
    return primal_sq, dual_sq, l1
