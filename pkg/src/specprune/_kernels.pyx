# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled twin of _kernels_py.admm_elementwise_step.

One pass over the iterate fuses the shrinkage, the dual update and the
three reductions that the solver needs each iteration, avoiding the
temporaries the numpy path allocates.
"""

from libc.math cimport fabs

BACKEND_NAME = "compiled"


def admm_elementwise_step(double[:, ::1] a, double[:, ::1] u, double[:, ::1] z,
                          double tau, bint nonneg):
    """One fused proximal/dual update, in place. See _kernels_py for the contract."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double v, zn, zo, d
    cdef double primal_sq = 0.0
    cdef double dual_sq = 0.0
    cdef double l1 = 0.0
    if u.shape[0] != n or u.shape[1] != k or z.shape[0] != n or z.shape[1] != k:
        raise ValueError("a, u, z must share one shape")
    with nogil:
        for i in range(n):
            for j in range(k):
                v = a[i, j] + u[i, j]
                if nonneg:
                    zn = v - tau
                    if zn < 0.0:
                        zn = 0.0
                else:
                    if v > tau:
                        zn = v - tau
                    elif v < -tau:
                        zn = v + tau
                    else:
                        zn = 0.0
                zo = z[i, j]
                d = a[i, j] - zn
                primal_sq += d * d
                dual_sq += (zn - zo) * (zn - zo)
                l1 += fabs(zn)
                u[i, j] += d
                z[i, j] = zn
    return primal_sq, dual_sq, l1
