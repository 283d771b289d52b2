# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic Jacobi eigensolver for complex Hermitian matrices.

Matrices are handled through a float64 view with interleaved real and
imaginary parts so every rotation is plain real arithmetic.
"""

import numpy as np

from libc.math cimport sqrt, fabs, hypot


cdef inline void _rot(double[:, ::1] m, Py_ssize_t n, Py_ssize_t p, Py_ssize_t q,
                      double c, double s, double er, double ei) noexcept nogil:
    # columns p, q of m <- (c x - s conj(e) y, s x + c conj(e) y)
    cdef Py_ssize_t k
    cdef double xr, xi, yr, yi, zr, zi
    for k in range(n):
        xr = m[k, 2 * p]
        xi = m[k, 2 * p + 1]
        yr = m[k, 2 * q]
        yi = m[k, 2 * q + 1]
        zr = er * yr + ei * yi
        zi = er * yi - ei * yr
        m[k, 2 * p] = c * xr - s * zr
        m[k, 2 * p + 1] = c * xi - s * zi
        m[k, 2 * q] = s * xr + c * zr
        m[k, 2 * q + 1] = s * xi + c * zi


def jacobi_eigh(h, double rel_tol=1e-14, int max_sweeps=100):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(w, v, sweeps)`` with unsorted real eigenvalues ``w`` and the
    unitary ``v`` whose columns are the matching eigenvectors.
    """
    a_np = np.array(h, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a_np.shape[0]
    v_np = np.eye(n, dtype=np.complex128)
    cdef double[:, ::1] a = a_np.view(np.float64)
    cdef double[:, ::1] v = v_np.view(np.float64)
    cdef Py_ssize_t p, q, k, i, j
    cdef int sweep = 0
    cdef double frob = 0.0, off, limit, g, app, aqq, theta, t, c, s, er, ei
    cdef double xr, xi, yr, yi, zr, zi, thresh

    with nogil:
        for i in range(n):
            for j in range(2 * n):
                frob += a[i, j] * a[i, j]
        limit = (rel_tol * rel_tol) * frob
        while sweep < max_sweeps:
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += a[i, 2 * j] * a[i, 2 * j] + a[i, 2 * j + 1] * a[i, 2 * j + 1]
            if off <= limit:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    g = hypot(a[p, 2 * q], a[p, 2 * q + 1])
                    if g == 0.0:
                        continue
                    app = a[p, 2 * p]
                    aqq = a[q, 2 * q]
                    thresh = 100.0 * g
                    if sweep > 4 and fabs(app) + thresh == fabs(app) \
                            and fabs(aqq) + thresh == fabs(aqq):
                        a[p, 2 * q] = 0.0
                        a[p, 2 * q + 1] = 0.0
                        a[q, 2 * p] = 0.0
                        a[q, 2 * p + 1] = 0.0
                        continue
                    er = a[p, 2 * q] / g
                    ei = a[p, 2 * q + 1] / g
                    theta = (aqq - app) / (2.0 * g)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    _rot(a, n, p, q, c, s, er, ei)
                    # rows p, q <- (c x - s e y, s x + c e y)
                    for k in range(n):
                        xr = a[p, 2 * k]
                        xi = a[p, 2 * k + 1]
                        yr = a[q, 2 * k]
                        yi = a[q, 2 * k + 1]
                        zr = er * yr - ei * yi
                        zi = er * yi + ei * yr
                        a[p, 2 * k] = c * xr - s * zr
                        a[p, 2 * k + 1] = c * xi - s * zi
                        a[q, 2 * k] = s * xr + c * zr
                        a[q, 2 * k + 1] = s * xi + c * zi
                    a[p, 2 * q] = 0.0
                    a[p, 2 * q + 1] = 0.0
                    a[q, 2 * p] = 0.0
                    a[q, 2 * p + 1] = 0.0
                    a[p, 2 * p] = app - t * g
                    a[p, 2 * p + 1] = 0.0
                    a[q, 2 * q] = aqq + t * g
                    a[q, 2 * q + 1] = 0.0
                    _rot(v, n, p, q, c, s, er, ei)

    w = np.real(np.diagonal(a_np)).copy()
    return w, v_np, sweep
