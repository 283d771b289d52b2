"""Pure-Python cyclic Jacobi eigensolver (fallback for the compiled kernel)."""

import math

import numpy as np


def jacobi_eigh(h, rel_tol=1e-14, max_sweeps=100):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Same contract as the compiled ``stratnorm._jacobi.jacobi_eigh``: returns
    ``(w, v, sweeps)`` with unsorted eigenvalues ``w`` and unitary ``v``.
    """
    a = np.array(h, dtype=np.complex128, order="C", copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    limit = rel_tol * rel_tol * float(np.vdot(a, a).real)
    off_mask = ~np.eye(n, dtype=bool)

    sweep = 0
    while sweep < max_sweeps:
        off = a[off_mask]
        if float(np.vdot(off, off).real) <= limit:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                thresh = 100.0 * g
                if sweep > 4 and abs(app) + thresh == abs(app) and abs(aqq) + thresh == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                e = apq / g
                ce = e.conjugate()
                theta = (aqq - app) / (2.0 * g)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                x = a[:, p].copy()
                y = a[:, q].copy()
                a[:, p] = c * x - s * ce * y
                a[:, q] = s * x + c * ce * y
                x = a[p, :].copy()
                y = a[q, :].copy()
                a[p, :] = c * x - s * e * y
                a[q, :] = s * x + c * e * y
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * g
                a[q, q] = aqq + t * g
                x = v[:, p].copy()
                y = v[:, q].copy()
                v[:, p] = c * x - s * ce * y
                v[:, q] = s * x + c * ce * y

    return np.real(np.diagonal(a)).copy(), v, sweep
