"""Backend selection for the numerical hot kernels.

The compiled Cython extension ``stratnorm._jacobi`` is used when it can be
imported; otherwise the pure-Python implementation in ``_jacobi_py`` is used.
:func:`use_backend` switches explicitly (benchmarks and tests compare both).
"""

from contextlib import contextmanager

from . import _jacobi_py

try:
    from . import _jacobi as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_BACKENDS = {"python": _jacobi_py.jacobi_eigh}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled.jacobi_eigh

_active = "compiled" if _compiled is not None else "python"


def available_backends():
    return tuple(sorted(_BACKENDS))


def active_backend():
    return _active


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; "
                         f"available: {available_backends()}")
    _active = name


@contextmanager
def use_backend(name):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def jacobi_eigh(h, rel_tol=1e-14, max_sweeps=100):
    """Unsorted ``(eigenvalues, eigenvectors, sweeps)`` from the active backend."""
    return _BACKENDS[_active](h, rel_tol, max_sweeps)


def eigh(h):
    """Eigenvalues in descending order and matching eigenvector columns."""
    w, v, _ = _BACKENDS[_active](h, 1e-14, 100)
    order = w.argsort()[::-1]
    return w[order], v[:, order]
