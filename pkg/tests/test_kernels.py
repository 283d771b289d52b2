import numpy as np
import pytest

from stratnorm import kernels
from stratnorm.norms import strategy_norm
from stratnorm.strategies import InteractionShape

BACKENDS = kernels.available_backends()


def rand_herm(d, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.active_backend() in BACKENDS


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_use_backend_restores_previous():
    before = kernels.active_backend()
    with kernels.use_backend("python"):
        assert kernels.active_backend() == "python"
    assert kernels.active_backend() == before


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("d", [1, 2, 3, 8, 17])
def test_jacobi_contract(backend, d):
    h = rand_herm(d, d)
    with kernels.use_backend(backend):
        w, v, sweeps = kernels.jacobi_eigh(h)
    assert sweeps <= 100
    scale = np.linalg.norm(h, 2)
    assert np.linalg.norm(h - (v * w) @ v.conj().T, 2) <= 1e-10 * scale
    assert np.linalg.norm(v.conj().T @ v - np.eye(d), 2) <= 1e-10
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(h), atol=1e-12 * scale)


@pytest.mark.parametrize("backend", BACKENDS)
def test_jacobi_degenerate_and_diagonal(backend):
    with kernels.use_backend(backend):
        w, v, sweeps = kernels.jacobi_eigh(np.diag([3.0, 1.0, 1.0, -2.0]))
        assert sweeps == 0
        assert np.array_equal(np.sort(w), [-2.0, 1.0, 1.0, 3.0])
        w, _ = kernels.eigh(np.zeros((3, 3)))
        assert np.array_equal(w, np.zeros(3))


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernel not built")
def test_backends_agree():
    for seed in range(5):
        h = rand_herm(12, seed)
        with kernels.use_backend("python"):
            wp, _ = kernels.eigh(h)
        with kernels.use_backend("compiled"):
            wc, _ = kernels.eigh(h)
        assert np.abs(wp - wc).max() <= 1e-12 * np.abs(wp).max()


def test_solve_with_python_backend():
    shape = InteractionShape((2,), (1,))
    x = np.diag([0.5, -0.25])
    with kernels.use_backend("python"):
        res = strategy_norm(x, shape)
    assert res.value == pytest.approx(0.5, abs=1e-7)
