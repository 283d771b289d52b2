import numpy as np
import pytest

from stratnorm.linalg import LabeledOperator
from stratnorm.norms import build_dual_norm_triple, build_primal_triple
from stratnorm.sdp import (
    BlockOperator,
    BlockStructure,
    SdpTriple,
    SolverOptions,
    check_adjoint,
    hmat,
    hvec,
    solve,
    verify_certificates,
)
from stratnorm.strategies import InteractionShape, random_hermitian

ONE = BlockStructure((("P", 2),))


def identity_triple(a, b=None):
    """maximize <a, P> subject to P <= b (identity map)."""
    b = np.eye(2) if b is None else b
    dual = BlockStructure((("Q", 2),))
    A = BlockOperator.from_matrices(ONE, [a])
    B = BlockOperator.from_matrices(dual, [b])

    def psi(p):
        return BlockOperator.from_matrices(dual, p.matrices())

    def psi_adj(q):
        return BlockOperator.from_matrices(ONE, q.matrices())

    return SdpTriple(ONE, dual, A, B, psi, psi_adj)


def toy_triple(seed):
    """Two blocks and a scalar: maximize <A, P> with P1 + P2/2 <= B, tr P1 <= 1."""
    rng = np.random.default_rng(seed)
    ps = BlockStructure((("P1", 2), ("P2", 2)))
    ds = BlockStructure((("Q", 2), ("t", 1)))
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    A = BlockOperator.from_matrices(ps, [0.5 * (g + g.conj().T), np.diag([1.0, -0.3])])
    B = BlockOperator.from_matrices(ds, [np.diag([1.0, 2.0]), np.array([[1.0]])])

    def psi(p):
        m1, m2 = p.matrices()
        return BlockOperator.from_matrices(ds, [m1 + 0.5 * m2, np.array([[np.trace(m1)]])])

    def psi_adj(q):
        mq, mt = q.matrices()
        return BlockOperator.from_matrices(ps, [mq + mt[0, 0] * np.eye(2), 0.5 * mq])

    return SdpTriple(ps, ds, A, B, psi, psi_adj)


def test_block_structure_scalar_and_labels():
    s = BlockStructure((("a", 3), ("p", 1)))
    assert s.dims == (3, 1)
    assert s.factors("p") == ()
    with pytest.raises(ValueError):
        BlockStructure((("a", 2), ("a", 2)))


def test_hvec_roundtrip():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = 0.5 * (g + g.conj().T)
    v = hvec(h)
    assert v.shape == (16,)
    assert np.allclose(hmat(v, 4), h, atol=1e-15)
    k = 0.5 * (h @ h + (h @ h).conj().T)
    assert hvec(h) @ hvec(k) == pytest.approx(np.vdot(h, k).real, rel=1e-13)


def test_check_adjoint_identity():
    assert check_adjoint(identity_triple(np.eye(2))) <= 1e-15


def test_check_adjoint_strategy_triple(two_round_shape):
    x = random_hermitian(two_round_shape.canonical_factors, seed=0)
    assert check_adjoint(build_primal_triple(x, two_round_shape)) <= 1e-10
    assert check_adjoint(build_dual_norm_triple(x, two_round_shape)) <= 1e-10


def test_check_adjoint_detects_sign_flip():
    t = toy_triple(0)

    def bad_adj(q):
        out = t.psi_adj(q)
        return out.replace(P2=-out["P2"])

    bad = SdpTriple(t.primal_structure, t.dual_structure, t.A, t.B, t.psi, bad_adj)
    assert check_adjoint(bad) >= 0.1


def test_trace_toy():
    sol = solve(identity_triple(np.eye(2)))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(2, abs=1e-8)


def test_diag_toy():
    sol = solve(identity_triple(np.diag([1.0, -1.0])))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(1, abs=1e-8)
    p = sol.primal["P"].matrix
    assert p[0, 0].real == pytest.approx(1, abs=1e-6)


def test_state_case_strategy_triple(state_shape):
    rho0 = np.diag([0.75, 0.25])
    rho1 = np.array([[0.5, 0.5], [0.5, 0.5]])
    x = LabeledOperator(rho0 - rho1, state_shape.canonical_factors)
    sol = solve(build_primal_triple(x, state_shape))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(np.abs(np.linalg.eigvalsh(rho0 - rho1)).max(), abs=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_solution_invariants(seed):
    t = toy_triple(seed)
    opts = SolverOptions()
    sol = solve(t, opts)
    assert sol.status == "optimal"
    rep = verify_certificates(t, sol, tol_gap=opts.tol_gap, tol_feas=opts.tol_feas)
    assert rep.ok, rep.violations
    assert sol.weak_duality_ok
    assert rep.primal_value == pytest.approx(sol.primal_value, abs=1e-12)


def test_deterministic():
    a, b = solve(toy_triple(3)), solve(toy_triple(3))
    assert a.value == b.value
    assert all(np.array_equal(x, y) for x, y in zip(a.primal.matrices(), b.primal.matrices()))


@pytest.mark.parametrize("c", [0.1, 3.0, 250.0])
def test_scale_equivariance(c):
    t = toy_triple(1)
    scaled = SdpTriple(t.primal_structure, t.dual_structure, t.A * c, t.B, t.psi, t.psi_adj)
    assert solve(scaled).value == pytest.approx(c * solve(t).value, rel=1e-7)


def test_max_iter_status():
    sol = solve(toy_triple(0), max_iter=2)
    assert sol.status == "max_iter"
    assert sol.iterations == 2


def test_history_respects_weak_duality():
    sol = solve(toy_triple(2))
    tol = SolverOptions().tol_gap
    for entry in sol.history:
        if max(entry["rp"], entry["rd"]) <= 1e-8:
            assert entry["primal"] <= entry["dual"] + 10 * tol * (1 + abs(entry["dual"]))


def test_verify_flags_negative_eigenvalue():
    t = identity_triple(np.eye(2))
    p = BlockOperator.from_matrices(ONE, [np.diag([0.5, -0.1])])
    q = BlockOperator.from_matrices(t.dual_structure, [np.eye(2)])
    rep = verify_certificates(t, p, q)
    assert not rep.ok
    assert rep.residuals["primal_psd"] == pytest.approx(0.1)
    assert any(name == "primal_psd" for name, _, _ in rep.violations)


def test_verify_flags_gap():
    t = identity_triple(np.eye(2))
    p = BlockOperator.from_matrices(ONE, [np.eye(2) * (1 - 5e-4)])
    q = BlockOperator.from_matrices(t.dual_structure, [np.eye(2)])
    rep = verify_certificates(t, p, q, tol_gap=1e-8)
    assert rep.gap == pytest.approx(1e-3)
    assert [name for name, _, _ in rep.violations] == ["gap"]
