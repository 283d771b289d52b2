import numpy as np
import pytest

from stratnorm.linalg import LabeledOperator, inner, operator_norm, psd_residual, trace_norm
from stratnorm.norms import (
    NormBoundError,
    build_primal_triple,
    decompose_unit_ball,
    diamond_norm,
    dual_strategy_norm,
    max_output_probability,
    norm,
    saturate_costrategy,
    saturate_strategy,
    solve_from_starts,
    strategy_norm,
    trace_norm_lower_bound,
)
from stratnorm.oracles import unitary_choi
from stratnorm.sdp import SolverError
from stratnorm.strategies import (
    InteractionShape,
    InvalidStrategyError,
    MeasuringStrategy,
    Role,
    operational_to_choi,
    random_hermitian,
    random_measuring_strategy,
    random_strategy,
    trivial_costrategy,
    trivial_strategy,
    validate,
    validate_measuring,
    validate_strategy,
)

# Values from an independent cvxpy/Clarabel formulation (tests/_cvx_oracle.py),
# x = random_hermitian(shape.canonical_factors, seed): (norm, dual norm).
CVX_REFERENCE = {
    ((2,), (1,), 0): (0.6507934673549889, 1.0709565962015155),
    ((2,), (1,), 1): (1.5982186363470086, 2.2388642342583354),
    ((2,), (2,), 0): (2.27127841513443, 3.4368804615128568),
    ((2,), (2,), 1): (3.789295678402878, 4.652933634662377),
    ((2, 2), (2, 2), 0): (15.906387457992928, 22.737555031480476),
    ((2, 2), (2, 2), 1): (14.118653446486467, 19.669020427475957),
}


def canon(m, shape):
    return LabeledOperator(m, shape.canonical_factors)


@pytest.fixture(scope="module")
def two_round_results():
    shape = InteractionShape.uniform(2)
    x = random_hermitian(shape.canonical_factors, seed=7)
    return shape, x, strategy_norm(x, shape), dual_strategy_norm(x, shape)


# triple structure


def test_primal_triple_structure():
    shape = InteractionShape((2,), (1,))
    t = build_primal_triple(random_hermitian(shape.canonical_factors, 0), shape)
    assert t.primal_structure.labels == ("T0", "T1", "T(1)")
    assert t.primal_structure.dims == (2, 2, 2)
    assert t.dual_structure.labels == ("S(1)", "p")
    assert t.dual_structure.dims == (2, 1)


def test_last_adjoint_row_is_p_identity_minus_trace():
    shape = InteractionShape((2,), (2,))
    t = build_primal_triple(random_hermitian(shape.canonical_factors, 0), shape)
    rng = np.random.default_rng(0)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    s1 = 0.5 * (g + g.conj().T)
    q = t.B.replace(**{"S(1)": canon(s1, shape), "p": LabeledOperator(np.array([[1.7]]), ())})
    out = t.psi_adj(q)["T(1)"].matrix
    tr_y = s1.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
    assert np.allclose(out, 1.7 * np.eye(2) - tr_y, atol=1e-14)


def test_zero_operator(two_round_shape):
    zero = LabeledOperator.zeros(two_round_shape.canonical_factors)
    res = strategy_norm(zero, two_round_shape)
    assert res.value == 0.0
    assert np.array_equal(res.optimizer["0"].matrix, res.optimizer["1"].matrix)
    assert dual_strategy_norm(zero, two_round_shape).value == 0.0


def test_rejects_non_hermitian(state_shape):
    from stratnorm.linalg import NotHermitianError

    with pytest.raises(NotHermitianError):
        strategy_norm(np.array([[0, 1], [0, 0]]), state_shape)


# closed forms and references


@pytest.mark.parametrize("seed", range(5))
def test_state_case_closed_forms(seed, state_shape):
    x = random_hermitian(state_shape.canonical_factors, seed)
    w = np.linalg.eigvalsh(x.matrix)
    assert strategy_norm(x, state_shape).value == pytest.approx(np.abs(w).max(), abs=1e-6)
    assert dual_strategy_norm(x, state_shape).value == pytest.approx(np.abs(w).sum(), abs=1e-6)


@pytest.mark.parametrize("key", sorted(CVX_REFERENCE))
def test_frozen_cvx_reference(key):
    in_dims, out_dims, seed = key
    shape = InteractionShape(in_dims, out_dims)
    x = random_hermitian(shape.canonical_factors, seed)
    want_norm, want_dual = CVX_REFERENCE[key]
    assert strategy_norm(x, shape).value == pytest.approx(want_norm, rel=1e-6)
    assert dual_strategy_norm(x, shape).value == pytest.approx(want_dual, rel=1e-6)


def test_live_cvx_reference():
    pytest.importorskip("cvxpy")
    from _cvx_oracle import reference_norm

    shape = InteractionShape((2,), (2,))
    x = random_hermitian(shape.canonical_factors, seed=3)
    ref = reference_norm(x.matrix, shape.in_dims, shape.out_dims)
    ref_dual = reference_norm(x.matrix, shape.in_dims, shape.out_dims, dual=True)
    assert strategy_norm(x, shape).value == pytest.approx(ref, rel=1e-6)
    assert dual_strategy_norm(x, shape).value == pytest.approx(ref_dual, rel=1e-6)


def test_norm_dispatch_by_role(qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, 3)
    assert norm(x, qubit_shape, Role.STRATEGY).value == strategy_norm(x, qubit_shape).value
    assert norm(x, qubit_shape, Role.COSTRATEGY).value == \
        dual_strategy_norm(x, qubit_shape).value


def test_restarts_exhausted(qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, 0)
    t = build_primal_triple(x, qubit_shape)
    with pytest.raises(SolverError, match="from 4 starts") as info:
        solve_from_starts(t, qubit_shape, Role.COSTRATEGY, 2.0 * (1.0 + operator_norm(x)),
                          max_iter=1)
    assert info.value.solution.status == "max_iter"


def test_first_start_suffices(qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, 0)
    sol = solve_from_starts(build_primal_triple(x, qubit_shape), qubit_shape,
                            Role.COSTRATEGY, 2.0 * (1.0 + operator_norm(x)))
    assert sol.status == "optimal"


# result invariants


def test_result_invariants(two_round_results):
    shape, x, res, dres = two_round_results
    for r, opt_role in ((res, Role.COSTRATEGY), (dres, Role.STRATEGY)):
        assert r.optimizer.role is opt_role
        assert r.certificate_op.role is opt_role.opposite()
        assert validate_measuring(r.optimizer).ok
        assert r.certificate_op.validate().ok
        p, s = r.certificate
        assert psd_residual(s.op * p - x) <= 1e-7 * p
        assert psd_residual(s.op * p + x) <= 1e-7 * p
        attained = inner(r.optimizer["0"] - r.optimizer["1"], x)
        assert abs(attained - r.value) <= 1e-7 * (1 + r.value)
        assert abs(p - r.value) <= 1e-6 * (1 + r.value)
        assert r.gap <= 1e-6 * (1 + r.value)


def test_lower_bound(two_round_results):
    shape, x, res, dres = two_round_results
    assert res.value >= trace_norm(x) / shape.dim_in - 1e-7
    assert dres.value >= trace_norm_lower_bound(x, shape, Role.COSTRATEGY) - 1e-7


def test_norm_duality(two_round_results):
    # the dual norm's optimizer is a unit-ball element of the strategy norm
    shape, x, _, dres = two_round_results
    y = dres.optimizer["0"] - dres.optimizer["1"]
    assert strategy_norm(y, shape).value <= 1 + 1e-7
    assert inner(y, x) == pytest.approx(dres.value, rel=1e-7)


def test_homogeneity_and_triangle(qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, 11)
    y = random_hermitian(qubit_shape.canonical_factors, 12)
    nx, ny = strategy_norm(x, qubit_shape).value, strategy_norm(y, qubit_shape).value
    assert strategy_norm(x * -2.5, qubit_shape).value == pytest.approx(2.5 * nx, abs=1e-7 * nx)
    assert strategy_norm(x + y, qubit_shape).value <= nx + ny + 1e-7


def test_scaled_result(qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, 13)
    res = strategy_norm(x, qubit_shape)
    half = res.scaled(0.5)
    assert half.value == 0.5 * res.value
    assert half.certificate_op is res.certificate_op
    with pytest.raises(ValueError):
        res.scaled(0.0)


# saturation


def test_saturate_costrategy_fixed_point(qubit_shape):
    t = trivial_costrategy(qubit_shape).op
    blocks = {"T0": t * 0.5, "T1": t * 0.5, "T(1)": LabeledOperator.identity((("X1", 2),), 0.5)}
    out = saturate_costrategy(blocks, qubit_shape)
    for k, v in blocks.items():
        assert np.abs(out[k].matrix - v.matrix).max() <= 1e-12


def test_saturate_costrategy_base_trace(state_shape):
    t1 = LabeledOperator(np.diag([0.6, 0.3]), (("X1", 2),))
    t0 = canon(np.diag([0.5, 0.1]), state_shape)
    t1_out = canon(np.diag([0.0, 0.1]), state_shape)
    out = saturate_costrategy({"T0": t0, "T1": t1_out, "T(1)": t1}, state_shape)
    assert np.allclose(out["T(1)"].matrix, np.diag([0.65, 0.35]), atol=1e-15)
    assert out["T(1)"].trace().real == 1.0
    # preserved up to rounding of the shared shift
    drift = np.abs((out["T0"] - out["T1"]).matrix - (t0 - t1_out).matrix).max()
    assert drift <= 4 * np.finfo(float).eps


def test_saturate_rejects_infeasible(state_shape):
    t1 = LabeledOperator(np.diag([0.9, 0.3]), (("X1", 2),))
    z = canon(np.zeros((2, 2)), state_shape)
    with pytest.raises(InvalidStrategyError):
        saturate_costrategy({"T0": z, "T1": z, "T(1)": t1}, state_shape)


def test_saturate_strategy_absorbs_slack(qubit_shape):
    s1 = canon(np.diag([0.3, 0.0, 0.1, 0.2]), qubit_shape)
    out = saturate_strategy({"S(1)": s1}, 1.0, qubit_shape)
    # slack Q = I - tr_Y1 S(1) = diag(0.6, 0.8), lifted as Q (x) I_Y / 2
    assert np.allclose(out["S(1)"].matrix - s1.matrix,
                       np.kron(np.eye(2) / 2, np.diag([0.6, 0.8])), atol=1e-15)
    assert out["p"] == 1.0
    assert validate_strategy(out["S(1)"], qubit_shape).ok
    assert psd_residual(out["S(1)"] - s1) == 0.0


def test_saturate_strategy_fixed_point(two_round_shape):
    s = trivial_strategy(two_round_shape)
    w = validate_strategy(s.op, two_round_shape)
    blocks = {"S(1)": w.levels[0], "S(2)": w.levels[1]}
    out = saturate_strategy(blocks, 1.0, two_round_shape)
    for k, v in blocks.items():
        assert np.abs(out[k].matrix - v.matrix).max() <= 1e-12


# unit ball


def test_decompose_zero(qubit_shape):
    zero = LabeledOperator.zeros(qubit_shape.canonical_factors)
    ms = decompose_unit_ball(zero, qubit_shape)
    half = trivial_strategy(qubit_shape).op.matrix / 2
    assert np.allclose(ms["0"].matrix, half) and np.allclose(ms["1"].matrix, half)


def test_decompose_projective(state_shape):
    ms = decompose_unit_ball(canon(np.diag([1.0, -1.0]), state_shape), state_shape)
    assert np.allclose(ms["0"].matrix, np.diag([1.0, 0.0]), atol=1e-8)
    assert np.allclose(ms["1"].matrix, np.diag([0.0, 1.0]), atol=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_decompose_round_trip(seed, two_round_shape):
    ms = random_measuring_strategy(two_round_shape, seed=seed)
    x = ms["0"] - ms["1"]
    out = decompose_unit_ball(x, two_round_shape)
    assert np.abs((out["0"] - out["1"]).matrix - x.matrix).max() <= 1e-8
    assert validate_measuring(out).ok


def test_decompose_rejects_norm_two(state_shape):
    with pytest.raises(NormBoundError) as info:
        decompose_unit_ball(canon(np.diag([2.0, -2.0]), state_shape), state_shape)
    assert info.value.norm == pytest.approx(2, abs=1e-6)
    assert f"{info.value.norm:.12g}" in str(info.value)


# outcome forcing and channels


def test_max_output_state_case(state_shape):
    rng = np.random.default_rng(0)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    p = g @ g.conj().T
    p /= 1.5 * np.linalg.eigvalsh(p)[-1]
    ms = MeasuringStrategy({"a": canon(p, state_shape), "b": canon(np.eye(2) - p, state_shape)},
                           state_shape, Role.STRATEGY)
    res = max_output_probability(ms, "a")
    assert res.value == pytest.approx(np.linalg.eigvalsh(p)[-1], abs=1e-6)
    q, s = res.certificate
    assert psd_residual(s.op * q - ms["a"]) <= 1e-7 * q


def test_max_output_full_strategy(two_round_shape):
    s = operational_to_choi(random_strategy(two_round_shape, seed=3))
    ms = MeasuringStrategy.single(s, "all")
    res = max_output_probability(ms, "all")
    assert res.value == pytest.approx(1, abs=1e-7)
    assert validate(res.witness.op, two_round_shape, Role.COSTRATEGY).ok


def test_max_output_unknown_outcome(two_round_shape):
    ms = random_measuring_strategy(two_round_shape, seed=1)
    with pytest.raises(KeyError):
        max_output_probability(ms, "7")


def test_diamond_zero_map():
    assert diamond_norm(np.zeros((4, 4)), 2, 2).value == 0.0


def test_diamond_pauli_x():
    x = np.array([[0, 1], [1, 0]])
    res = diamond_norm(unitary_choi(np.eye(2)) - unitary_choi(x), 2, 2)
    assert res.value == pytest.approx(2, abs=1e-6)


def test_diamond_lower_bound():
    j0 = operational_to_choi(random_strategy(InteractionShape((2,), (2,)), seed=1,
                                             memory_dims=(1,))).op.matrix
    j1 = unitary_choi(np.eye(2))
    d = j0 - j1
    assert diamond_norm(d, 2, 2).value >= np.abs(np.linalg.eigvalsh(d)).sum() / 2 - 1e-7
    assert operator_norm(d) > 0
