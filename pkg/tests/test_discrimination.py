import numpy as np
import pytest

from stratnorm.discrimination import (
    ConvexStrategySet,
    coin_flip,
    guessing_game,
    margin_matrix,
    min_distance,
    separator,
)
from stratnorm.linalg import LabeledOperator, inner
from stratnorm.norms import dual_strategy_norm, strategy_norm
from stratnorm.strategies import (
    InteractionShape,
    InvalidStrategyError,
    MeasuringStrategy,
    Role,
    StrategyRep,
    operational_to_choi,
    random_costrategy,
    random_density,
    random_strategy,
    validate_measuring,
)


def strategies(shape, seeds):
    return [operational_to_choi(random_strategy(shape, seed=s)) for s in seeds]


def densities(shape, seeds):
    return [StrategyRep(LabeledOperator(random_density(shape.dim_in, seed=s),
                                        shape.canonical_factors), shape, Role.COSTRATEGY)
            for s in seeds]


@pytest.fixture(scope="module")
def three_vertex():
    shape = InteractionShape.uniform(2)
    a = ConvexStrategySet(strategies(shape, [100, 101, 102]))
    b = ConvexStrategySet(strategies(shape, [200, 201, 202]))
    return a, b, separator(a, b)


def test_set_rejects_mixed_roles(qubit_shape):
    s = operational_to_choi(random_strategy(qubit_shape, seed=0))
    t = operational_to_choi(random_costrategy(qubit_shape, seed=0))
    with pytest.raises(ValueError):
        ConvexStrategySet([s, t])
    with pytest.raises(ValueError):
        ConvexStrategySet([])


def test_set_rejects_invalid_vertex(qubit_shape):
    bad = StrategyRep(LabeledOperator.identity(qubit_shape.canonical_factors), qubit_shape,
                      Role.STRATEGY)
    with pytest.raises(InvalidStrategyError):
        ConvexStrategySet([bad])


def test_pair_rejects_mismatch(qubit_shape):
    a = ConvexStrategySet(strategies(qubit_shape, [0]))
    b = ConvexStrategySet([operational_to_choi(random_costrategy(qubit_shape, seed=0))])
    with pytest.raises(ValueError):
        min_distance(a, b)


def test_identical_singletons(qubit_shape):
    a = ConvexStrategySet(strategies(qubit_shape, [3]))
    res = separator(a, a)
    assert res.distance == 0.0
    assert res.status == "coin_flip"
    assert np.array_equal(res.margins, np.zeros((1, 1)))
    assert res.separator["0"].matrix.tobytes() == res.separator["1"].matrix.tobytes()
    assert validate_measuring(res.separator).ok


def test_overlapping_hulls_give_coin_flip(qubit_shape):
    verts = strategies(qubit_shape, [1, 2])
    mid = StrategyRep((verts[0].op + verts[1].op) * 0.5, qubit_shape, Role.STRATEGY)
    res = separator(ConvexStrategySet(verts), ConvexStrategySet([mid]))
    assert res.status == "coin_flip"
    assert res.success_probability == 0.5


@pytest.mark.parametrize("seeds", [(5, 6), (7, 8)])
def test_singletons_match_norm(seeds, two_round_shape):
    s0, s1 = strategies(two_round_shape, seeds)
    res = separator(ConvexStrategySet([s0]), ConvexStrategySet([s1]))
    want = strategy_norm(s0.op - s1.op, two_round_shape).value
    assert res.distance == pytest.approx(want, abs=1e-6)
    assert res.margins[0, 0] == pytest.approx(want, abs=1e-6)
    assert guessing_game(res.separator, s0, s1) == pytest.approx(0.5 + want / 4, abs=1e-7)


def test_margins_cover_all_pairs(three_vertex):
    a, b, res = three_vertex
    d = res.distance
    assert d > 0.05
    assert res.margins.shape == (3, 3)
    assert res.margins.min() >= d - 1e-6 * (1 + d)
    assert validate_measuring(res.separator).ok
    assert res.separator.role is Role.COSTRATEGY
    for w in res.minimizing_weights:
        assert w.min() >= 0 and abs(w.sum() - 1) <= 1e-10


def test_interior_points(three_vertex):
    a, b, res = three_vertex
    h = res.separator["0"] - res.separator["1"]
    rng = np.random.default_rng(0)
    floor = res.margins.min()
    for _ in range(100):
        m = inner(h, a.point(rng.dirichlet(np.ones(3))) - b.point(rng.dirichlet(np.ones(3))))
        assert m >= floor - 1e-9


def test_distance_bounded_by_vertex_pairs(three_vertex):
    a, b, res = three_vertex
    shape = a.shape
    best = min(strategy_norm(u.op - v.op, shape).value for u in a.vertices for v in b.vertices)
    assert res.distance <= best + 1e-7


def test_closest_pair_guessing_game(three_vertex):
    a, b, res = three_vertex
    r0, r1 = (StrategyRep(r, a.shape, Role.STRATEGY) for r in res.closest_pair)
    assert guessing_game(res.separator, r0, r1) == pytest.approx(0.5 + res.distance / 4,
                                                                 abs=1e-7)
    assert res.success_probability == 0.5 + res.distance / 4


def test_hyperplane_and_margin_matrix(three_vertex):
    a, b, res = three_vertex
    h, alpha = res.hyperplane
    assert np.allclose(margin_matrix(h, a, b), res.margins)
    assert min(inner(h, v.op) for v in a.vertices) >= alpha
    assert max(inner(h, v.op) for v in b.vertices) <= alpha


def test_adding_vertices_never_increases_distance(two_round_shape):
    base_a, base_b = strategies(two_round_shape, [300, 301]), strategies(two_round_shape, [400])
    d_small, _, _ = min_distance(ConvexStrategySet(base_a), ConvexStrategySet(base_b))
    extra = strategies(two_round_shape, [302])
    d_big, _, _ = min_distance(ConvexStrategySet(base_a + extra), ConvexStrategySet(base_b))
    assert d_big <= d_small + 1e-7


def test_min_distance_returns_hull_points(qubit_shape):
    a = ConvexStrategySet(strategies(qubit_shape, [10, 11]))
    b = ConvexStrategySet(strategies(qubit_shape, [12]))
    d, (lam, mu), (r0, r1) = min_distance(a, b)
    assert np.allclose(r0.matrix, a.point(lam).matrix)
    assert strategy_norm(r0 - r1, qubit_shape).value == pytest.approx(d, abs=1e-6)


# co-strategy sets


def test_costrategy_singletons_match_dual_norm(two_round_shape):
    t0, t1 = (operational_to_choi(random_costrategy(two_round_shape, seed=s)) for s in (1, 2))
    res = separator(ConvexStrategySet([t0]), ConvexStrategySet([t1]))
    assert res.separator.role is Role.STRATEGY
    want = dual_strategy_norm(t0.op - t1.op, two_round_shape).value
    assert res.distance == pytest.approx(want, abs=1e-6)
    assert validate_measuring(res.separator).ok


def test_costrategy_identical_singletons(qubit_shape):
    t = ConvexStrategySet([operational_to_choi(random_costrategy(qubit_shape, seed=4))])
    assert separator(t, t).distance == 0.0


def test_density_sets_trace_distance(state_shape):
    cp = pytest.importorskip("cvxpy")
    shape = InteractionShape((3,), (1,))
    a, b = densities(shape, [1, 2]), densities(shape, [3, 4, 5])
    res = separator(ConvexStrategySet(a), ConvexStrategySet(b))

    lam, mu = cp.Variable(2, nonneg=True), cp.Variable(3, nonneg=True)
    diff = sum(lam[i] * a[i].op.matrix for i in range(2)) - \
        sum(mu[j] * b[j].op.matrix for j in range(3))
    prob = cp.Problem(cp.Minimize(cp.normNuc(diff)), [cp.sum(lam) == 1, cp.sum(mu) == 1])
    prob.solve(solver="CLARABEL")
    assert res.distance == pytest.approx(prob.value, abs=1e-6)
    assert res.margins.min() >= res.distance - 1e-6 * (1 + res.distance)


# guessing game


def test_guessing_game_equal_candidates(qubit_shape):
    s = operational_to_choi(random_strategy(qubit_shape, seed=1))
    sep = separator(ConvexStrategySet([s]),
                    ConvexStrategySet(strategies(qubit_shape, [2]))).separator
    assert guessing_game(sep, s, s) == 0.5


def test_guessing_game_coin_flip(qubit_shape):
    s0, s1 = strategies(qubit_shape, [1, 2])
    assert guessing_game(coin_flip(qubit_shape, Role.COSTRATEGY), s0, s1) == 0.5


def test_guessing_game_requires_two_outcomes(qubit_shape):
    s0, s1 = strategies(qubit_shape, [1, 2])
    third = coin_flip(qubit_shape, Role.COSTRATEGY)["0"] * (2 / 3)
    sep = MeasuringStrategy({"0": third, "1": third, "2": third}, qubit_shape, Role.COSTRATEGY)
    with pytest.raises(ValueError):
        guessing_game(sep, s0, s1)


def test_guessing_game_role_check(qubit_shape):
    s0, s1 = strategies(qubit_shape, [1, 2])
    with pytest.raises(ValueError):
        guessing_game(coin_flip(qubit_shape, Role.STRATEGY), s0, s1)
