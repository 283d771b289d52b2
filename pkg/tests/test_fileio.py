import json

import numpy as np
import pytest

from stratnorm.fileio import (
    ProblemFileError,
    decode_matrix,
    dumps,
    encode_matrix,
    load_problem,
    measuring_dict,
    operational_to_dict,
    parse_problem,
    problem_dict,
    strategy_dict,
)
from stratnorm.strategies import (
    InteractionShape,
    Role,
    operational_to_choi,
    random_costrategy,
    random_hermitian,
    random_measuring_strategy,
    random_strategy,
)


def test_matrix_round_trip():
    m = random_hermitian((("X1", 3),), seed=0).matrix
    assert np.array_equal(decode_matrix(encode_matrix(m)), m)


def test_dumps_is_deterministic_and_sorted():
    obj = {"b": [1.0, 2.5], "a": {"z": 0.1, "y": True}}
    text = dumps(obj)
    assert text == dumps(json.loads(text))
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == obj


def test_floats_keep_17_digits():
    x = 0.1 + 0.2
    assert "0.30000000000000004" in dumps({"v": x})
    assert json.loads(dumps({"v": x}))["v"] == x


def test_negative_zero_written_as_zero():
    text = dumps({"m": encode_matrix(np.array([[-0.0 + 0j]]))})
    assert "-0" not in text


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        dumps({"v": float("nan")})


def test_strategy_round_trip(two_round_shape):
    s = operational_to_choi(random_strategy(two_round_shape, seed=1))
    pf = parse_problem(json.loads(dumps(strategy_dict(s))))
    assert pf.kind == "strategy" and pf.role is Role.STRATEGY
    assert pf.shape == two_round_shape
    assert np.array_equal(pf.strategy().op.matrix, s.op.matrix)


def test_measuring_round_trip(two_round_shape):
    ms = random_measuring_strategy(two_round_shape, seed=2)
    pf = parse_problem(json.loads(dumps(measuring_dict(ms))))
    back = pf.measuring()
    assert set(back.outcomes) == set(ms.outcomes)
    for k in ms.outcomes:
        assert np.array_equal(back[k].matrix, ms[k].matrix)


def test_operational_round_trip(two_round_shape):
    oc = random_costrategy(two_round_shape, seed=3, measurement=2)
    pf = parse_problem(json.loads(dumps(operational_to_dict(oc))))
    assert pf.role is Role.COSTRATEGY
    back = pf.operational()
    a = operational_to_choi(oc).op.matrix
    b = operational_to_choi(back).op.matrix
    assert np.array_equal(a, b)


def test_load_problem_from_disk(tmp_path, qubit_shape):
    x = random_hermitian(qubit_shape.canonical_factors, seed=4)
    path = tmp_path / "x.json"
    path.write_text(dumps(problem_dict(qubit_shape, "hermitian", {"x": x}, solver={"tol_gap": 1e-9})))
    pf = load_problem(path)
    assert np.array_equal(pf.hermitian().matrix, x.matrix)
    assert pf.solver_options() == {"tol_gap": 1e-9}


def test_choi_difference(qubit_shape):
    a, b = np.eye(4), np.diag([1.0, 0, 0, 1])
    pf = parse_problem(problem_dict(qubit_shape, "choi", {"J0": a, "J1": b}))
    assert np.array_equal(pf.choi(), a - b)


# schema errors


def base(shape=InteractionShape((2,), (1,))):
    return problem_dict(shape, "hermitian", {"x": np.eye(2)})


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.update(schema_version="2"), "schema_version"),
    (lambda d: d.pop("shape"), "missing shape"),
    (lambda d: d.update(kind="tensor"), "unknown kind"),
    (lambda d: d.update(role="referee"), "unknown role"),
    (lambda d: d.update(operators=[1, 2]), "operators must be"),
    (lambda d: d["operators"].update(x=[[1, 2], [3, 4]]), "square nested array"),
    (lambda d: d["operators"].update(x=[[["a", 0]]]), "numeric"),
    (lambda d: d.update(shape={"r": 2, "in_dims": [2], "out_dims": [1]}), "disagrees"),
    (lambda d: d.update(shape={"in_dims": [2]}), "bad shape"),
])
def test_schema_errors(mutate, message):
    d = base()
    mutate(d)
    with pytest.raises(ProblemFileError, match=message):
        parse_problem(d)


def test_operator_dimension_mismatch():
    d = base()
    d["operators"]["x"] = encode_matrix(np.eye(3))
    pf = parse_problem(d)
    with pytest.raises(ProblemFileError, match="needs"):
        pf.hermitian()


def test_missing_operator():
    with pytest.raises(ProblemFileError, match="missing operator"):
        parse_problem(base()).strategy()


def test_unknown_solver_option():
    d = base()
    d["solver"] = {"tol_gap": 1e-8, "warm": True}
    with pytest.raises(ProblemFileError, match="unknown solver options"):
        parse_problem(d).solver_options()


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(ProblemFileError, match="cannot read"):
        load_problem(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ProblemFileError, match="invalid JSON"):
        load_problem(bad)
