"""Regenerate the bundled example problems in ``problems/``.

Every file is produced from fixed seeds, so rerunning this script is a no-op
on a clean checkout.  ``problems/suite.json`` lists one CLI invocation per
example; the acceptance tests run the whole suite twice and compare outputs.
"""

import argparse
from pathlib import Path

import numpy as np

from stratnorm.fileio import (
    measuring_dict,
    operational_to_dict,
    problem_dict,
    strategy_dict,
    write_json,
)
from stratnorm.oracles import unitary_choi
from stratnorm.strategies import (
    InteractionShape,
    operational_to_choi,
    random_costrategy,
    random_hermitian,
    random_measuring_strategy,
    random_strategy,
    trivial_costrategy,
)

ROOT = Path(__file__).resolve().parents[1]


def build(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    state = InteractionShape((2,), (1,))
    two = InteractionShape.uniform(2)
    qubit = InteractionShape((2,), (2,))

    files["norm_state_diag"] = problem_dict(state, "hermitian", {"x": np.diag([1.0, -1.0])})
    files["norm_two_rounds"] = problem_dict(
        two, "hermitian", {"x": random_hermitian(two.canonical_factors, seed=11, scale=0.25)})
    files["costrategy_identity"] = strategy_dict(trivial_costrategy(two))
    files["strategy_random"] = strategy_dict(operational_to_choi(random_strategy(two, seed=5)))
    files["decompose_norm_two"] = problem_dict(state, "hermitian", {"x": np.diag([2.0, -2.0])})

    ms = random_measuring_strategy(qubit, seed=21)
    files["decompose_unit"] = problem_dict(qubit, "hermitian", {"x": ms["0"] - ms["1"]})

    x_gate = np.array([[0.0, 1.0], [1.0, 0.0]])
    phase = np.diag([1.0, 1j])
    files["diamond_pauli_x"] = problem_dict(
        qubit, "choi", {"J0": unitary_choi(np.eye(2)), "J1": unitary_choi(x_gate)})
    files["diamond_phase"] = problem_dict(
        qubit, "choi", {"J0": unitary_choi(np.eye(2)), "J1": unitary_choi(phase)})

    files["measuring_two_rounds"] = measuring_dict(random_measuring_strategy(two, seed=31))

    set_a = [operational_to_choi(random_strategy(two, seed=40 + k)).op for k in range(3)]
    set_b = [operational_to_choi(random_strategy(two, seed=50 + k)).op for k in range(3)]
    files["set_a"] = problem_dict(two, "set", {f"v{k}": v for k, v in enumerate(set_a)})
    files["set_b"] = problem_dict(two, "set", {f"v{k}": v for k, v in enumerate(set_b)})

    files["sim_strategy"] = operational_to_dict(random_strategy(two, seed=61, memory_dims=(2, 2), measurement=2))
    files["sim_costrategy"] = operational_to_dict(random_costrategy(two, seed=62, memory_dims=(2, 2, 2), measurement=2))

    for name, obj in files.items():
        write_json(out / f"{name}.json", obj)

    suite = [
        {"name": "validate_costrategy_identity", "args": ["validate", "costrategy_identity.json"]},
        {"name": "validate_strategy_random", "args": ["validate", "strategy_random.json"]},
        {"name": "validate_measuring", "args": ["validate", "measuring_two_rounds.json"]},
        {"name": "norm_state_diag", "args": ["norm", "norm_state_diag.json"]},
        {"name": "norm_two_rounds", "args": ["norm", "norm_two_rounds.json"]},
        {"name": "dual_norm_two_rounds", "args": ["norm", "--dual", "norm_two_rounds.json"]},
        {"name": "diamond_pauli_x", "args": ["diamond", "diamond_pauli_x.json"]},
        {"name": "diamond_phase", "args": ["diamond", "diamond_phase.json"]},
        {"name": "max_output", "args": ["max-output", "--outcome", "0",
                                        "measuring_two_rounds.json"]},
        {"name": "decompose_unit", "args": ["decompose", "decompose_unit.json"]},
        {"name": "decompose_norm_two", "args": ["decompose", "decompose_norm_two.json"],
         "exit_code": 2},
        {"name": "discriminate", "args": ["discriminate", "set_a.json", "set_b.json"]},
        {"name": "simulate", "args": ["simulate", "--oracle", "sim_strategy.json",
                                      "sim_costrategy.json"]},
    ]
    for entry in suite:
        entry.setdefault("exit_code", 0)
    write_json(out / "suite.json", {"schema_version": "1", "runs": suite})
    return sorted(files)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(ROOT / "problems"))
    args = parser.parse_args()
    names = build(Path(args.out))
    print(f"wrote {len(names)} problems to {args.out}")


if __name__ == "__main__":
    main()
