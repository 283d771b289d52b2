"""JSON problem and result files.

Matrices are nested row-major lists of ``[re, im]`` pairs.  Output is
deterministic: keys are sorted and every float is written with 17
significant digits, so identical computations give byte-identical files.

A problem file looks like::

    {"schema_version": "1",
     "shape": {"r": 1, "in_dims": [2], "out_dims": [1]},
     "kind": "hermitian",
     "role": "strategy",
     "operators": {"x": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]},
     "solver": {"tol_gap": 1e-8}}

``kind`` is one of ``hermitian`` (operator ``x``), ``strategy`` (operator
``S``), ``measuring`` (one operator per outcome), ``set`` (one operator per
vertex, in file order), ``choi`` (operator ``J``, or ``J0`` and ``J1`` whose
difference is taken) or ``operational`` (round maps, see
:func:`operational_to_dict`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import LabeledOperator
from .strategies import (
    Channel,
    InteractionShape,
    MeasuringStrategy,
    OperationalCoStrategy,
    OperationalStrategy,
    Role,
    StrategyRep,
)

SCHEMA_VERSION = "1"
KINDS = ("hermitian", "strategy", "measuring", "set", "choi", "operational")


class ProblemFileError(ValueError):
    """Malformed or inconsistent problem file."""


# ---------------------------------------------------------------------------
# encoding


def encode_matrix(m) -> list:
    m = m.matrix if isinstance(m, LabeledOperator) else np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj, what="matrix") -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"{what}: entries must be numeric [re, im] pairs ({exc})") from None
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise ProblemFileError(f"{what}: expected a square nested array of [re, im] pairs, "
                               f"got array shape {a.shape}")
    if not np.isfinite(a).all():
        raise ProblemFileError(f"{what}: non-finite entry")
    return a[..., 0] + 1j * a[..., 1]


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = "%.17g" % x
    if s == "-0":
        s = "0"
    return s


def _depth(obj) -> int:
    if isinstance(obj, (list, tuple)):
        return 1 + max((_depth(v) for v in obj), default=0)
    return 99 if isinstance(obj, dict) else 0


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(obj[k], indent, level + 1)
                 for k in sorted(obj, key=str)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # matrix rows (lists of [re, im] pairs) and plain vectors stay on one line
        if _depth(obj) <= 2:
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(bool(obj) if isinstance(obj, np.bool_) else obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    """Deterministic JSON text: sorted keys, ``%.17g`` floats, trailing newline."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


# ---------------------------------------------------------------------------
# problem files


def shape_to_dict(shape: InteractionShape) -> dict:
    return {"r": shape.r, "in_dims": list(shape.in_dims), "out_dims": list(shape.out_dims)}


def shape_from_dict(d) -> InteractionShape:
    try:
        shape = InteractionShape(tuple(int(v) for v in d["in_dims"]),
                                 tuple(int(v) for v in d["out_dims"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"bad shape {d!r}: {exc}") from None
    if "r" in d and int(d["r"]) != shape.r:
        raise ProblemFileError(f"shape r={d['r']} disagrees with {shape.r} dims")
    return shape


@dataclass
class ProblemFile:
    shape: InteractionShape
    kind: str
    role: Role = Role.STRATEGY
    operators: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    path: str = ""

    def operator(self, name) -> LabeledOperator:
        if name not in self.operators:
            raise ProblemFileError(f"{self.path}: missing operator {name!r}")
        m = self.operators[name]
        d = self.shape.dim
        if m.shape != (d, d):
            raise ProblemFileError(f"{self.path}: operator {name!r} has shape {m.shape}, "
                                   f"shape {self.shape.to_dict()} needs {(d, d)}")
        return LabeledOperator(m, self.shape.canonical_factors)

    def hermitian(self) -> LabeledOperator:
        return self.operator("x")

    def strategy(self) -> StrategyRep:
        return StrategyRep(self.operator("S"), self.shape, self.role)

    def measuring(self) -> MeasuringStrategy:
        return MeasuringStrategy({k: self.operator(k) for k in self.operators},
                                 self.shape, self.role)

    def vertices(self) -> list[StrategyRep]:
        return [StrategyRep(self.operator(k), self.shape, self.role) for k in self.operators]

    def choi(self) -> np.ndarray:
        if "J" in self.operators:
            return self.operator("J").matrix
        return self.operator("J0").matrix - self.operator("J1").matrix

    def operational(self):
        return operational_from_dict(self.raw, self.shape, self.role)

    def solver_options(self) -> dict:
        allowed = {"tol_gap", "tol_feas", "max_iter"}
        bad = set(self.solver) - allowed
        if bad:
            raise ProblemFileError(f"{self.path}: unknown solver options {sorted(bad)}")
        return dict(self.solver)


def parse_problem(raw: dict, path="<input>") -> ProblemFile:
    if not isinstance(raw, dict):
        raise ProblemFileError(f"{path}: top level must be a JSON object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProblemFileError(f"{path}: schema_version must be {SCHEMA_VERSION!r}, "
                               f"got {version!r}")
    if "shape" not in raw:
        raise ProblemFileError(f"{path}: missing shape")
    shape = shape_from_dict(raw["shape"])
    kind = raw.get("kind", "hermitian")
    if kind not in KINDS:
        raise ProblemFileError(f"{path}: unknown kind {kind!r}; expected one of {KINDS}")
    try:
        role = Role(raw.get("role", "strategy"))
    except ValueError:
        raise ProblemFileError(f"{path}: unknown role {raw.get('role')!r}") from None
    ops = raw.get("operators", {})
    if not isinstance(ops, dict):
        raise ProblemFileError(f"{path}: operators must be an object of named matrices")
    operators = {str(k): decode_matrix(v, f"{path}: operator {k!r}") for k, v in ops.items()}
    solver = raw.get("solver", {}) or {}
    return ProblemFile(shape, kind, role, operators, dict(solver), raw, str(path))


def load_problem(path) -> ProblemFile:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc})") from None
    return parse_problem(raw, path)


def problem_dict(shape: InteractionShape, kind: str, operators: dict, role=Role.STRATEGY,
                 **extra) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "shape": shape_to_dict(shape), "kind": kind,
           "role": Role(role).value,
           "operators": {k: encode_matrix(v) for k, v in operators.items()}}
    out.update(extra)
    return out


def strategy_dict(s: StrategyRep) -> dict:
    return problem_dict(s.shape, "strategy", {"S": s.op}, s.role)


def measuring_dict(ms: MeasuringStrategy) -> dict:
    return problem_dict(ms.shape, "measuring", dict(ms.outcomes), ms.role)


# ---------------------------------------------------------------------------
# operational descriptions


def operational_to_dict(o) -> dict:
    role = Role.STRATEGY if isinstance(o, OperationalStrategy) else Role.COSTRATEGY
    maps = [{"in_dims": list(ch.in_dims), "out_dims": list(ch.out_dims),
             "choi": encode_matrix(ch.choi)} for ch in o.round_maps]
    extra = {"memory_dims": list(o.memory_dims), "round_maps": maps}
    if role is Role.COSTRATEGY:
        extra["initial_state"] = encode_matrix(o.initial_state)
    if o.measurement is not None:
        extra["measurement"] = {k: encode_matrix(v) for k, v in o.measurement.items()}
    return problem_dict(o.shape, "operational", {}, role, **extra)


def operational_from_dict(raw: dict, shape: InteractionShape, role: Role):
    try:
        mem = tuple(int(d) for d in raw["memory_dims"])
        maps = tuple(Channel(decode_matrix(m["choi"], f"round map {i}"),
                             tuple(m["in_dims"]), tuple(m["out_dims"]))
                     for i, m in enumerate(raw["round_maps"], 1))
        meas = raw.get("measurement")
        if meas is not None:
            meas = {str(k): decode_matrix(v, f"measurement effect {k!r}") for k, v in meas.items()}
        if role is Role.STRATEGY:
            return OperationalStrategy(shape, mem, maps, meas)
        rho = decode_matrix(raw["initial_state"], "initial_state")
        return OperationalCoStrategy(shape, mem, rho, maps, meas)
    except KeyError as exc:
        raise ProblemFileError(f"operational description is missing {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(f"operational description is inconsistent: {exc}") from None
