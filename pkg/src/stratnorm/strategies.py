"""Strategies and co-strategies: operational form, Choi form, ladder validation.

Factor labels: inputs ``X1..Xr``, outputs ``Y1..Yr``, strategy memories
``Z1..Zr`` and co-strategy memories ``W0..Wr``.  Every Choi operator of a
(co-)strategy is stored on the canonical factor order ``Y1..Yr, X1..Xr``.

Choi convention: ``J(Phi) = sum_ij Phi(E_ij) (x) E_ij`` on ``out (x) in``, so a
channel acts as ``Phi(rho) = tr_in[J (I_out (x) rho^T)]``.  A co-strategy is
stored as ``J(Xi^*)`` where ``Xi`` maps the ``Y`` messages to the ``X``
messages; with this choice the outcome probabilities of an interaction are
``<S_a, T_b>``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import prod
from typing import Mapping, Sequence

import numpy as np

from .linalg import (
    LabeledOperator,
    FactorError,
    extend,
    inner,
    operator_norm,
    partial_trace,
    permute_factors,
    psd_residual,
    require_hermitian,
)

MEMORY_CAP = 8
CHANNEL_TOL = 1e-9
STATE_TOL = 1e-10


class InvalidStrategyError(ValueError):
    """An operator or operational description fails its validity conditions."""


class Role(str, enum.Enum):
    STRATEGY = "strategy"
    COSTRATEGY = "costrategy"

    def opposite(self) -> "Role":
        return Role.COSTRATEGY if self is Role.STRATEGY else Role.STRATEGY


@dataclass(frozen=True)
class InteractionShape:
    """Round count with the input (``X``) and output (``Y``) dimensions per round."""

    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        in_dims = tuple(int(d) for d in self.in_dims)
        out_dims = tuple(int(d) for d in self.out_dims)
        if not in_dims or len(in_dims) != len(out_dims):
            raise ValueError(f"need equally many input and output dims (>= 1 round), "
                             f"got {in_dims} and {out_dims}")
        if min(in_dims + out_dims) < 1:
            raise ValueError("all dimensions must be positive")
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @classmethod
    def uniform(cls, r: int, in_dim: int = 2, out_dim: int = 2) -> "InteractionShape":
        return cls((in_dim,) * r, (out_dim,) * r)

    @property
    def r(self) -> int:
        return len(self.in_dims)

    def x(self, i: int) -> tuple[str, int]:
        return (f"X{i}", self.in_dims[i - 1])

    def y(self, i: int) -> tuple[str, int]:
        return (f"Y{i}", self.out_dims[i - 1])

    @property
    def x_factors(self):
        return tuple(self.x(i) for i in range(1, self.r + 1))

    @property
    def y_factors(self):
        return tuple(self.y(i) for i in range(1, self.r + 1))

    @property
    def canonical_factors(self):
        return self.y_factors + self.x_factors

    @property
    def dim_in(self) -> int:
        return prod(self.in_dims)

    @property
    def dim_out(self) -> int:
        return prod(self.out_dims)

    @property
    def dim(self) -> int:
        return self.dim_in * self.dim_out

    def strategy_level_factors(self, i: int):
        """Factors ``Y1..Yi, X1..Xi`` of the strategy ladder level ``i``."""
        return tuple(self.y(k) for k in range(1, i + 1)) + tuple(self.x(k) for k in range(1, i + 1))

    def costrategy_level_factors(self, i: int):
        """Factors ``Y1..Y(i-1), X1..Xi`` of the co-strategy ladder level ``i``."""
        return tuple(self.y(k) for k in range(1, i)) + tuple(self.x(k) for k in range(1, i + 1))

    def level_factors(self, role: Role, i: int):
        if role is Role.STRATEGY:
            return self.strategy_level_factors(i)
        return self.costrategy_level_factors(i)

    def to_dict(self):
        return {"r": self.r, "in_dims": list(self.in_dims), "out_dims": list(self.out_dims)}


def _check_canonical(op: LabeledOperator, shape: InteractionShape, what="operator"):
    if op.factors != shape.canonical_factors:
        raise FactorError(f"{what} has factors {op.factors}; expected canonical "
                          f"{shape.canonical_factors}")


def default_tolerance(op: LabeledOperator) -> float:
    """Validation tolerance ``1e-8 * max(1, ||op||) * dim``."""
    return 1e-8 * max(1.0, operator_norm(op)) * op.dim


@dataclass(frozen=True)
class LadderWitness:
    """Recovered ladder levels plus the deviation of every ladder constraint."""

    role: Role
    levels: tuple[LabeledOperator, ...]
    residuals: dict
    tol: float

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]

    @property
    def ok(self) -> bool:
        return self.worst[1] <= self.tol

    def require(self) -> "LadderWitness":
        if not self.ok:
            name, value = self.worst
            raise InvalidStrategyError(f"{self.role.value} ladder violated at {name}: "
                                       f"deviation {value:.3e} > tol {self.tol:.3e}")
        return self


def _dev(a: LabeledOperator, b: LabeledOperator) -> float:
    return operator_norm((a - b).hermitian_part())


def validate_strategy(op: LabeledOperator, shape: InteractionShape,
                      tol: float | None = None) -> LadderWitness:
    """Check the strategy ladder ``tr_Yi S(i) = S(i-1) (x) I_Xi``, ``tr_Y1 S(1) = I_X1``.

    Levels are recovered top-down by ``S(i-1) = tr_{Yi,Xi} S(i) / dim Xi``.
    """
    _check_canonical(op, shape)
    require_hermitian(op)
    tol = default_tolerance(op) if tol is None else tol
    r = shape.r
    levels = [op]
    res = {"psd": psd_residual(op)}
    for i in range(r, 1, -1):
        s_i = levels[0]
        down = partial_trace(s_i, [f"Y{i}", f"X{i}"]) / shape.in_dims[i - 1]
        down = permute_factors(down, [l for l, _ in shape.strategy_level_factors(i - 1)])
        traced = partial_trace(s_i, f"Y{i}")
        res[f"level{i}"] = _dev(traced, extend(down, traced.factors))
        levels.insert(0, down)
    base = partial_trace(levels[0], "Y1")
    res["level1"] = _dev(base, LabeledOperator.identity(base.factors))
    return LadderWitness(Role.STRATEGY, tuple(levels), res, tol)


def validate_costrategy(op: LabeledOperator, shape: InteractionShape,
                        tol: float | None = None) -> LadderWitness:
    """Check ``T = T(r) (x) I_Yr``, ``tr_Xi T(i) = T(i-1) (x) I_Y(i-1)``, ``tr T(1) = 1``."""
    _check_canonical(op, shape)
    require_hermitian(op)
    tol = default_tolerance(op) if tol is None else tol
    r = shape.r
    res = {"psd": psd_residual(op)}
    top = partial_trace(op, f"Y{r}") / shape.out_dims[r - 1]
    res[f"top{r}"] = _dev(op, extend(top, op.factors))
    levels = [top]
    for i in range(r, 1, -1):
        t_i = levels[0]
        traced = partial_trace(t_i, f"X{i}")
        down = partial_trace(t_i, [f"X{i}", f"Y{i - 1}"]) / shape.out_dims[i - 2]
        down = permute_factors(down, [l for l, _ in shape.costrategy_level_factors(i - 1)])
        res[f"level{i}"] = _dev(traced, extend(down, traced.factors))
        levels.insert(0, down)
    res["level1"] = abs(levels[0].trace() - 1.0)
    return LadderWitness(Role.COSTRATEGY, tuple(levels), res, tol)


def validate(op: LabeledOperator, shape: InteractionShape, role: Role,
             tol: float | None = None) -> LadderWitness:
    if Role(role) is Role.STRATEGY:
        return validate_strategy(op, shape, tol)
    return validate_costrategy(op, shape, tol)


@dataclass(frozen=True)
class StrategyRep:
    """Choi operator of a non-measuring strategy or co-strategy on canonical factors."""

    op: LabeledOperator
    shape: InteractionShape
    role: Role

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        _check_canonical(self.op, self.shape)
        require_hermitian(self.op)

    def validate(self, tol=None) -> LadderWitness:
        return validate(self.op, self.shape, self.role, tol)


@dataclass(frozen=True)
class MeasuringStrategy:
    """Outcome-indexed PSD operators whose sum is a (co-)strategy."""

    outcomes: Mapping[str, LabeledOperator]
    shape: InteractionShape
    role: Role

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        outcomes = {str(k): v for k, v in dict(self.outcomes).items()}
        if not outcomes:
            raise ValueError("a measuring strategy needs at least one outcome")
        for label, op in outcomes.items():
            _check_canonical(op, self.shape, f"outcome {label!r}")
            require_hermitian(op, f"outcome {label!r}")
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.outcomes)

    def total(self) -> LabeledOperator:
        ops = list(self.outcomes.values())
        out = ops[0]
        for op in ops[1:]:
            out = out + op
        return out

    def __getitem__(self, label) -> LabeledOperator:
        try:
            return self.outcomes[str(label)]
        except KeyError:
            raise KeyError(f"unknown outcome {label!r}; have {self.labels}") from None

    @classmethod
    def single(cls, rep: StrategyRep, label="0") -> "MeasuringStrategy":
        return cls({label: rep.op}, rep.shape, rep.role)


def validate_measuring(ms: MeasuringStrategy, tol: float | None = None) -> LadderWitness:
    """Each outcome PSD and the outcome sum passes the role's ladder."""
    total = ms.total()
    tol = default_tolerance(total) if tol is None else tol
    w = validate(total, ms.shape, ms.role, tol)
    res = dict(w.residuals)
    for label, op in ms.outcomes.items():
        res[f"psd[{label}]"] = psd_residual(op)
    return LadderWitness(w.role, w.levels, res, tol)


def trivial_strategy(shape: InteractionShape) -> StrategyRep:
    """``I / dim(Y1..r)``: discard every input, output maximally mixed states."""
    return StrategyRep(LabeledOperator.identity(shape.canonical_factors, 1.0 / shape.dim_out),
                       shape, Role.STRATEGY)


def trivial_costrategy(shape: InteractionShape) -> StrategyRep:
    """``I / dim(X1..r)``."""
    return StrategyRep(LabeledOperator.identity(shape.canonical_factors, 1.0 / shape.dim_in),
                       shape, Role.COSTRATEGY)


def trivial(shape: InteractionShape, role: Role) -> StrategyRep:
    return trivial_strategy(shape) if Role(role) is Role.STRATEGY else trivial_costrategy(shape)


# ---------------------------------------------------------------------------
# operational descriptions


@dataclass(frozen=True)
class Channel:
    """Choi matrix of a map from ``in_dims`` factors to ``out_dims`` factors.

    The Choi matrix acts on ``out (x) in`` with the factors in the listed order.
    """

    choi: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        in_dims = tuple(int(d) for d in self.in_dims)
        out_dims = tuple(int(d) for d in self.out_dims)
        m = np.array(self.choi, dtype=np.complex128)
        d = prod(in_dims) * prod(out_dims)
        if m.shape != (d, d):
            raise ValueError(f"channel Choi matrix has shape {m.shape}, expected {(d, d)}")
        m.setflags(write=False)
        object.__setattr__(self, "choi", m)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return prod(self.in_dims)

    @property
    def d_out(self) -> int:
        return prod(self.out_dims)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], in_dims, out_dims) -> "Channel":
        d_in, d_out = prod(in_dims), prod(out_dims)
        j = np.zeros((d_out * d_in, d_out * d_in), dtype=np.complex128)
        for k in kraus:
            v = np.asarray(k, dtype=np.complex128).reshape(d_out * d_in)
            j += np.outer(v, v.conj())
        return cls(j, in_dims, out_dims)

    def cp_residual(self) -> float:
        h = 0.5 * (self.choi + self.choi.conj().T)
        herm = float(np.abs(self.choi - h).max())
        return max(herm, psd_residual(h))

    def tp_residual(self) -> float:
        j = self.choi.reshape(self.d_out, self.d_in, self.d_out, self.d_in)
        tr_out = np.einsum("aiaj->ij", j)
        return float(np.abs(tr_out - np.eye(self.d_in)).max())

    def check(self, what="channel", tol=CHANNEL_TOL):
        cp, tp = self.cp_residual(), self.tp_residual()
        if cp > tol:
            raise InvalidStrategyError(f"{what} is not completely positive (residual {cp:.3e})")
        if tp > tol:
            raise InvalidStrategyError(f"{what} is not trace preserving (residual {tp:.3e})")


def apply_channel(state: LabeledOperator, channel: Channel, in_labels: Sequence[str],
                  out_labels: Sequence[str]) -> LabeledOperator:
    """Apply ``channel`` to the ``in_labels`` factors of ``state``.

    The output factors ``out_labels`` come first in the result, followed by the
    untouched factors in their original order.
    """
    in_labels = list(in_labels)
    dims = [state.dim_of(l) for l in in_labels]
    if tuple(dims) != channel.in_dims:
        raise FactorError(f"channel expects input dims {channel.in_dims}, "
                          f"state factors {in_labels} have {tuple(dims)}")
    rest = [f for f in state.factors if f[0] not in in_labels]
    s = permute_factors(state, in_labels + [l for l, _ in rest])
    d_in, d_out = channel.d_in, channel.d_out
    d_rest = prod(d for _, d in rest)
    sig = s.matrix.reshape(d_in, d_rest, d_in, d_rest)
    j = channel.choi.reshape(d_out, d_in, d_out, d_in)
    out = np.einsum("oipj,irjs->orps", j, sig, optimize=True).reshape(d_out * d_rest, -1)
    factors = tuple(zip(out_labels, channel.out_dims)) + tuple(rest)
    return LabeledOperator(out, factors)


def _measure(state: LabeledOperator, label: str, effect: np.ndarray) -> LabeledOperator:
    """``tr_label[(E (x) I) state]``."""
    d = state.dim_of(label)
    rest = [l for l in state.labels if l != label]
    s = permute_factors(state, [label] + rest)
    dr = s.dim // d
    t = s.matrix.reshape(d, dr, d, dr)
    out = np.einsum("ji,irjs->rs", np.asarray(effect, dtype=np.complex128), t)
    return LabeledOperator(out, tuple(f for f in s.factors if f[0] != label))


def _check_measurement(meas: Mapping[str, np.ndarray], dim: int, what: str):
    total = np.zeros((dim, dim), dtype=np.complex128)
    for label, e in meas.items():
        e = np.asarray(e, dtype=np.complex128)
        if e.shape != (dim, dim):
            raise FactorError(f"{what} effect {label!r} has shape {e.shape}, expected {(dim, dim)}")
        if psd_residual(0.5 * (e + e.conj().T)) > STATE_TOL:
            raise InvalidStrategyError(f"{what} effect {label!r} is not positive semidefinite")
        total += e
    if np.abs(total - np.eye(dim)).max() > STATE_TOL:
        raise InvalidStrategyError(f"{what} effects do not sum to the identity")


@dataclass(frozen=True)
class OperationalStrategy:
    """Memory dims ``Z1..Zr`` and channels ``Phi_i: X_i Z_(i-1) -> Y_i Z_i``."""

    shape: InteractionShape
    memory_dims: tuple[int, ...]
    round_maps: tuple[Channel, ...]
    measurement: Mapping[str, np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "memory_dims", tuple(int(d) for d in self.memory_dims))
        object.__setattr__(self, "round_maps", tuple(self.round_maps))
        r = self.shape.r
        if len(self.memory_dims) != r or len(self.round_maps) != r:
            raise ValueError(f"need {r} memory dims and {r} round maps")
        for i in range(1, r + 1):
            want_in = (self.shape.in_dims[i - 1],) + ((self.memory_dims[i - 2],) if i > 1 else ())
            want_out = (self.shape.out_dims[i - 1], self.memory_dims[i - 1])
            ch = self.round_maps[i - 1]
            if ch.in_dims != want_in or ch.out_dims != want_out:
                raise FactorError(f"round {i} map has dims {ch.in_dims}->{ch.out_dims}, "
                                  f"expected {want_in}->{want_out}")
        if self.measurement is not None:
            object.__setattr__(self, "measurement", {str(k): np.asarray(v, dtype=np.complex128)
                                                     for k, v in dict(self.measurement).items()})

    def check(self):
        for i, ch in enumerate(self.round_maps, 1):
            ch.check(f"round {i} map")
        if self.measurement is not None:
            _check_measurement(self.measurement, self.memory_dims[-1], "strategy measurement")

    def in_labels(self, i):
        return [f"X{i}"] + ([f"Z{i - 1}"] if i > 1 else [])

    def out_labels(self, i):
        return [f"Y{i}", f"Z{i}"]


@dataclass(frozen=True)
class OperationalCoStrategy:
    """Memory dims ``W0..Wr``, state ``rho0`` on ``X1 W0`` and channels ``Psi_i``.

    ``Psi_i: Y_i W_(i-1) -> X_(i+1) W_i`` for ``i < r`` and ``Psi_r: Y_r W_(r-1) -> W_r``.
    """

    shape: InteractionShape
    memory_dims: tuple[int, ...]
    initial_state: np.ndarray
    round_maps: tuple[Channel, ...]
    measurement: Mapping[str, np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "memory_dims", tuple(int(d) for d in self.memory_dims))
        object.__setattr__(self, "round_maps", tuple(self.round_maps))
        rho = np.array(self.initial_state, dtype=np.complex128)
        rho.setflags(write=False)
        object.__setattr__(self, "initial_state", rho)
        r = self.shape.r
        if len(self.memory_dims) != r + 1 or len(self.round_maps) != r:
            raise ValueError(f"need {r + 1} memory dims and {r} round maps")
        d0 = self.shape.in_dims[0] * self.memory_dims[0]
        if rho.shape != (d0, d0):
            raise FactorError(f"initial state has shape {rho.shape}, expected {(d0, d0)}")
        for i in range(1, r + 1):
            want_in = (self.shape.out_dims[i - 1], self.memory_dims[i - 1])
            want_out = ((self.shape.in_dims[i], self.memory_dims[i]) if i < r
                        else (self.memory_dims[r],))
            ch = self.round_maps[i - 1]
            if ch.in_dims != want_in or ch.out_dims != want_out:
                raise FactorError(f"round {i} map has dims {ch.in_dims}->{ch.out_dims}, "
                                  f"expected {want_in}->{want_out}")
        if self.measurement is not None:
            object.__setattr__(self, "measurement", {str(k): np.asarray(v, dtype=np.complex128)
                                                     for k, v in dict(self.measurement).items()})

    def check(self):
        rho = self.initial_state
        if np.abs(rho - rho.conj().T).max() > STATE_TOL or psd_residual(rho) > STATE_TOL:
            raise InvalidStrategyError("initial state is not positive semidefinite")
        if abs(np.trace(rho) - 1.0) > STATE_TOL:
            raise InvalidStrategyError(f"initial state has trace {np.trace(rho).real:.12g}")
        for i, ch in enumerate(self.round_maps, 1):
            ch.check(f"round {i} map")
        if self.measurement is not None:
            _check_measurement(self.measurement, self.memory_dims[-1], "co-strategy measurement")

    def in_labels(self, i):
        return [f"Y{i}", f"W{i - 1}"]

    def out_labels(self, i):
        return ([f"X{i + 1}", f"W{i}"] if i < self.shape.r else [f"W{i}"])


def _max_entangled(factors, prefix) -> LabeledOperator:
    """Unnormalized ``sum_ij E_ij (x) E_ij`` on ``factors (x) prefix+factors``."""
    d = prod(dim for _, dim in factors)
    v = np.eye(d).reshape(d * d)
    ref = tuple((prefix + label, dim) for label, dim in factors)
    return LabeledOperator(np.outer(v, v), tuple(factors) + ref)


def _finish(state: LabeledOperator, memory: str, effects):
    if effects is None:
        return {"0": partial_trace(state, memory)}
    return {label: _measure(state, memory, e) for label, e in effects.items()}


def _strategy_chois(os: OperationalStrategy, effects):
    shape = os.shape
    state = _max_entangled(shape.x_factors, "R")
    for i in range(1, shape.r + 1):
        state = apply_channel(state, os.round_maps[i - 1], os.in_labels(i), os.out_labels(i))
    outs = _finish(state, f"Z{shape.r}", effects)
    relabel = {f"RX{i}": f"X{i}" for i in range(1, shape.r + 1)}
    order = [l for l, _ in shape.canonical_factors]
    return {k: permute_factors(v.relabel(relabel), order).hermitian_part() for k, v in outs.items()}


def _costrategy_chois(oc: OperationalCoStrategy, effects):
    shape = oc.shape
    rho0 = LabeledOperator(oc.initial_state, (shape.x(1), ("W0", oc.memory_dims[0])))
    state = _max_entangled(shape.y_factors, "R")
    state = LabeledOperator(np.kron(rho0.matrix, state.matrix), rho0.factors + state.factors)
    for i in range(1, shape.r + 1):
        state = apply_channel(state, oc.round_maps[i - 1], oc.in_labels(i), oc.out_labels(i))
    outs = _finish(state, f"W{shape.r}", effects)
    # outs hold J(Xi) on X..(x)RY..; the co-strategy is J(Xi^*) = conj of the swapped operator
    relabel = {f"RY{i}": f"Y{i}" for i in range(1, shape.r + 1)}
    order = [l for l, _ in shape.canonical_factors]
    return {k: permute_factors(v.relabel(relabel), order).conj().hermitian_part()
            for k, v in outs.items()}


def operational_to_choi(o: OperationalStrategy | OperationalCoStrategy) -> StrategyRep:
    """Choi operator of the non-measuring (co-)strategy, on canonical factors."""
    o.check()
    if isinstance(o, OperationalStrategy):
        return StrategyRep(_strategy_chois(o, None)["0"], o.shape, Role.STRATEGY)
    return StrategyRep(_costrategy_chois(o, None)["0"], o.shape, Role.COSTRATEGY)


def operational_to_measuring(o: OperationalStrategy | OperationalCoStrategy,
                             measurement: Mapping[str, np.ndarray] | None = None
                             ) -> MeasuringStrategy:
    """Per-outcome Choi operators of a measuring (co-)strategy.

    Uses ``measurement`` if given, else the object's own; without either the
    result has the single outcome ``"0"``.
    """
    o.check()
    effects = measurement if measurement is not None else o.measurement
    if effects is not None:
        what = "strategy" if isinstance(o, OperationalStrategy) else "co-strategy"
        _check_measurement(effects, o.memory_dims[-1], f"{what} measurement")
    if isinstance(o, OperationalStrategy):
        return MeasuringStrategy(_strategy_chois(o, effects), o.shape, Role.STRATEGY)
    return MeasuringStrategy(_costrategy_chois(o, effects), o.shape, Role.COSTRATEGY)


def _as_measuring(x) -> MeasuringStrategy:
    return MeasuringStrategy.single(x) if isinstance(x, StrategyRep) else x


def interaction_probability(s, t) -> dict[tuple[str, str], float]:
    """Outcome distribution ``p(a, b) = <S_a, T_b>`` of a strategy against a co-strategy."""
    s, t = _as_measuring(s), _as_measuring(t)
    if s.role is not Role.STRATEGY or t.role is not Role.COSTRATEGY:
        raise ValueError("interaction needs a strategy and a co-strategy, "
                         f"got roles {s.role.value} and {t.role.value}")
    if s.shape != t.shape:
        raise FactorError(f"shape mismatch: {s.shape} vs {t.shape}")
    return {(a, b): inner(sa, tb) for a, sa in s.outcomes.items() for b, tb in t.outcomes.items()}


def simulate_interaction(os: OperationalStrategy, oc: OperationalCoStrategy,
                         s_meas: Mapping[str, np.ndarray] | None = None,
                         t_meas: Mapping[str, np.ndarray] | None = None
                         ) -> dict[tuple[str, str], float]:
    """Run the interaction round by round and measure both final memories."""
    if os.shape != oc.shape:
        raise FactorError(f"shape mismatch: {os.shape} vs {oc.shape}")
    os.check()
    oc.check()
    shape = os.shape
    s_meas = s_meas if s_meas is not None else os.measurement
    t_meas = t_meas if t_meas is not None else oc.measurement
    zr, wr = os.memory_dims[-1], oc.memory_dims[-1]
    s_meas = {"0": np.eye(zr)} if s_meas is None else s_meas
    t_meas = {"0": np.eye(wr)} if t_meas is None else t_meas
    _check_measurement(s_meas, zr, "strategy measurement")
    _check_measurement(t_meas, wr, "co-strategy measurement")

    state = LabeledOperator(oc.initial_state, (shape.x(1), ("W0", oc.memory_dims[0])))
    for i in range(1, shape.r + 1):
        try:
            state = apply_channel(state, os.round_maps[i - 1], os.in_labels(i), os.out_labels(i))
            state = apply_channel(state, oc.round_maps[i - 1], oc.in_labels(i), oc.out_labels(i))
        except FactorError as exc:
            raise FactorError(f"round {i}: {exc}") from None
    state = permute_factors(state, [f"Z{shape.r}", f"W{shape.r}"])
    out = {}
    for a, pa in s_meas.items():
        for b, qb in t_meas.items():
            out[(a, b)] = float(np.vdot(np.kron(pa, qb).conj().T, state.matrix).real)
    return out


# ---------------------------------------------------------------------------
# random instances


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_isometry(d_in: int, d_out: int, rng) -> np.ndarray:
    """Haar-distributed isometry ``C^d_in -> C^d_out`` (``d_out >= d_in``)."""
    g = rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))
    q, r = np.linalg.qr(g)
    ph = np.diagonal(r).copy()
    ph[ph == 0] = 1.0
    return q * (ph / np.abs(ph))


def random_channel(in_dims, out_dims, seed=None, env_dim: int | None = None) -> Channel:
    """Random CPTP map from a Stinespring isometry with environment ``env_dim``."""
    rng = _rng(seed)
    d_in, d_out = prod(in_dims), prod(out_dims)
    k = env_dim if env_dim is not None else max(-(-d_in // d_out), min(d_in * d_out, 16))
    k = max(k, -(-d_in // d_out))
    v = random_isometry(d_in, d_out * k, rng).reshape(d_out, k, d_in)
    kraus = [v[:, e, :] for e in range(k)]
    return Channel.from_kraus(kraus, in_dims, out_dims)


def random_density(d: int, seed=None, rank: int | None = None) -> np.ndarray:
    rng = _rng(seed)
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_measurement(d: int, seed=None, outcomes: int = 2, projective: bool = False,
                       rank: int | None = None) -> dict[str, np.ndarray]:
    """Random measurement on ``C^d`` with labels ``"0"``, ``"1"``, ...

    ``projective`` splits a Haar basis; otherwise the effects are random POVM
    elements obtained by normalizing random positive operators.
    """
    rng = _rng(seed)
    if projective:
        u = random_isometry(d, d, rng)
        if outcomes == 2:
            k = int(rng.integers(0, d + 1)) if rank is None else rank
            cuts = [0, k, d]
        else:
            cuts = [0] + sorted(rng.integers(0, d + 1, size=outcomes - 1).tolist()) + [d]
        return {str(a): u[:, cuts[a]:cuts[a + 1]] @ u[:, cuts[a]:cuts[a + 1]].conj().T
                for a in range(outcomes)}
    gs = []
    for _ in range(outcomes):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gs.append(g @ g.conj().T)
    w, v = np.linalg.eigh(sum(gs))
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return {str(a): inv_sqrt @ g @ inv_sqrt for a, g in enumerate(gs)}


def default_strategy_memory(shape: InteractionShape) -> tuple[int, ...]:
    dims, acc = [], 1
    for i in range(shape.r):
        acc *= shape.in_dims[i] * shape.out_dims[i]
        dims.append(min(MEMORY_CAP, acc))
    return tuple(dims)


def default_costrategy_memory(shape: InteractionShape) -> tuple[int, ...]:
    dims, acc = [min(MEMORY_CAP, shape.in_dims[0])], shape.in_dims[0]
    for i in range(shape.r):
        acc *= shape.out_dims[i] * (shape.in_dims[i + 1] if i + 1 < shape.r else 1)
        dims.append(min(MEMORY_CAP, acc))
    return tuple(dims)


def random_strategy(shape: InteractionShape, seed=None, memory_dims=None,
                    measurement: int | None = None) -> OperationalStrategy:
    """Seeded random operational strategy.

    ``measurement`` gives a number of outcomes for a random terminal POVM on
    ``Z_r``; by default the strategy is non-measuring.
    """
    rng = _rng(seed)
    mem = tuple(memory_dims) if memory_dims is not None else default_strategy_memory(shape)
    maps = []
    for i in range(1, shape.r + 1):
        in_dims = (shape.in_dims[i - 1],) + ((mem[i - 2],) if i > 1 else ())
        maps.append(random_channel(in_dims, (shape.out_dims[i - 1], mem[i - 1]), rng))
    meas = random_measurement(mem[-1], rng, measurement) if measurement else None
    return OperationalStrategy(shape, mem, tuple(maps), meas)


def random_costrategy(shape: InteractionShape, seed=None, memory_dims=None,
                      measurement: int | None = None, state_rank: int | None = None
                      ) -> OperationalCoStrategy:
    """Seeded random operational co-strategy (see :func:`random_strategy`)."""
    rng = _rng(seed)
    r = shape.r
    mem = tuple(memory_dims) if memory_dims is not None else default_costrategy_memory(shape)
    rho0 = random_density(shape.in_dims[0] * mem[0], rng, state_rank)
    maps = []
    for i in range(1, r + 1):
        out = (shape.in_dims[i], mem[i]) if i < r else (mem[r],)
        maps.append(random_channel((shape.out_dims[i - 1], mem[i - 1]), out, rng))
    meas = random_measurement(mem[-1], rng, measurement) if measurement else None
    return OperationalCoStrategy(shape, mem, rho0, tuple(maps), meas)


def random_measuring_strategy(shape: InteractionShape, seed=None, outcomes: int = 2,
                              role: Role = Role.STRATEGY) -> MeasuringStrategy:
    """Choi form of a random measuring (co-)strategy."""
    if Role(role) is Role.STRATEGY:
        o = random_strategy(shape, seed, measurement=outcomes)
    else:
        o = random_costrategy(shape, seed, measurement=outcomes)
    return operational_to_measuring(o)


def random_hermitian(factors, seed=None, scale: float = 1.0) -> LabeledOperator:
    """GUE-style random Hermitian operator on ``factors``."""
    rng = _rng(seed)
    d = prod(dim for _, dim in factors)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return LabeledOperator(scale * 0.5 * (g + g.conj().T), factors)
