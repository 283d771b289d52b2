"""Independent reference values for the norm engine.

Nothing in the engine imports this module.  The closed forms use
``numpy.linalg.eigvalsh`` rather than the package's Jacobi kernel, the
sampling oracle draws operational (co-)strategies and never touches the SDP,
and the unitary-channel oracle works on the numerical range.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .linalg import LabeledOperator
from .strategies import (
    InteractionShape,
    OperationalCoStrategy,
    OperationalStrategy,
    Role,
    random_channel,
    random_density,
    random_measurement,
    operational_to_measuring,
)

CLOSED_FORM_TOL = 1e-6
SAMPLING_TOL = 1e-7
UNITARY_TOL = 1e-10
THETA_GRID = 10_000


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    oracle_value: float
    engine_value: float | None
    method: str  # closed_form | sampling | exhaustive

    @property
    def deviation(self) -> float | None:
        if self.engine_value is None:
            return None
        return abs(self.engine_value - self.oracle_value)

    def consistent(self, tol: float | None = None) -> bool:
        """Closed forms must match the engine; sampled values must not exceed it."""
        if self.engine_value is None:
            return True
        if self.method == "sampling":
            return self.oracle_value <= self.engine_value + (SAMPLING_TOL if tol is None else tol)
        return self.deviation <= (CLOSED_FORM_TOL if tol is None else tol)


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, LabeledOperator) else np.asarray(x, dtype=np.complex128)


# ---------------------------------------------------------------------------
# sampling


def _memory_choice(rng, cap: int) -> int:
    # small memories give the extreme points most of the time
    return int(rng.choice([1, cap])) if rng.random() < 0.6 else int(rng.integers(1, cap + 1))


def _env_choice(rng) -> int:
    return 1 if rng.random() < 0.5 else int(rng.integers(1, 5))


def _sample_costrategy(shape: InteractionShape, rng) -> OperationalCoStrategy:
    r = shape.r
    mem = [_memory_choice(rng, 4) for _ in range(r + 1)]
    rank = 1 if rng.random() < 0.7 else None
    rho0 = random_density(shape.in_dims[0] * mem[0], rng, rank)
    maps = []
    for i in range(1, r + 1):
        out = (shape.in_dims[i], mem[i]) if i < r else (mem[r],)
        d_in = shape.out_dims[i - 1] * mem[i - 1]
        env = max(_env_choice(rng), -(-d_in // prod(out)))
        maps.append(random_channel((shape.out_dims[i - 1], mem[i - 1]), out, rng, env))
    meas = random_measurement(mem[r], rng, 2, projective=rng.random() < 0.8)
    return OperationalCoStrategy(shape, tuple(mem), rho0, tuple(maps), meas)


def _sample_strategy(shape: InteractionShape, rng) -> OperationalStrategy:
    r = shape.r
    mem = [_memory_choice(rng, 4) for _ in range(r)]
    maps = []
    for i in range(1, r + 1):
        in_dims = (shape.in_dims[i - 1],) + ((mem[i - 2],) if i > 1 else ())
        out = (shape.out_dims[i - 1], mem[i - 1])
        env = max(_env_choice(rng), -(-prod(in_dims) // prod(out)))
        maps.append(random_channel(in_dims, out, rng, env))
    meas = random_measurement(mem[-1], rng, 2, projective=rng.random() < 0.8)
    return OperationalStrategy(shape, tuple(mem), tuple(maps), meas)


def sample_measuring(shape: InteractionShape, role: Role, n: int, seed=None):
    """Yield ``n`` random two-outcome measuring objects of ``role`` in Choi form.

    The sampler favours pure initial states, isometric rounds, tiny memories
    and projective measurements, which is where norm-attaining objects live.
    """
    rng = np.random.default_rng(seed)
    draw = _sample_costrategy if Role(role) is Role.COSTRATEGY else _sample_strategy
    for _ in range(n):
        yield operational_to_measuring(draw(shape, rng))


def sampled_norm_lower_bound(x, shape: InteractionShape, n: int = 1000, seed=0,
                             role: Role = Role.STRATEGY, engine_value=None) -> OracleReport:
    """Best ``<O0 - O1, x>`` over ``n`` sampled counterparts of a ``role`` object.

    For ``role = STRATEGY`` the counterparts are measuring co-strategies and the
    result lower-bounds the strategy norm; otherwise it lower-bounds the dual norm.
    """
    xm = _matrix(x)
    best = 0.0
    for ms in sample_measuring(shape, Role(role).opposite(), n, seed):
        v = float(np.vdot(ms["0"].matrix - ms["1"].matrix, xm).real)
        best = max(best, abs(v))  # relabelling the outcomes flips the sign
    name = "strategy_norm" if Role(role) is Role.STRATEGY else "dual_strategy_norm"
    return OracleReport(name, best, engine_value, "sampling")


# ---------------------------------------------------------------------------
# closed forms


def state_case_oracles(x, engine: bool = False) -> tuple[OracleReport, OracleReport]:
    """Trace-norm and operator-norm oracles for an operator on a single input space.

    These are the dual norm and the norm for one round with a one-dimensional
    reply.  With ``engine=True`` the SDP values are filled in for comparison.
    """
    m = _matrix(x)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    tr, op = float(np.abs(w).sum()), float(np.abs(w).max())
    e_tr = e_op = None
    if engine:
        from .norms import dual_strategy_norm, strategy_norm

        shape = InteractionShape((m.shape[0],), (1,))
        e_op = strategy_norm(m, shape).value
        e_tr = dual_strategy_norm(m, shape).value
    return (OracleReport("dual_strategy_norm", tr, e_tr, "closed_form"),
            OracleReport("strategy_norm", op, e_op, "closed_form"))


def unitary_choi(u) -> np.ndarray:
    """Choi matrix ``sum_ij U E_ij U^* (x) E_ij`` on ``out (x) in``."""
    u = np.asarray(u, dtype=np.complex128)
    d = u.shape[0]
    omega = np.eye(d).reshape(d * d)
    vec = np.kron(u, np.eye(d)) @ omega
    return np.outer(vec, vec.conj())


def _support(v: np.ndarray, theta: float) -> float:
    """``max Re(e^{-i theta} z)`` over the numerical range of ``v``."""
    h = np.exp(-1j * theta) * v
    return float(np.linalg.eigvalsh(0.5 * (h + h.conj().T))[-1])


def numerical_range_distance(v, grid: int = THETA_GRID, tol: float = 1e-12) -> float:
    """Distance from 0 to the numerical range of ``v``.

    The range is convex, so the distance is ``max(0, -min_theta h(theta))``
    with ``h`` its support function; the minimum is bracketed on a grid and
    refined by golden-section search.
    """
    v = np.asarray(v, dtype=np.complex128)
    thetas = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    hs = np.exp(-1j * thetas)[:, None, None] * v[None]
    vals = np.linalg.eigvalsh(0.5 * (hs + hs.conj().transpose(0, 2, 1)))[:, -1]
    k = int(np.argmin(vals))
    step = thetas[1] - thetas[0]
    lo, hi = thetas[k] - step, thetas[k] + step
    g = (np.sqrt(5.0) - 1) / 2
    a, b = hi - g * (hi - lo), lo + g * (hi - lo)
    fa, fb = _support(v, a), _support(v, b)
    while hi - lo > tol:
        if fa < fb:
            hi, b, fb = b, a, fa
            a = hi - g * (hi - lo)
            fa = _support(v, a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = _support(v, b)
    best = min(vals[k], fa, fb)
    return max(0.0, -best)


def unitary_channel_diamond_oracle(u0, u1, engine: bool = False) -> OracleReport:
    """Diamond distance ``2 sqrt(1 - nu^2)`` of two unitary channels.

    ``nu`` is the distance from 0 to the numerical range of ``u0^* u1``.
    """
    u0 = np.asarray(u0, dtype=np.complex128)
    u1 = np.asarray(u1, dtype=np.complex128)
    if u0.shape != u1.shape or u0.ndim != 2 or u0.shape[0] != u0.shape[1]:
        raise ValueError("unitaries must be square matrices of equal size")
    d = u0.shape[0]
    for name, u in (("u0", u0), ("u1", u1)):
        err = float(np.abs(u.conj().T @ u - np.eye(d)).max())
        if err > UNITARY_TOL:
            raise ValueError(f"{name} is not unitary (defect {err:.3e})")
    nu = min(numerical_range_distance(u0.conj().T @ u1), 1.0)
    value = 2.0 * np.sqrt(1.0 - nu * nu)
    e = None
    if engine:
        from .norms import diamond_norm

        e = diamond_norm(unitary_choi(u0) - unitary_choi(u1), d, d).value
    return OracleReport("diamond_norm", float(value), e, "closed_form")
