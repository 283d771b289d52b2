"""Distance between convex hulls of strategies and a single separating measurement.

Given two finite vertex lists ``A_1..A_n`` and ``B_1..B_m`` of strategies
(or co-strategies), one SDP computes

    d = min ||sum_i l_i A_i - sum_j m_j B_j||   over convex weights l, m

together with a two-outcome measuring object ``{O0, O1}`` of the opposite
role whose difference ``H = O0 - O1`` maximizes the worst-case margin
``min_i <H, A_i> - max_j <H, B_j>``.  By minimax the two optima coincide, so
``H`` separates every pair of points of the two hulls by at least ``d``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import LabeledOperator, inner, operator_norm
from .norms import _build, saturate_costrategy, saturate_strategy_pair, solve_from_starts
from .sdp import SolverError
from .strategies import (
    InteractionShape,
    InvalidStrategyError,
    MeasuringStrategy,
    Role,
    StrategyRep,
    trivial,
    validate_measuring,
)

log = logging.getLogger(__name__)

ZERO_DISTANCE_RTOL = 1e-7
MARGIN_RTOL = 1e-6
DEFAULT_TOL_GAP = 1e-8


class DegenerateInstanceError(RuntimeError):
    """Margin verification failed even after a tighter re-solve."""

    def __init__(self, message, result=None, pair=None):
        super().__init__(message)
        self.result = result
        self.pair = pair


class ConvexStrategySet:
    """Convex hull of a nonempty list of validated strategies of one shape and role."""

    def __init__(self, vertices, tol=None):
        vertices = list(vertices)
        if not vertices:
            raise ValueError("a convex strategy set needs at least one vertex")
        shape, role = vertices[0].shape, vertices[0].role
        for k, v in enumerate(vertices):
            if not isinstance(v, StrategyRep):
                raise TypeError(f"vertex {k} is not a StrategyRep")
            if v.shape != shape or v.role is not role:
                raise ValueError(f"vertex {k} has shape/role {v.shape}/{v.role.value}, "
                                 f"expected {shape}/{role.value}")
            w = v.validate(tol)
            if not w.ok:
                raise InvalidStrategyError(f"vertex {k} fails validation: {w.worst}")
        self.vertices = vertices
        self.shape: InteractionShape = shape
        self.role: Role = role

    def __len__(self):
        return len(self.vertices)

    def point(self, weights) -> LabeledOperator:
        """The convex combination ``sum_k w_k V_k``."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(self),):
            raise ValueError(f"expected {len(self)} weights, got shape {w.shape}")
        m = sum(wk * v.op.matrix for wk, v in zip(w, self.vertices))
        return LabeledOperator(m, self.shape.canonical_factors)


@dataclass
class SeparatorResult:
    separator: MeasuringStrategy
    distance: float
    minimizing_weights: tuple
    margins: np.ndarray
    hyperplane: tuple
    closest_pair: tuple
    status: str = "verified"
    gap: float = 0.0
    residuals: dict = field(default_factory=dict)
    solution: object = field(default=None, repr=False)

    @property
    def success_probability(self) -> float:
        """Guaranteed success probability ``1/2 + d/4`` of the separator."""
        return 0.5 + 0.25 * self.distance


def _check_pair(a: ConvexStrategySet, b: ConvexStrategySet):
    if a.shape != b.shape:
        raise ValueError(f"sets have different shapes: {a.shape} vs {b.shape}")
    if a.role is not b.role:
        raise ValueError(f"sets have different roles: {a.role.value} vs {b.role.value}")


def _weights(q, prefix, n):
    w = np.array([max(float(q[f"{prefix}{k}"].matrix[0, 0].real), 0.0) for k in range(n)])
    s = w.sum()
    return w / s if s > 0 else np.full(n, 1.0 / n)


def _solve_margins(a: ConvexStrategySet, b: ConvexStrategySet, tol_gap, tol_feas, max_iter):
    """Solve the joint SDP on rescaled vertices; returns ``(d, (lambda, mu), sol, scale)``."""
    shape, sep_role = a.shape, a.role.opposite()
    scale = max(operator_norm(v.op) for v in a.vertices + b.vertices)
    a_ops = [v.op / scale for v in a.vertices]
    b_ops = [v.op / scale for v in b.vertices]
    t = _build(shape, sep_role, sets=(a_ops, b_ops))
    sol = solve_from_starts(t, shape, sep_role, 8.0, len(a_ops), len(b_ops), "distance SDP",
                            tol_gap=tol_gap, tol_feas=tol_feas, max_iter=max_iter)
    lam = _weights(sol.dual, "a", len(a_ops))
    mu = _weights(sol.dual, "b", len(b_ops))
    d = max(scale * (sol.value - 2.0), 0.0)
    return d, (lam, mu), sol, scale


def min_distance(a: ConvexStrategySet, b: ConvexStrategySet, tol_gap=DEFAULT_TOL_GAP,
                 tol_feas=1e-9, max_iter=200):
    """Minimum norm distance between the hulls.

    Returns ``(d, (lambda, mu), (R0, R1))`` with ``R0 = sum lambda_i A_i`` and
    ``R1 = sum mu_j B_j``.  Strategy sets use the strategy norm, co-strategy
    sets its dual.
    """
    _check_pair(a, b)
    d, (lam, mu), _, _ = _solve_margins(a, b, tol_gap, tol_feas, max_iter)
    return d, (lam, mu), (a.point(lam), b.point(mu))


def margin_matrix(h: LabeledOperator, a: ConvexStrategySet, b: ConvexStrategySet) -> np.ndarray:
    """``M[i, j] = <h, A_i - B_j>``."""
    ha = np.array([inner(h, v.op) for v in a.vertices])
    hb = np.array([inner(h, v.op) for v in b.vertices])
    return ha[:, None] - hb[None, :]


def coin_flip(shape: InteractionShape, role: Role) -> MeasuringStrategy:
    """The separator that ignores the interaction: both outcomes get half the trivial object."""
    half = trivial(shape, role).op * 0.5
    return MeasuringStrategy({"0": half, "1": half}, shape, role)


def _extract(a, b, tol_gap, tol_feas, max_iter) -> SeparatorResult:
    shape, sep_role = a.shape, a.role.opposite()
    d, (lam, mu), sol, scale = _solve_margins(a, b, tol_gap, tol_feas, max_iter)
    r0, r1 = a.point(lam), b.point(mu)
    vmax = max(operator_norm(v.op) for v in a.vertices + b.vertices)
    if d <= ZERO_DISTANCE_RTOL * (1.0 + vmax):
        sep = coin_flip(shape, sep_role)
        margins = np.zeros((len(a), len(b)))
        zero = LabeledOperator.zeros(shape.canonical_factors)
        return SeparatorResult(sep, 0.0, (lam, mu), margins, (zero, 0.0), (r0, r1),
                               "coin_flip", scale * sol.gap, solution=sol)
    if sep_role is Role.COSTRATEGY:
        blocks = saturate_costrategy(sol.primal, shape)
        o0, o1 = blocks["T0"], blocks["T1"]
    else:
        blocks = saturate_strategy_pair(sol.primal, shape)
        o0, o1 = blocks["S0"], blocks["S1"]
    sep = MeasuringStrategy({"0": o0.hermitian_part(), "1": o1.hermitian_part()},
                            shape, sep_role)
    h = sep["0"] - sep["1"]
    margins = margin_matrix(h, a, b)
    lo_a = min(inner(h, v.op) for v in a.vertices)
    hi_b = max(inner(h, v.op) for v in b.vertices)
    res = {"separator_ladder": validate_measuring(sep).worst[1],
           **{f"solver_{k}": scale * v for k, v in sol.feas_residuals.items()}}
    return SeparatorResult(sep, d, (lam, mu), margins, (h, 0.5 * (lo_a + hi_b)), (r0, r1),
                           "verified", scale * sol.gap, res, sol)


def separator(a: ConvexStrategySet, b: ConvexStrategySet, tol_gap=DEFAULT_TOL_GAP,
              tol_feas=1e-9, max_iter=200) -> SeparatorResult:
    """Minimum distance plus one measuring object separating the hulls by ``d``.

    Every vertex-pair margin is checked against ``d - 1e-6 (1 + d)``.  On
    failure the SDP is re-solved once at a 100x tighter gap tolerance; a
    second failure, or a re-solve the solver cannot finish, raises
    :class:`DegenerateInstanceError`.
    """
    _check_pair(a, b)
    result = None
    for attempt in range(2):
        try:
            result = _extract(a, b, tol_gap, tol_feas, max_iter)
        except SolverError as exc:
            if not attempt:
                raise
            raise DegenerateInstanceError(
                f"separator margin {result.margins[i, j]:.6e} at vertex pair ({i}, {j}) is "
                f"below d - tol = {floor:.6e} and the tightened re-solve failed: {exc}",
                result, (int(i), int(j))) from exc
        floor = result.distance - MARGIN_RTOL * (1.0 + result.distance)
        i, j = np.unravel_index(np.argmin(result.margins), result.margins.shape)
        if result.margins[i, j] >= floor:
            if attempt:
                result.status = "verified_after_retry"
            return result
        log.warning("margin %.3e at pair (%d, %d) below %.3e; re-solving",
                    result.margins[i, j], i, j, floor)
        tol_gap, tol_feas = tol_gap * 1e-2, tol_feas * 1e-2
    result.status = "degenerate"
    raise DegenerateInstanceError(
        f"separator margin {result.margins[i, j]:.6e} at vertex pair ({i}, {j}) is below "
        f"d - tol = {floor:.6e} after a tightened re-solve", result, (int(i), int(j)))


def guessing_game(sep: MeasuringStrategy, s0: StrategyRep, s1: StrategyRep) -> float:
    """Success probability ``1/2 + <O0 - O1, s0 - s1>/4`` for equiprobable ``s0``, ``s1``."""
    if len(sep.labels) != 2:
        raise ValueError(f"separator must have two outcomes, got {len(sep.labels)}")
    for s in (s0, s1):
        if s.role is not sep.role.opposite() or s.shape != sep.shape:
            raise ValueError("separator must have the opposite role and the same shape "
                             "as the two candidates")
    l0, l1 = sep.labels
    h = sep[l0] - sep[l1]
    return 0.5 + 0.25 * inner(h, s0.op - s1.op)
