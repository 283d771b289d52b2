"""Strategy norms, their duals, saturation, unit-ball decomposition and diamond norm.

``strategy_norm(x)`` maximizes ``<T0 - T1, x>`` over two-outcome measuring
co-strategies; ``dual_strategy_norm(x)`` maximizes ``<S0 - S1, x>`` over
two-outcome measuring strategies.  Both are solved as block SDPs whose
ladder constraints are relaxed to inequalities; the optimal blocks are then
inflated ("saturated") until every ladder constraint holds with equality.

Block labels: outcome blocks ``T0``/``T1`` (or ``S0``/``S1``), ladder levels
``T(i)``/``S(i)``, the scalar ``p``, and for the co-strategy-side certificate
the full-size block ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .linalg import (
    LabeledOperator,
    FactorError,
    extend,
    inner,
    operator_norm,
    partial_trace,
    psd_residual,
    require_hermitian,
    trace_norm,
)
from .sdp import BlockOperator, BlockStructure, SdpTriple, SolverError, solve
from .strategies import (
    InteractionShape,
    InvalidStrategyError,
    MeasuringStrategy,
    Role,
    StrategyRep,
    trivial,
    trivial_strategy,
    validate,
    validate_measuring,
)

SATURATION_TOL = 1e-6


class NormBoundError(ValueError):
    """The operator lies outside the unit ball it was required to be in."""

    def __init__(self, message, norm):
        super().__init__(message)
        self.norm = norm


def _scalar(v) -> LabeledOperator:
    return LabeledOperator(np.array([[v]], dtype=np.complex128), ())


def _sval(op: LabeledOperator) -> float:
    return float(op.matrix[0, 0].real)


def _names(opt_role: Role):
    """Outcome, optimizer-ladder and certificate-ladder label prefixes."""
    if opt_role is Role.COSTRATEGY:
        return "T", "T", "S"
    return "S", "S", "T"


# ---------------------------------------------------------------------------
# triple construction


def _structures(shape: InteractionShape, opt_role: Role, n_a=0, n_b=0):
    r = shape.r
    canon = shape.canonical_factors
    o, lad, cert = _names(opt_role)
    primal = [(f"{o}0", canon), (f"{o}1", canon)]
    primal += [(f"{lad}({i})", shape.level_factors(opt_role, i)) for i in range(r, 0, -1)]
    if opt_role is Role.COSTRATEGY:
        dual = [(f"S({i})", shape.strategy_level_factors(i)) for i in range(r, 0, -1)]
        dual.append(("p", ()))
    else:
        dual = [("T", canon)]
        dual += [(f"T({i})", shape.costrategy_level_factors(i)) for i in range(r, 0, -1)]
    if n_a or n_b:
        primal += [("u", ()), ("v", ())]
        dual += [(f"a{i}", ()) for i in range(n_a)] + [(f"b{j}", ()) for j in range(n_b)]
    return BlockStructure(tuple(primal)), BlockStructure(tuple(dual))


def _build(shape: InteractionShape, opt_role: Role, x: LabeledOperator | None = None,
           sets=None) -> SdpTriple:
    """Shared builder.

    With ``x`` the objective is ``<O0 - O1, x>``.  With ``sets = (A, B)`` (lists
    of vertex operators) the objective is the worst-case margin
    ``min_i <H, A_i> - max_j <H, B_j>`` over ``H = O0 - O1``, encoded through
    scalar blocks ``u = 1 + min_i``, ``v = 1 - max_j``.
    """
    opt_role = Role(opt_role)
    r = shape.r
    canon = shape.canonical_factors
    A_list, B_list = sets if sets is not None else ((), ())
    ps, ds = _structures(shape, opt_role, len(A_list), len(B_list))
    o, lad, _ = _names(opt_role)
    O0, O1 = f"{o}0", f"{o}1"
    margins = sets is not None
    a_mats = [a.matrix for a in A_list]
    b_mats = [b.matrix for b in B_list]

    def margin_psi(P, out):
        if not margins:
            return
        h = P[O0].matrix - P[O1].matrix
        u, v = _sval(P["u"]), _sval(P["v"])
        for i, a in enumerate(a_mats):
            out[f"a{i}"] = _scalar(u - np.vdot(h, a).real)
        for j, b in enumerate(b_mats):
            out[f"b{j}"] = _scalar(v + np.vdot(h, b).real)

    def margin_adj(Q, out):
        if not margins:
            return
        la = [_sval(Q[f"a{i}"]) for i in range(len(a_mats))]
        mu = [_sval(Q[f"b{j}"]) for j in range(len(b_mats))]
        g = sum(l * a for l, a in zip(la, a_mats)) - sum(m * b for m, b in zip(mu, b_mats))
        g = LabeledOperator(g, canon)
        out[O0] = out[O0] - g
        out[O1] = out[O1] + g
        out["u"] = _scalar(sum(la))
        out["v"] = _scalar(sum(mu))

    if opt_role is Role.COSTRATEGY:
        def psi(P):
            out = {f"S({r})": P[O0] + P[O1] - extend(P[f"T({r})"], canon)}
            for i in range(r - 1, 0, -1):
                tr = partial_trace(P[f"T({i + 1})"], f"X{i + 1}")
                out[f"S({i})"] = tr - extend(P[f"T({i})"], tr.factors)
            out["p"] = _scalar(P["T(1)"].trace().real)
            margin_psi(P, out)
            return BlockOperator(ds, out)

        def psi_adj(Q):
            s_r = Q[f"S({r})"]
            out = {O0: s_r, O1: s_r}
            for i in range(r, 1, -1):
                tr = partial_trace(Q[f"S({i})"], f"Y{i}")
                out[f"T({i})"] = extend(Q[f"S({i - 1})"], tr.factors) - tr
            tr = partial_trace(Q["S(1)"], "Y1")
            out["T(1)"] = LabeledOperator.identity(tr.factors, _sval(Q["p"])) - tr
            margin_adj(Q, out)
            return BlockOperator(ps, out)

        b_blocks = {"p": _scalar(1.0)}
    else:
        def psi(P):
            out = {"T": P[O0] + P[O1] - P[f"S({r})"]}
            for i in range(r, 1, -1):
                tr = partial_trace(P[f"S({i})"], f"Y{i}")
                out[f"T({i})"] = tr - extend(P[f"S({i - 1})"], tr.factors)
            out["T(1)"] = partial_trace(P["S(1)"], "Y1")
            margin_psi(P, out)
            return BlockOperator(ds, out)

        def psi_adj(Q):
            t = Q["T"]
            out = {O0: t, O1: t, f"S({r})": extend(Q[f"T({r})"], canon) - t}
            for i in range(r - 1, 0, -1):
                tr = partial_trace(Q[f"T({i + 1})"], f"X{i + 1}")
                out[f"S({i})"] = extend(Q[f"T({i})"], tr.factors) - tr
            margin_adj(Q, out)
            return BlockOperator(ps, out)

        b_blocks = {"T(1)": LabeledOperator.identity((shape.x(1),))}

    if margins:
        A = BlockOperator.zeros(ps).replace(u=_scalar(1.0), v=_scalar(1.0))
        for i in range(len(a_mats)):
            b_blocks[f"a{i}"] = _scalar(1.0)
        for j in range(len(b_mats)):
            b_blocks[f"b{j}"] = _scalar(1.0)
        key = None
    else:
        A = BlockOperator.zeros(ps).replace(**{O0: x, O1: -x})
        key = ("norm", opt_role.value, shape)
    B = BlockOperator.zeros(ds).replace(**b_blocks)
    return SdpTriple(ps, ds, A, B, psi, psi_adj, key)


def _check_x(x, shape: InteractionShape) -> LabeledOperator:
    if not isinstance(x, LabeledOperator):
        x = LabeledOperator(x, shape.canonical_factors)
    if x.factors != shape.canonical_factors:
        raise FactorError(f"operator factors {x.factors} are not the canonical "
                          f"{shape.canonical_factors}")
    require_hermitian(x)
    return x.hermitian_part()


def build_primal_triple(x, shape: InteractionShape) -> SdpTriple:
    """Triple whose primal maximizes ``<T0 - T1, x>`` over relaxed co-strategy ladders."""
    return _build(shape, Role.COSTRATEGY, _check_x(x, shape))


def build_dual_norm_triple(x, shape: InteractionShape) -> SdpTriple:
    """Triple whose primal maximizes ``<S0 - S1, x>`` over relaxed strategy ladders."""
    return _build(shape, Role.STRATEGY, _check_x(x, shape))


def build_margin_triple(a_ops, b_ops, shape: InteractionShape, opt_role: Role) -> SdpTriple:
    """Triple maximizing ``min_i <H, A_i> - max_j <H, B_j>`` over measuring ``opt_role`` objects."""
    return _build(shape, opt_role, None, (list(a_ops), list(b_ops)))


def strict_start(shape: InteractionShape, opt_role: Role, c: float, n_a=0, n_b=0):
    """Strictly feasible primal and dual points.

    Primal: scaled identities with ``delta = 1/(2(r+1))``.  Dual: the outcome
    constraint is met with margin ``c - ||objective|| > 0`` and every ladder
    level carries twice the mass needed to dominate the level above.
    """
    opt_role = Role(opt_role)
    r = shape.r
    delta = 1.0 / (2 * (r + 1))
    ps, ds = _structures(shape, opt_role, n_a, n_b)
    o, lad, _ = _names(opt_role)
    side = shape.in_dims if opt_role is Role.COSTRATEGY else shape.out_dims
    other = shape.out_dims if opt_role is Role.COSTRATEGY else shape.in_dims
    P = {}
    for i in range(1, r + 1):
        P[f"{lad}({i})"] = LabeledOperator.identity(shape.level_factors(opt_role, i),
                                                    (1 - i * delta) / prod(side[:i]))
    top = (1 - (r + 1) * delta) / (2 * prod(side))
    P[f"{o}0"] = P[f"{o}1"] = LabeledOperator.identity(shape.canonical_factors, top)
    if n_a or n_b:
        P["u"] = P["v"] = _scalar(0.5)
    Q = {}
    if opt_role is Role.COSTRATEGY:
        s = c
        Q[f"S({r})"] = LabeledOperator.identity(shape.strategy_level_factors(r), s)
        for i in range(r, 1, -1):
            s = 2 * s * other[i - 1]
            Q[f"S({i - 1})"] = LabeledOperator.identity(shape.strategy_level_factors(i - 1), s)
        Q["p"] = _scalar(2 * s * other[0])
    else:
        Q["T"] = LabeledOperator.identity(shape.canonical_factors, c)
        t = 2 * c
        Q[f"T({r})"] = LabeledOperator.identity(shape.costrategy_level_factors(r), t)
        for i in range(r - 1, 0, -1):
            t = 2 * t * other[i]
            Q[f"T({i})"] = LabeledOperator.identity(shape.costrategy_level_factors(i), t)
    for i in range(n_a):
        Q[f"a{i}"] = _scalar(2.0 / n_a)
    for j in range(n_b):
        Q[f"b{j}"] = _scalar(2.0 / n_b)
    return BlockOperator(ps, P), BlockOperator(ds, Q)


# Multipliers on the dual margin of the strict start for successive attempts.
# Near the optimum the interior-point method can stall just short of a tight
# gap tolerance; where it stalls depends on the path, so a different interior
# start usually finishes.  The last attempt uses the solver's own start.
RESTART_SCALES = (1.0, 2.0, 0.75)


def solve_from_starts(t: SdpTriple, shape: InteractionShape, opt_role: Role, c: float,
                      n_a=0, n_b=0, what="norm SDP", **opts):
    """Solve ``t`` from the strict start with margin ``c``, restarting on failure.

    ``c`` must stay a valid margin when scaled by every entry of
    ``RESTART_SCALES``.  Returns the first optimal solution; raises
    :class:`SolverError` carrying the last attempt when none is optimal.
    """
    notes = []
    for k in RESTART_SCALES + (None,):
        p0, q0 = (None, None) if k is None else strict_start(shape, opt_role, c * k, n_a, n_b)
        sol = solve(t, primal_start=p0, dual_start=q0, **opts)
        if sol.status == "optimal":
            return sol
        notes.append(f"{sol.status}: {sol.diagnostics}")
    raise SolverError(f"{what} failed from {len(notes)} starts; " + " | ".join(notes), sol)


# ---------------------------------------------------------------------------
# saturation


def _slack_check(q, what, tol):
    res = psd_residual(q) if isinstance(q, LabeledOperator) else max(0.0, -q)
    if res > tol:
        raise InvalidStrategyError(f"input is infeasible: slack {what} has negative part "
                                   f"{res:.3e} > tol {tol:.3e}")


def _tol_for(blocks, tol):
    if tol is not None:
        return tol
    scale = max(float(np.abs(op.matrix).max()) for op in blocks.values())
    return SATURATION_TOL * max(1.0, scale)


def _inflate_costrategy_levels(levels, shape, base_trace, tol):
    """Raise ``T(1..r)`` so ``tr T(1) = base_trace`` and ``tr_Xi T(i) = T(i-1) (x) I``."""
    d1 = shape.in_dims[0]
    t1 = levels["T(1)"]
    gap = base_trace - t1.trace().real
    _slack_check(gap, "tr T(1)", tol)
    out = {"T(1)": t1 + LabeledOperator.identity(t1.factors, gap / d1)}
    for i in range(2, shape.r + 1):
        t_i = levels[f"T({i})"]
        tr = partial_trace(t_i, f"X{i}")
        q = extend(out[f"T({i - 1})"], tr.factors) - tr
        _slack_check(q, f"at level {i}", tol)
        out[f"T({i})"] = t_i + extend(q, t_i.factors) / shape.in_dims[i - 1]
    return out


def _inflate_strategy_levels(levels, shape, p, tol):
    """Raise ``S(1..r)`` so ``tr_Y1 S(1) = p I`` and ``tr_Yi S(i) = S(i-1) (x) I``."""
    s1 = levels["S(1)"]
    tr = partial_trace(s1, "Y1")
    q = LabeledOperator.identity(tr.factors, p) - tr
    _slack_check(q, "at level 1", tol)
    out = {"S(1)": s1 + extend(q, s1.factors) / shape.out_dims[0]}
    for i in range(2, shape.r + 1):
        s_i = levels[f"S({i})"]
        tr = partial_trace(s_i, f"Y{i}")
        q = extend(out[f"S({i - 1})"], tr.factors) - tr
        _slack_check(q, f"at level {i}", tol)
        out[f"S({i})"] = s_i + extend(q, s_i.factors) / shape.out_dims[i - 1]
    return out


def _fill_outcomes(o0, o1, top, tol):
    d = top - o0 - o1
    _slack_check(d, "of the outcome sum", tol)
    half = d * 0.5
    return o0 + half, o1 + half


def _get(blocks, label):
    return blocks[label] if not isinstance(blocks, BlockOperator) else blocks.blocks[label]


def saturate_costrategy(blocks, shape: InteractionShape, tol: float | None = None) -> dict:
    """Inflate feasible ``T0, T1, T(r)..T(1)`` until all ladder constraints are tight.

    ``T0 - T1`` is unchanged and ``T0 + T1`` becomes a co-strategy.
    """
    blocks = dict(blocks.blocks) if isinstance(blocks, BlockOperator) else dict(blocks)
    tol = _tol_for(blocks, tol)
    levels = _inflate_costrategy_levels(blocks, shape, 1.0, tol)
    top = extend(levels[f"T({shape.r})"], shape.canonical_factors)
    t0, t1 = _fill_outcomes(blocks["T0"], blocks["T1"], top, tol)
    return {"T0": t0, "T1": t1, **levels}


def saturate_strategy(blocks, p: float, shape: InteractionShape, tol: float | None = None) -> dict:
    """Inflate dual-feasible ``S(r)..S(1)`` so ``S(r)`` becomes ``p`` times a strategy.

    Each level only grows, so ``S(r) >= +-x`` is preserved; ``p`` is unchanged.
    """
    blocks = dict(blocks.blocks) if isinstance(blocks, BlockOperator) else dict(blocks)
    if isinstance(p, LabeledOperator):
        p = _sval(p)
    tol = _tol_for(blocks, tol)
    levels = _inflate_strategy_levels(blocks, shape, p, tol)
    return {**levels, "p": p}


def saturate_strategy_pair(blocks, shape: InteractionShape, tol: float | None = None) -> dict:
    """Counterpart of :func:`saturate_costrategy` for ``S0, S1, S(r)..S(1)``."""
    blocks = dict(blocks.blocks) if isinstance(blocks, BlockOperator) else dict(blocks)
    tol = _tol_for(blocks, tol)
    levels = _inflate_strategy_levels(blocks, shape, 1.0, tol)
    s0, s1 = _fill_outcomes(blocks["S0"], blocks["S1"], levels[f"S({shape.r})"], tol)
    return {"S0": s0, "S1": s1, **levels}


def saturate_costrategy_certificate(blocks, shape: InteractionShape,
                                    tol: float | None = None) -> dict:
    """Counterpart of :func:`saturate_strategy` for ``T, T(r)..T(1)`` with ``p = tr T(1)``."""
    blocks = dict(blocks.blocks) if isinstance(blocks, BlockOperator) else dict(blocks)
    tol = _tol_for(blocks, tol)
    p = blocks["T(1)"].trace().real
    levels = _inflate_costrategy_levels(blocks, shape, p, tol)
    top = extend(levels[f"T({shape.r})"], shape.canonical_factors)
    _slack_check(top - blocks["T"], "of the top level", tol)
    return {"T": top, **levels, "p": p}


# ---------------------------------------------------------------------------
# norms


@dataclass
class NormResult:
    """Optimal value with a saturated optimizer and a certificate ``(p, S)``.

    ``optimizer`` is a two-outcome measuring object whose difference attains
    the value; ``certificate_op`` is a (co-)strategy with ``-p S <= x <= p S``.
    """

    value: float
    optimizer: MeasuringStrategy
    certificate_p: float
    certificate_op: StrategyRep
    gap: float
    primal_value: float
    dual_value: float
    residuals: dict = field(default_factory=dict)
    status: str = "optimal"
    iterations: int = 0
    solution: object = field(default=None, repr=False)

    @property
    def certificate(self):
        return self.certificate_p, self.certificate_op

    def scaled(self, c: float) -> "NormResult":
        """Result for ``c * x`` (``c > 0``); optimizer and certificate operator are unchanged."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        res = dict(self.residuals)
        for k in ("sandwich", "objective_drift"):
            if k in res:
                res[k] *= c
        return NormResult(c * self.value, self.optimizer, c * self.certificate_p,
                          self.certificate_op, c * self.gap, c * self.primal_value,
                          c * self.dual_value, res, self.status, self.iterations, self.solution)


def _sandwich(p, s: StrategyRep, x: LabeledOperator) -> float:
    ps = s.op * p
    return max(psd_residual(ps - x), psd_residual(ps + x))


def _solve_norm(x, shape, opt_role, tol_gap, tol_feas, max_iter) -> NormResult:
    opt_role = Role(opt_role)
    x = _check_x(x, shape)
    cert_role = opt_role.opposite()
    c = operator_norm(x)
    o = "T" if opt_role is Role.COSTRATEGY else "S"
    if c == 0.0:
        half = trivial(shape, opt_role).op * 0.5
        opt = MeasuringStrategy({"0": half, "1": half}, shape, opt_role)
        return NormResult(0.0, opt, 0.0, trivial(shape, cert_role), 0.0, 0.0, 0.0,
                          {"sandwich": 0.0})

    xs = x / c
    t = _build(shape, opt_role, xs)
    sol = solve_from_starts(t, shape, opt_role, 2.0, tol_gap=tol_gap, tol_feas=tol_feas,
                            max_iter=max_iter)

    if opt_role is Role.COSTRATEGY:
        opt_blocks = saturate_costrategy(sol.primal, shape)
        cert_blocks = saturate_strategy(sol.dual, sol.dual["p"], shape)
        p_hat = cert_blocks["p"]
        top = cert_blocks[f"S({shape.r})"]
    else:
        opt_blocks = saturate_strategy_pair(sol.primal, shape)
        cert_blocks = saturate_costrategy_certificate(sol.dual, shape)
        p_hat = cert_blocks["p"]
        top = cert_blocks["T"]

    opt = MeasuringStrategy({"0": opt_blocks[f"{o}0"], "1": opt_blocks[f"{o}1"]},
                            shape, opt_role)
    cert = StrategyRep((top / p_hat).hermitian_part(), shape, cert_role)
    p = c * p_hat
    res = {f"solver_{k}": c * v for k, v in sol.feas_residuals.items()}
    res["optimizer_ladder"] = validate_measuring(opt).worst[1]
    res["certificate_ladder"] = validate(cert.op, shape, cert_role).worst[1]
    res["sandwich"] = _sandwich(p, cert, x)
    res["objective_drift"] = abs(inner(opt["0"] - opt["1"], x) - c * sol.primal_value)
    return NormResult(c * sol.value, opt, p, cert, c * sol.gap, c * sol.primal_value,
                      c * sol.dual_value, res, sol.status, sol.iterations, sol)


def strategy_norm(x, shape: InteractionShape, tol_gap=1e-8, tol_feas=1e-8,
                  max_iter=200) -> NormResult:
    """``max <T0 - T1, x>`` over two-outcome measuring co-strategies.

    The optimizer is a measuring co-strategy; the certificate is a strategy
    ``S`` with ``-p S <= x <= p S`` and ``p`` equal to the value.
    """
    return _solve_norm(x, shape, Role.COSTRATEGY, tol_gap, tol_feas, max_iter)


def dual_strategy_norm(x, shape: InteractionShape, tol_gap=1e-8, tol_feas=1e-8,
                       max_iter=200) -> NormResult:
    """``max <S0 - S1, x>`` over two-outcome measuring strategies."""
    return _solve_norm(x, shape, Role.STRATEGY, tol_gap, tol_feas, max_iter)


def norm(x, shape: InteractionShape, role: Role = Role.STRATEGY, **opts) -> NormResult:
    """Norm appropriate for an operator built from objects of ``role``.

    Differences of strategies are measured by :func:`strategy_norm`, differences
    of co-strategies by :func:`dual_strategy_norm`.
    """
    if Role(role) is Role.STRATEGY:
        return strategy_norm(x, shape, **opts)
    return dual_strategy_norm(x, shape, **opts)


def decompose_unit_ball(x, shape: InteractionShape, tol=1e-8, result: NormResult | None = None
                        ) -> MeasuringStrategy:
    """Write ``x`` as ``S0 - S1`` for a measuring strategy ``{S0, S1}``.

    Requires ``strategy_norm(x) <= 1 + tol``; the sum ``S0 + S1`` mixes the
    certificate strategy with the trivial strategy.
    """
    x = _check_x(x, shape)
    res = result if result is not None else strategy_norm(x, shape)
    if res.value > 1 + tol:
        raise NormBoundError(f"strategy norm {res.value:.12g} exceeds 1", res.value)
    p, cert = res.certificate
    s = cert.op * p + trivial_strategy(shape).op * (1 - p)
    return MeasuringStrategy({"0": (s + x) * 0.5, "1": (s - x) * 0.5}, shape, Role.STRATEGY)


@dataclass
class MaxOutputResult:
    value: float
    certificate_p: float
    certificate_op: StrategyRep
    witness: StrategyRep
    norm: NormResult

    @property
    def certificate(self):
        return self.certificate_p, self.certificate_op


def max_output_probability(ms: MeasuringStrategy, outcome, **opts) -> MaxOutputResult:
    """Largest probability with which a counterpart can force ``outcome``.

    Equals the norm of the outcome operator; ``witness`` is the counterpart
    (co-)strategy ``T0 + T1`` of the saturated optimizer, which attains it.
    """
    s_a = ms[outcome]
    res = norm(s_a, ms.shape, ms.role, **opts)
    witness = StrategyRep(res.optimizer.total().hermitian_part(), ms.shape, ms.role.opposite())
    return MaxOutputResult(res.value, res.certificate_p, res.certificate_op, witness, res)


def diamond_norm(choi, in_dim: int, out_dim: int, **opts) -> NormResult:
    """Diamond norm of a Hermitian-preserving map given its Choi matrix on ``out (x) in``."""
    shape = InteractionShape((in_dim,), (out_dim,))
    m = choi.matrix if isinstance(choi, LabeledOperator) else np.asarray(choi)
    return strategy_norm(LabeledOperator(m, shape.canonical_factors), shape, **opts)


def trace_norm_lower_bound(x, shape: InteractionShape, role: Role = Role.STRATEGY) -> float:
    """``||x||_1 / dim`` where ``dim`` is the counterpart's message dimension."""
    d = shape.dim_in if Role(role) is Role.STRATEGY else shape.dim_out
    return trace_norm(x) / d
