"""Block-diagonal semidefinite programs in linear-map form and a dense IPM.

A triple ``(psi, A, B)`` encodes::

    primal:  maximize <A, P>  subject to  psi(P) <= B,  P >= 0
    dual:    minimize <B, Q>  subject to  psi_adj(Q) >= A,  Q >= 0

The solver rewrites this in standard conic form with the slack
``Xi = B - psi(P)`` and runs a primal-dual path-following method with
Nesterov-Todd scaling and Mehrotra predictor-corrector steps.  All blocks are
complex Hermitian; linear constraints are expressed in an orthonormal real
basis of each Hermitian block (``hvec`` coordinates).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import prod
from typing import Callable, Mapping

import numpy as np
import scipy.linalg

from . import kernels
from .linalg import LabeledOperator, FactorError, psd_residual, positive_part_norm

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
REFINE_STEPS = 10


class SolverError(RuntimeError):
    """The interior-point method could not produce an optimal solution."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# ---------------------------------------------------------------------------
# block containers


@dataclass(frozen=True)
class BlockStructure:
    """Ordered ``(label, factors)`` blocks; an empty factor list is a scalar block."""

    blocks: tuple

    def __post_init__(self):
        blocks = []
        for label, factors in self.blocks:
            if isinstance(factors, int):
                factors = () if factors == 1 else ((str(label), factors),)
            blocks.append((str(label), tuple((str(l), int(d)) for l, d in factors)))
        labels = [b[0] for b in blocks]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate block labels {labels}")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(prod(d for _, d in factors) for _, factors in self.blocks)

    def factors(self, label):
        for name, factors in self.blocks:
            if name == label:
                return factors
        raise KeyError(label)

    @property
    def real_dim(self) -> int:
        return sum(n * n for n in self.dims)


class BlockOperator:
    """Block-diagonal Hermitian operator: one :class:`LabeledOperator` per block."""

    __slots__ = ("structure", "blocks")

    def __init__(self, structure: BlockStructure, blocks: Mapping[str, LabeledOperator]):
        missing = set(structure.labels) - set(blocks)
        extra = set(blocks) - set(structure.labels)
        if missing or extra:
            raise ValueError(f"block labels mismatch: missing {sorted(missing)}, "
                             f"unexpected {sorted(extra)}")
        ordered = {}
        for label, factors in structure.blocks:
            op = blocks[label]
            if not isinstance(op, LabeledOperator):
                op = LabeledOperator(op, factors)
            if op.factors != factors:
                raise FactorError(f"block {label!r} has factors {op.factors}, expected {factors}")
            ordered[label] = op
        self.structure = structure
        self.blocks = ordered

    @classmethod
    def zeros(cls, structure: BlockStructure) -> "BlockOperator":
        return cls(structure, {l: LabeledOperator.zeros(f) for l, f in structure.blocks})

    @classmethod
    def identity(cls, structure: BlockStructure, scale=1.0) -> "BlockOperator":
        return cls(structure, {l: LabeledOperator.identity(f, scale) for l, f in structure.blocks})

    @classmethod
    def from_matrices(cls, structure: BlockStructure, mats) -> "BlockOperator":
        return cls(structure, {l: LabeledOperator(m, f)
                               for (l, f), m in zip(structure.blocks, mats)})

    def matrices(self) -> list[np.ndarray]:
        return [op.matrix for op in self.blocks.values()]

    def __getitem__(self, label) -> LabeledOperator:
        return self.blocks[label]

    def replace(self, **blocks) -> "BlockOperator":
        new = dict(self.blocks)
        new.update(blocks)
        return BlockOperator(self.structure, new)

    def _zip(self, other, fn):
        if self.structure != other.structure:
            raise ValueError("block structures differ")
        return BlockOperator(self.structure, {l: fn(a, other.blocks[l])
                                              for l, a in self.blocks.items()})

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, c):
        return BlockOperator(self.structure, {l: a * c for l, a in self.blocks.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def inner(self, other) -> float:
        if self.structure != other.structure:
            raise ValueError("block structures differ")
        return float(sum(np.vdot(a.matrix, other.blocks[l].matrix).real
                         for l, a in self.blocks.items()))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def psd_residual(self) -> float:
        return max(psd_residual(op) for op in self.blocks.values())

    def positive_part_norm(self) -> float:
        return max(positive_part_norm(op) for op in self.blocks.values())

    def hermitian_defect(self) -> float:
        return max(op.hermitian_defect() for op in self.blocks.values())

    def __repr__(self):
        return f"BlockOperator({list(zip(self.structure.labels, self.structure.dims))})"


@dataclass(frozen=True)
class SdpTriple:
    """``(psi, A, B)`` with ``psi: Her(primal) -> Her(dual)`` and its adjoint.

    ``cache_key`` (optional, hashable) identifies ``psi`` across triples so the
    solver can reuse the constraint matrix it derives from ``psi_adj``.
    """

    primal_structure: BlockStructure
    dual_structure: BlockStructure
    A: BlockOperator
    B: BlockOperator
    psi: Callable[[BlockOperator], BlockOperator]
    psi_adj: Callable[[BlockOperator], BlockOperator]
    cache_key: object = None

    def __post_init__(self):
        if self.A.structure != self.primal_structure:
            raise ValueError("A must live on the primal structure")
        if self.B.structure != self.dual_structure:
            raise ValueError("B must live on the dual structure")


def random_block_operator(structure: BlockStructure, rng) -> BlockOperator:
    mats = []
    for n in structure.dims:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mats.append(0.5 * (g + g.conj().T))
    return BlockOperator.from_matrices(structure, mats)


def check_adjoint(t: SdpTriple, probes: int = 20, seed=0) -> float:
    """Max normalized ``|<psi(T), S> - <T, psi_adj(S)>|`` over random Hermitian probes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        tp = random_block_operator(t.primal_structure, rng)
        sp = random_block_operator(t.dual_structure, rng)
        lhs = t.psi(tp).inner(sp)
        rhs = tp.inner(t.psi_adj(sp))
        worst = max(worst, abs(lhs - rhs) / (tp.norm() * sp.norm()))
    return worst


# ---------------------------------------------------------------------------
# real coordinates of Hermitian blocks


@lru_cache(maxsize=None)
def _hvec_basis(n: int):
    """Index data for the orthonormal basis of ``Her(n)``.

    Coordinates: diagonal entries, then ``sqrt2*Re`` and ``sqrt2*Im`` of the
    strict upper triangle (row-major).  Returns ``(rows, cols, diag_idx,
    iu_i, iu_j, T)`` where ``T`` maps coordinates to row-major ``vec``.
    """
    iu_i, iu_j = np.triu_indices(n, 1)
    k = len(iu_i)
    s = 1.0 / np.sqrt(2.0)
    T = np.zeros((n * n, n * n), dtype=np.complex128)
    d = np.arange(n)
    T[d * n + d, d] = 1.0
    c = n + np.arange(k)
    T[iu_i * n + iu_j, c] = s
    T[iu_j * n + iu_i, c] = s
    c2 = n + k + np.arange(k)
    T[iu_i * n + iu_j, c2] = 1j * s
    T[iu_j * n + iu_i, c2] = -1j * s
    T.setflags(write=False)
    # each coordinate touches at most two vec positions: gather data
    pos1 = np.concatenate([d * n + d, iu_i * n + iu_j, iu_i * n + iu_j])
    pos2 = np.concatenate([d * n + d, iu_j * n + iu_i, iu_j * n + iu_i])
    w1 = np.concatenate([np.ones(n), np.full(k, s), np.full(k, 1j * s)])
    w2 = np.concatenate([np.zeros(n), np.full(k, s), np.full(k, -1j * s)])
    for a in (pos1, pos2, w1, w2):
        a.setflags(write=False)
    return T, pos1, pos2, w1, w2


@lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n, 1)


def hvec(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    iu_i, iu_j = _triu(n)
    up = m[iu_i, iu_j]
    r2 = np.sqrt(2.0)
    return np.concatenate([np.diagonal(m).real, r2 * up.real, r2 * up.imag])


def hmat(v: np.ndarray, n: int) -> np.ndarray:
    T = _hvec_basis(n)[0]
    return (T @ v).reshape(n, n)


def _congruence_matrix(w: np.ndarray) -> np.ndarray:
    """Real matrix of ``H -> W H W`` in hvec coordinates (``W`` Hermitian)."""
    n = w.shape[0]
    _, p1, p2, w1, w2 = _hvec_basis(n)
    K = np.kron(w, w.T)  # row-major vec(W H W) = (W kron W^T) vec(H)
    KT = K[:, p1] * w1 + K[:, p2] * w2
    out = np.conj(w1)[:, None] * KT[p1, :] + np.conj(w2)[:, None] * KT[p2, :]
    return out.real


# ---------------------------------------------------------------------------
# solver


@dataclass
class SolverOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    primal_start: BlockOperator | None = None
    dual_start: BlockOperator | None = None


@dataclass
class SdpSolution:
    primal: BlockOperator
    dual: BlockOperator
    primal_value: float
    dual_value: float
    gap: float
    feas_residuals: dict
    status: str
    iterations: int = 0
    history: list = field(default_factory=list)
    diagnostics: str = ""

    @property
    def value(self) -> float:
        return 0.5 * (self.primal_value + self.dual_value)

    @property
    def weak_duality_ok(self) -> bool:
        return all(h["weak_duality_ok"] for h in self.history)


_G_CACHE: dict = {}


def _constraint_matrices(t: SdpTriple) -> list[np.ndarray]:
    """Per primal block ``G_b`` with column ``k`` = hvec of block ``b`` of ``psi_adj(E_k)``."""
    if t.cache_key is not None and t.cache_key in _G_CACHE:
        return _G_CACHE[t.cache_key]
    ps, ds = t.primal_structure, t.dual_structure
    m = ds.real_dim
    Gs = [np.zeros((n * n, m)) for n in ps.dims]
    zero = BlockOperator.zeros(ds)
    col = 0
    for (label, factors), n in zip(ds.blocks, ds.dims):
        T = _hvec_basis(n)[0]
        for c in range(n * n):
            e = LabeledOperator(T[:, c].reshape(n, n), factors)
            img = t.psi_adj(zero.replace(**{label: e}))
            for b, mat in enumerate(img.matrices()):
                Gs[b][:, col] = hvec(0.5 * (mat + mat.conj().T))
            col += 1
    for g in Gs:
        g.setflags(write=False)
    if t.cache_key is not None:
        _G_CACHE[t.cache_key] = Gs
    return Gs


@dataclass(frozen=True)
class _BlockMap:
    """One block's constraint matrix as ``[I | R]`` over dual coordinates.

    Block coordinates map to ``eye`` one-to-one with unit weight; ``rest``
    columns carry the dense remainder ``R`` (rows: block coordinates).
    """

    eye: np.ndarray
    rest: np.ndarray
    R: np.ndarray

    def key(self):
        return (self.eye.tobytes(), self.rest.tobytes(), self.R.tobytes())


def _compress(G: np.ndarray, tol=1e-14) -> _BlockMap:
    """Split ``G`` into an identity part (when present) and its other nonzero columns."""
    rows = G.shape[0]
    nz = np.flatnonzero(np.abs(G).max(axis=0) > 0)
    unit = [k for k in nz
            if np.count_nonzero(np.abs(G[:, k]) > tol) == 1 and abs(G[:, k].max() - 1.0) <= tol]
    hit = {}
    for k in unit:
        row = int(np.argmax(G[:, k]))
        hit.setdefault(row, k)
    if len(hit) == rows:
        eye = np.array([hit[i] for i in range(rows)], dtype=np.intp)
        rest = np.setdiff1d(nz, eye)
    else:
        eye, rest = np.zeros(0, dtype=np.intp), nz
    return _BlockMap(eye, rest, np.ascontiguousarray(G[:, rest]))


class _Problem:
    """Standard form: min <C, X> s.t. calA(X) = b, X >= 0 over all cone blocks.

    Cone blocks are the primal blocks followed by the slack blocks; the slack
    part of ``calA`` is the identity in hvec coordinates.  Each block's
    constraint matrix is kept as an identity part plus a thin dense remainder,
    and blocks with the same matrix are grouped so their congruence matrices
    are summed before entering the Schur complement.
    """

    def __init__(self, t: SdpTriple):
        self.t = t
        self.np_ = len(t.primal_structure.dims)
        self.dims = list(t.primal_structure.dims) + list(t.dual_structure.dims)
        self.m = t.dual_structure.real_dim
        self.offsets = np.cumsum([0] + [n * n for n in t.dual_structure.dims])
        self.b = np.concatenate([hvec(m) for m in t.B.matrices()])
        self.C = [-m for m in t.A.matrices()] + [np.zeros((n, n)) for n in t.dual_structure.dims]
        self.maps = [_compress(G) for G in _constraint_matrices(t)]
        empty = np.zeros(0, dtype=np.intp)
        for j in range(len(self.dims) - self.np_):
            n2 = self.offsets[j + 1] - self.offsets[j]
            self.maps.append(_BlockMap(np.arange(self.offsets[j], self.offsets[j + 1]),
                                       empty, np.zeros((n2, 0))))
        groups: dict = {}
        for b, bm in enumerate(self.maps):
            groups.setdefault(bm.key(), []).append(b)
        self.groups = list(groups.values())

    def A_op(self, X) -> np.ndarray:
        out = np.zeros(self.m)
        for bm, x in zip(self.maps, X):
            h = hvec(x)
            if bm.eye.size:
                out[bm.eye] += h
            if bm.rest.size:
                out[bm.rest] += h @ bm.R
        return out

    def A_adj(self, y) -> list[np.ndarray]:
        out = []
        for bm, n in zip(self.maps, self.dims):
            v = bm.R @ y[bm.rest]
            if bm.eye.size:
                v = v + y[bm.eye]
            out.append(hmat(v, n))
        return out

    def schur(self, Ws) -> np.ndarray:
        M = np.zeros((self.m, self.m))
        for g in self.groups:
            bm = self.maps[g[0]]
            H = _congruence_matrix(Ws[g[0]])
            for b in g[1:]:
                H += _congruence_matrix(Ws[b])
            e, r, R = bm.eye, bm.rest, bm.R
            if e.size:
                M[np.ix_(e, e)] += H
            if r.size:
                HR = H @ R
                M[np.ix_(r, r)] += R.T @ HR
                if e.size:
                    M[np.ix_(e, r)] += HR
                    M[np.ix_(r, e)] += HR.T
        return 0.5 * (M + M.T)


def _herm(m):
    return 0.5 * (m + m.conj().T)


def _ip(X, Z) -> float:
    return float(sum(np.vdot(x, z).real for x, z in zip(X, Z)))


def _nt_scaling(X, Z):
    """Per block ``(G, lam)`` with ``G* Z G = G^-1 X G^-* = diag(lam)``."""
    out = []
    for x, z in zip(X, Z):
        L = np.linalg.cholesky(x)
        w, U = kernels.eigh(_herm(L.conj().T @ z @ L))
        if w[-1] <= 0:
            raise np.linalg.LinAlgError("scaled dual block not positive definite")
        G = (L @ U) * w ** -0.25
        out.append((G, np.sqrt(w)))
    return out


def _max_step(lam, dM) -> float:
    """Largest ``a`` with ``diag(lam) + a dM >= 0``."""
    s = 1.0 / np.sqrt(lam)
    w = kernels.eigh(_herm(dM * s[:, None] * s[None, :]))[0]
    mn = w[-1]
    return np.inf if mn >= 0 else -1.0 / mn


def _check_interior(mats, what):
    for i, m in enumerate(mats):
        try:
            np.linalg.cholesky(_herm(m))
        except np.linalg.LinAlgError:
            raise ValueError(f"{what} is not strictly interior (block {i})") from None


def _default_start(p: _Problem):
    bmax = float(np.abs(p.b).max()) if p.m else 0.0
    cmax = max(float(np.linalg.norm(c)) for c in p.C)
    xi = 10.0 * max(1.0, bmax)
    zeta = 10.0 * max(1.0, cmax)
    X = [xi * np.eye(n) for n in p.dims]
    Z = [zeta * np.eye(n) for n in p.dims]
    return X, np.zeros(p.m), Z


def _start_from(t: SdpTriple, p: _Problem, opts: SolverOptions):
    X, y, Z = _default_start(p)
    if opts.primal_start is not None:
        P = opts.primal_start
        slack = t.B - t.psi(P)
        X = [_herm(m) for m in P.matrices()] + [_herm(m) for m in slack.matrices()]
        _check_interior(X, "primal start")
    if opts.dual_start is not None:
        Q = opts.dual_start
        y = -np.concatenate([hvec(_herm(m)) for m in Q.matrices()])
        Zp = t.psi_adj(Q) - t.A
        Z = [_herm(m) for m in Zp.matrices()] + [_herm(m) for m in Q.matrices()]
        _check_interior(Z, "dual start")
    return X, y, Z


def _residuals(p: _Problem, X, y, Z):
    rp = p.b - p.A_op(X)
    Ay = p.A_adj(y)
    Rd = [_herm(c - a - z) for c, a, z in zip(p.C, Ay, Z)]
    return rp, Rd


def _schur_solve(p, Ws, cho, rhs):
    """Preconditioned CG on the exact Schur operator, started from the Cholesky solve.

    Near the optimum the dense factor alone is accurate to roughly
    ``cond(W)**2 * eps``; CG against the operator recovers most of the rest.
    """
    def apply(v):
        return p.A_op([W @ a @ W for W, a in zip(Ws, p.A_adj(v))])

    x = scipy.linalg.cho_solve(cho, rhs)
    r = rhs - apply(x)
    stop = 1e-15 * (1.0 + np.linalg.norm(rhs))
    z = scipy.linalg.cho_solve(cho, r)
    d = z.copy()
    rz = r @ z
    for _ in range(REFINE_STEPS):
        if not np.linalg.norm(r) > stop or rz <= 0:
            break
        q = apply(d)
        dq = d @ q
        if dq <= 0:
            break
        a = rz / dq
        x = x + a * d
        r = r - a * q
        z = scipy.linalg.cho_solve(cho, r)
        rz, rz_old = r @ z, rz
        d = z + (rz / rz_old) * d
    return x


def _direction(p, scal, Rc_list, rp, Rd, cho):
    """Solve the NT Newton system for given scaled complementarity targets."""
    Ds, GDG = [], []
    for (G, lam), Rc in zip(scal, Rc_list):
        D = 2.0 * Rc / (lam[:, None] + lam[None, :])
        Ds.append(D)
        GDG.append(G @ D @ G.conj().T)
    Ws = [G @ G.conj().T for G, _ in scal]
    rhs = rp - p.A_op([gdg - W @ rd @ W for gdg, W, rd in zip(GDG, Ws, Rd)])
    dy = _schur_solve(p, Ws, cho, rhs)
    Ady = p.A_adj(dy)
    dZ = [_herm(rd - a) for rd, a in zip(Rd, Ady)]
    dXs = [_herm(D - G.conj().T @ dz @ G) for D, (G, _), dz in zip(Ds, scal, dZ)]
    dZs = [_herm(G.conj().T @ dz @ G) for (G, _), dz in zip(scal, dZ)]
    dX = [_herm(gdg - W @ dz @ W) for gdg, W, dz in zip(GDG, Ws, dZ)]
    # cancellation in dX grows like cond(W); the slack blocks enter calA as the
    # identity, so the leftover primal residual is moved onto them
    err = rp - p.A_op(dX)
    for j, n in enumerate(p.dims[p.np_:]):
        b = p.np_ + j
        e = hmat(err[p.offsets[j]:p.offsets[j + 1]], n)
        G = scal[b][0]
        Ginv_e = np.linalg.solve(G, e)
        dX[b] = _herm(dX[b] + e)
        dXs[b] = _herm(dXs[b] + np.linalg.solve(G, Ginv_e.conj().T).conj().T)
    return dX, dy, dZ, dXs, dZs


def _unpack(t: SdpTriple, p: _Problem, X, y):
    P = BlockOperator.from_matrices(t.primal_structure, [_herm(x) for x in X[:p.np_]])
    Y = p.A_adj(y)[p.np_:]
    Q = BlockOperator.from_matrices(t.dual_structure, [_herm(-m) for m in Y])
    return P, Q


def solve(t: SdpTriple, opts: SolverOptions | None = None, **kw) -> SdpSolution:
    """Solve the triple; keyword arguments override fields of ``opts``."""
    opts = opts or SolverOptions()
    for k, v in kw.items():
        if not hasattr(opts, k):
            raise TypeError(f"unknown solver option {k!r}")
        setattr(opts, k, v)
    p = _Problem(t)
    X, y, Z = _start_from(t, p, opts)
    N = sum(p.dims)

    best = None
    history = []
    status, diag = "max_iter", ""
    it = 0
    for it in range(opts.max_iter + 1):
        rp, Rd = _residuals(p, X, y, Z)
        pobj, dobj = -_ip(p.C, X), -float(p.b @ y)
        rp_n = float(np.linalg.norm(rp))
        rd_n = float(np.sqrt(sum(np.vdot(r, r).real for r in Rd)))
        gap = abs(pobj - dobj)
        scale = 1.0 + abs(pobj) + abs(dobj)
        feasible = rp_n <= opts.tol_feas and rd_n <= opts.tol_feas
        history.append({"primal": pobj, "dual": dobj, "rp": rp_n, "rd": rd_n,
                        "weak_duality_ok": (not feasible) or pobj <= dobj + 10 * opts.tol_gap})
        merit = max(gap / (opts.tol_gap * scale), rp_n / opts.tol_feas, rd_n / opts.tol_feas)
        if best is None or merit < best[0]:
            best = (merit, [x.copy() for x in X], y.copy(), it)
        log.debug("iter %d primal %.10g dual %.10g rp %.2e rd %.2e", it, pobj, dobj, rp_n, rd_n)
        if merit <= 1.0:
            status = "optimal"
            break
        if it == opts.max_iter:
            break

        try:
            scal = _nt_scaling(X, Z)
        except np.linalg.LinAlgError as exc:
            status, diag = "numerical_failure", f"NT scaling failed at iteration {it}: {exc}"
            break
        Ws = [G @ G.conj().T for G, _ in scal]
        M = p.schur(Ws)
        try:
            cho = scipy.linalg.cho_factor(M)
        except np.linalg.LinAlgError:
            reg = 1e-12 * float(np.abs(np.diagonal(M)).max())
            try:
                cho = scipy.linalg.cho_factor(M + reg * np.eye(p.m))
            except np.linalg.LinAlgError:
                status = "numerical_failure"
                diag = f"Schur complement singular at iteration {it} (regularization {reg:.2e})"
                break
        mu = _ip(X, Z) / N

        # predictor
        Rc = [-np.diag(lam ** 2) for _, lam in scal]
        dX, dy, dZ, dXs, dZs = _direction(p, scal, Rc, rp, Rd, cho)
        ap = min(1.0, min(_max_step(lam, d) for (_, lam), d in zip(scal, dXs)))
        ad = min(1.0, min(_max_step(lam, d) for (_, lam), d in zip(scal, dZs)))
        mu_aff = sum(float(np.vdot(np.diag(lam) + ap * dx, np.diag(lam) + ad * dz).real)
                     for (_, lam), dx, dz in zip(scal, dXs, dZs)) / N
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        Rc = [sigma * mu * np.eye(len(lam)) - np.diag(lam ** 2) - _herm(dx @ dz)
              for (_, lam), dx, dz in zip(scal, dXs, dZs)]
        dX, dy, dZ, dXs, dZs = _direction(p, scal, Rc, rp, Rd, cho)
        ap = min(1.0, STEP_FRACTION * min(_max_step(lam, d) for (_, lam), d in zip(scal, dXs)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(lam, d) for (_, lam), d in zip(scal, dZs)))
        if ap < 1e-12 and ad < 1e-12:
            status, diag = "numerical_failure", f"step lengths collapsed at iteration {it}"
            break
        log.debug("iter %d steps %.3e %.3e sigma %.3e mu %.3e", it, ap, ad, sigma, mu)
        X = [_herm(x + ap * d) for x, d in zip(X, dX)]
        y = y + ad * dy
        Z = [_herm(z + ad * d) for z, d in zip(Z, dZ)]

    if status != "optimal":
        _, X, y, best_it = best
        diag = diag or f"no optimal iterate within {opts.max_iter} iterations"
        diag += f"; returning best iterate {best_it}"
    P, Q = _unpack(t, p, X, y)
    rep = verify_certificates(t, P, Q, opts.tol_gap, opts.tol_feas)
    return SdpSolution(P, Q, rep.primal_value, rep.dual_value, rep.gap, rep.residuals,
                       status, it, history, diag)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CertificateReport:
    primal_value: float
    dual_value: float
    gap: float
    residuals: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_certificates(t: SdpTriple, primal, dual=None, tol_gap=1e-8, tol_feas=1e-8
                        ) -> CertificateReport:
    """Recompute objective values and feasibility residuals from ``psi`` directly.

    ``primal`` may be an :class:`SdpSolution`, in which case ``dual`` is taken
    from it.
    """
    if isinstance(primal, SdpSolution):
        primal, dual = primal.primal, primal.dual
    P, Q = primal, dual
    a = t.A.inner(P)
    b = t.B.inner(Q)
    res = {
        "primal_psd": P.psd_residual(),
        "dual_psd": Q.psd_residual(),
        "primal_infeasibility": (t.psi(P) - t.B).positive_part_norm(),
        "dual_infeasibility": (t.A - t.psi_adj(Q)).positive_part_norm(),
    }
    gap = abs(a - b)
    violations = [(name, v, tol_feas) for name, v in res.items() if v > tol_feas]
    if gap > tol_gap * (1 + abs(a) + abs(b)):
        violations.append(("gap", gap, tol_gap * (1 + abs(a) + abs(b))))
    return CertificateReport(a, b, gap, res, violations)
