"""Reference strategy norms written directly in cvxpy.

The ladder constraints are imposed as equalities on the outcome sum, walking
the labeled factors down one round at a time.  Nothing here touches the
package's SDP code, so agreement is a genuine cross-check.
"""

from math import prod

import cvxpy as cp
import numpy as np


def _perm(dims, labels, order):
    """Permutation matrix P with ``P A P^T`` reordering factors from ``labels`` to ``order``."""
    n = prod(dims)
    idx = np.arange(n).reshape(dims)
    idx = idx.transpose([labels.index(l) for l in order]).reshape(n)
    return np.eye(n)[idx]


class _Labeled:
    def __init__(self, expr, labels, dims):
        self.expr, self.labels, self.dims = expr, list(labels), list(dims)

    def trace_out(self, label):
        k = self.labels.index(label)
        expr = cp.partial_trace(self.expr, self.dims, axis=k) if len(self.dims) > 1 \
            else cp.trace(self.expr)
        return _Labeled(expr, self.labels[:k] + self.labels[k + 1:],
                        self.dims[:k] + self.dims[k + 1:])


def _peel(a: _Labeled, label: str):
    """Constraint ``a = b (x) I_label`` and the level ``b = tr_label(a) / d``."""
    d = a.dims[a.labels.index(label)]
    b = a.trace_out(label)
    b = _Labeled(b.expr / d, b.labels, b.dims)
    if not b.labels:
        return a.expr == cp.reshape(b.expr, (1, 1), order="C") * np.eye(d), b
    p = _perm(b.dims + [d], b.labels + [label], a.labels)
    return a.expr == p @ cp.kron(b.expr, np.eye(d)) @ p.T, b


def _ladder(total: _Labeled, strategy: bool, r: int):
    cons = []
    a = total
    for i in range(r, 0, -1):
        if strategy:
            # tr_Yi S(i) = S(i-1) (x) I_Xi
            c, a = _peel(a.trace_out(f"Y{i}"), f"X{i}")
        else:
            # T(i) (x) I_Yi, then tr_Xi T(i) feeds the next level
            c, b = _peel(a, f"Y{i}")
            a = b.trace_out(f"X{i}")
        cons.append(c)
    cons.append(cp.real(cp.reshape(a.expr, (), order="C")) == 1)
    return cons


def reference_norm(x, in_dims, out_dims, dual=False, solver="CLARABEL"):
    """``max <O0 - O1, x>`` over measuring co-strategies (or strategies when ``dual``)."""
    r = len(in_dims)
    labels = [f"Y{i}" for i in range(1, r + 1)] + [f"X{i}" for i in range(1, r + 1)]
    dims = list(out_dims) + list(in_dims)
    n = prod(dims)
    o0 = cp.Variable((n, n), hermitian=True)
    o1 = cp.Variable((n, n), hermitian=True)
    total = _Labeled(o0 + o1, labels, dims)
    cons = [o0 >> 0, o1 >> 0]
    cons += _ladder(total, dual, r)
    xm = np.asarray(x, dtype=complex)
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace((o0 - o1) @ xm))), cons)
    prob.solve(solver=solver)
    return float(prob.value)
