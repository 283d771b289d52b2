"""Dense complex linear algebra over labeled tensor-factor spaces.

A :class:`LabeledOperator` is a square complex matrix together with an
ordered list of ``(label, dim)`` tensor factors.  Row index ``(i_1, ..., i_n)``
is laid out row-major over the factors, so ``kron(a, b)`` puts ``a``'s
factors first.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from . import kernels

HERMITIAN_RTOL = 1e-12

Factors = tuple[tuple[str, int], ...]


class FactorError(ValueError):
    """Factor lists are incompatible with the requested operation."""


class NotHermitianError(ValueError):
    pass


def _as_factors(factors: Iterable) -> Factors:
    out = tuple((str(label), int(dim)) for label, dim in factors)
    labels = [label for label, _ in out]
    if len(set(labels)) != len(labels):
        raise FactorError(f"duplicate factor labels in {labels}")
    for label, dim in out:
        if dim < 1:
            raise FactorError(f"factor {label!r} has non-positive dimension {dim}")
    return out


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Square complex matrix acting on an ordered tensor product of labeled factors."""

    matrix: np.ndarray
    factors: Factors

    def __post_init__(self):
        factors = _as_factors(self.factors)
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        d = prod(dim for _, dim in factors)
        if m.shape[0] != d:
            raise FactorError(f"matrix dimension {m.shape[0]} does not match factor "
                              f"dimensions {factors} (product {d})")
        if not np.isfinite(m).all():
            raise ValueError("operator matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "factors", factors)

    @classmethod
    def identity(cls, factors, scale=1.0) -> "LabeledOperator":
        factors = _as_factors(factors)
        d = prod(dim for _, dim in factors)
        return cls(scale * np.eye(d), factors)

    @classmethod
    def zeros(cls, factors) -> "LabeledOperator":
        factors = _as_factors(factors)
        d = prod(dim for _, dim in factors)
        return cls(np.zeros((d, d)), factors)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    def dim_of(self, label: str) -> int:
        for name, dim in self.factors:
            if name == label:
                return dim
        raise FactorError(f"unknown factor label {label!r}; have {self.labels}")

    def hermitian_defect(self) -> float:
        """Max entry of ``|M - M^*|``."""
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        scale = float(np.abs(self.matrix).max())
        return self.hermitian_defect() <= rtol * scale

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def relabel(self, mapping: dict[str, str]) -> "LabeledOperator":
        return LabeledOperator(self.matrix,
                               tuple((mapping.get(l, l), d) for l, d in self.factors))

    def hermitian_part(self) -> "LabeledOperator":
        return LabeledOperator(0.5 * (self.matrix + self.matrix.conj().T), self.factors)

    def conj(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj(), self.factors)

    def _check_same(self, other: "LabeledOperator"):
        if self.factors != other.factors:
            raise FactorError(f"factor mismatch: {self.factors} vs {other.factors}")

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_same(other)
        return LabeledOperator(self.matrix + other.matrix, self.factors)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_same(other)
        return LabeledOperator(self.matrix - other.matrix, self.factors)

    def __neg__(self) -> "LabeledOperator":
        return LabeledOperator(-self.matrix, self.factors)

    def __mul__(self, scalar) -> "LabeledOperator":
        return LabeledOperator(scalar * self.matrix, self.factors)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LabeledOperator":
        return LabeledOperator(self.matrix / scalar, self.factors)

    def __repr__(self):
        return f"LabeledOperator(dim={self.dim}, factors={self.factors})"


def kron(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product; the result's factors are ``a``'s followed by ``b``'s."""
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise FactorError(f"kron operands share labels {sorted(clash)}")
    return LabeledOperator(np.kron(a.matrix, b.matrix), a.factors + b.factors)


def _tensor(a: LabeledOperator) -> np.ndarray:
    dims = a.dims
    return a.matrix.reshape(dims + dims)


def partial_trace(a: LabeledOperator, labels: str | Sequence[str]) -> LabeledOperator:
    """Trace out one factor (or several) keeping the remaining factors in order."""
    if isinstance(labels, str):
        labels = (labels,)
    drop = set(labels)
    for label in drop:
        a.dim_of(label)
    keep = [i for i, label in enumerate(a.labels) if label not in drop]
    traced = [i for i, label in enumerate(a.labels) if label in drop]
    n = len(a.factors)
    t = _tensor(a)
    # move traced ket/bra axes to the end and contract them pairwise
    order = keep + [n + i for i in keep] + traced + [n + i for i in traced]
    t = t.transpose(order)
    dk = prod(a.dims[i] for i in keep)
    dt = prod(a.dims[i] for i in traced)
    t = t.reshape(dk, dk, dt, dt)
    out = np.trace(t, axis1=2, axis2=3)
    return LabeledOperator(out, tuple(a.factors[i] for i in keep))


def permute_factors(a: LabeledOperator, order: Sequence[str]) -> LabeledOperator:
    """Reorder tensor factors to ``order`` (a permutation of ``a.labels``)."""
    order = tuple(order)
    if sorted(order) != sorted(a.labels) or len(order) != len(a.labels):
        raise FactorError(f"{order} is not a permutation of {a.labels}")
    if order == a.labels:
        return a
    idx = [a.labels.index(label) for label in order]
    n = len(idx)
    t = _tensor(a).transpose(idx + [n + i for i in idx])
    d = a.dim
    return LabeledOperator(t.reshape(d, d), tuple(a.factors[i] for i in idx))


def extend(a: LabeledOperator, factors) -> LabeledOperator:
    """``a`` tensored with identities on the missing factors, in the given order."""
    factors = _as_factors(factors)
    target = dict(factors)
    for label, dim in a.factors:
        if target.get(label) != dim:
            raise FactorError(f"factor {label!r} of operator not in target {factors}")
    missing = tuple((l, d) for l, d in factors if l not in a.labels)
    out = a if not missing else kron(a, LabeledOperator.identity(missing))
    return permute_factors(out, [label for label, _ in factors])


def require_hermitian(h: LabeledOperator, what: str = "operator"):
    if not h.is_hermitian():
        raise NotHermitianError(f"{what} is not Hermitian "
                                f"(defect {h.hermitian_defect():.3e})")


def _matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, LabeledOperator) else np.asarray(h, dtype=np.complex128)


def herm_eig(h: LabeledOperator | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and unitary eigenvector matrix of a Hermitian operator.

    Computed by cyclic complex Jacobi rotations (compiled kernel when available).
    """
    m = _matrix(h)
    scale = float(np.abs(m).max()) if m.size else 0.0
    if float(np.abs(m - m.conj().T).max()) > HERMITIAN_RTOL * scale:
        raise NotHermitianError("herm_eig requires a Hermitian input")
    return kernels.eigh(0.5 * (m + m.conj().T))


def eigvals(h) -> np.ndarray:
    return herm_eig(h)[0]


def trace_norm(h) -> float:
    return float(np.abs(eigvals(h)).sum())


def operator_norm(h) -> float:
    w = eigvals(h)
    return float(np.abs(w).max()) if w.size else 0.0


def psd_residual(h) -> float:
    """``max(0, -lambda_min(h))``; zero iff ``h`` is positive semidefinite."""
    w = eigvals(h)
    return max(0.0, -float(w[-1]))


def positive_part_norm(h) -> float:
    """Operator norm of the positive part ``h_+``, i.e. ``max(0, lambda_max(h))``."""
    return max(0.0, float(eigvals(h)[0]))


def inner(a, b) -> float:
    """Real part of ``tr(a^* b)``; exact for Hermitian operands."""
    if isinstance(a, LabeledOperator) and isinstance(b, LabeledOperator):
        if a.factors != b.factors:
            raise FactorError(f"inner product of mismatched factors {a.factors} vs {b.factors}")
    ma, mb = _matrix(a), _matrix(b)
    if ma.shape != mb.shape:
        raise FactorError(f"inner product of mismatched shapes {ma.shape} vs {mb.shape}")
    return float(np.vdot(ma, mb).real)
