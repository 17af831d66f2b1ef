"""Symmetric-matrix value types, eigendecomposition and Loewner predicates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DimensionError,
    NegativeSpectrumError,
    RankDeficiencyError,
    ValidationError,
)

PSD_TOL = 1e-10
RANK_TOL = 1e-8
MAX_SWEEPS = 50


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class SymmetricMatrix:
    """Dense ``p x p`` symmetric matrix.

    The input is symmetrized on construction as ``(m + m') / 2`` so that
    ``entries[i, j] == entries[j, i]`` holds bit-for-bit.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise ValidationError("matrix has non-finite entries")
        self._entries = _frozen(0.5 * (a + a.T))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries.copy() if copy else self._entries
        return self._entries.astype(dtype)

    def __add__(self, other):
        return SymmetricMatrix(self._entries + as_array(other))

    def __sub__(self, other):
        return SymmetricMatrix(self._entries - as_array(other))

    def __rsub__(self, other):
        return SymmetricMatrix(as_array(other) - self._entries)

    def __mul__(self, c):
        return SymmetricMatrix(self._entries * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        return f"SymmetricMatrix({self._entries.tolist()!r})"

    @classmethod
    def identity(cls, p: int) -> "SymmetricMatrix":
        return cls(np.eye(p))

    @classmethod
    def diagonal(cls, values) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))


def as_array(m) -> np.ndarray:
    if isinstance(m, SymmetricMatrix):
        return m.entries
    return np.asarray(m, dtype=float)


def as_symmetric(m) -> SymmetricMatrix:
    return m if isinstance(m, SymmetricMatrix) else SymmetricMatrix(m)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending with matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def leading(self, q: int) -> tuple[np.ndarray, np.ndarray]:
        return self.values[:q], self.vectors[:, :q]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class Decomposition:
    """A covariance split ``sigma ~ T + V`` with ``T = A A'`` of rank ``q``."""

    low_rank: SymmetricMatrix
    residual: SymmetricMatrix
    rank: int
    loading: Optional[np.ndarray] = None

    def implied(self) -> SymmetricMatrix:
        return self.low_rank + self.residual


@dataclass(frozen=True)
class DataMatrix:
    rows: np.ndarray

    def __post_init__(self):
        x = np.array(self.rows, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise DimensionError(f"data must be two dimensional, got shape {x.shape}")
        if x.shape[0] < 2:
            raise DimensionError(f"need at least 2 observations, got {x.shape[0]}")
        if x.shape[1] < 1:
            raise DimensionError("need at least one variable")
        object.__setattr__(self, "rows", _frozen(x))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


@dataclass
class FitReport:
    """Bookkeeping shared by the iterative solvers."""

    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    tolerance: float = 0.0
    final_step: Optional[float] = None
    message: str = ""

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


def eigendecompose(m, max_sweeps: int = MAX_SWEEPS) -> EigenSystem:
    """Eigendecomposition by cyclic Jacobi sweeps.

    Eigenvalues come back in descending order. Equal eigenvalues keep the
    diagonal position they reach in the Jacobi iteration (a stable sort),
    so e.g. a diagonal input returns the coordinate axes in index order.
    Each eigenvector is signed so that its entry of largest magnitude (the
    first such entry on ties) is nonnegative.

    Raises
    ------
    ConvergenceError
        If the off-diagonal mass has not vanished after ``max_sweeps``.
    """
    a = as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    diag, vecs, sweeps = _backend.jacobi_eigh(np.ascontiguousarray(a), max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    order = np.argsort(-diag, kind="stable")
    values = diag[order]
    vectors = vecs[:, order]
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivot, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    vectors = vectors * signs
    return EigenSystem(_frozen(values), _frozen(vectors))


def eigenvalues(m) -> np.ndarray:
    return eigendecompose(m).values


def _psd_from_values(values: np.ndarray, tol: float) -> bool:
    return bool(values[-1] >= -tol * max(1.0, values[0]))


def is_psd(m, tol: float = PSD_TOL) -> bool:
    """True iff the smallest eigenvalue is at least ``-tol * max(1, largest)``."""
    if tol < 0:
        raise ValidationError("tol must be nonnegative")
    return _psd_from_values(eigenvalues(m), tol)


def loewner_leq(a, b, tol: float = PSD_TOL) -> bool:
    """``a <= b`` in the Loewner order, i.e. ``b - a`` is PSD."""
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return is_psd(b - a, tol)


def numeric_rank(m, tol: float = RANK_TOL) -> int:
    values = eigenvalues(m)
    scale = max(1.0, float(np.max(np.abs(values))))
    return int(np.sum(np.abs(values) > tol * scale))


def covariance_from_data(d, estimator: str = "ml") -> SymmetricMatrix:
    """Covariance of the rows of ``d``, divided by ``n`` ("ml") or ``n-1`` ("sample")."""
    if not isinstance(d, DataMatrix):
        d = DataMatrix(d)
    if estimator not in ("ml", "sample"):
        raise ValidationError(f"unknown estimator {estimator!r}")
    x = d.rows - d.rows.mean(axis=0)
    denom = d.n if estimator == "ml" else d.n - 1
    cov = x.T @ x / denom
    if not np.all(np.isfinite(np.diag(cov))):
        raise DegenerateDataError("non-finite variance in data")
    return SymmetricMatrix(cov)


def cumulative_proportion(e: EigenSystem, q: int, tol: float = PSD_TOL) -> float:
    """Share of total variance carried by the leading ``q`` eigenvalues."""
    if not 1 <= q <= e.dim:
        raise ValidationError(f"q must lie in [1, {e.dim}], got {q}")
    if e.values[-1] < -tol * max(1.0, e.values[0]):
        raise NegativeSpectrumError(f"negative eigenvalue {e.values[-1]:g}")
    values = np.clip(e.values, 0.0, None)
    total = values.sum()
    if total <= 0.0:
        raise NegativeSpectrumError("spectrum has zero total variance")
    return float(min(1.0, values[:q].sum() / total))


def _full_column_rank(x: np.ndarray, tol: float) -> bool:
    s = np.linalg.svd(x, compute_uv=False)
    return bool(s.size and s[-1] > tol * max(1.0, s[0]))


def subspace_contains(basis, candidate, tol: float = RANK_TOL) -> bool:
    """Whether every column of ``candidate`` lies in the span of ``basis``.

    A column ``c`` counts as contained when its residual after orthogonal
    projection onto ``span(basis)`` has norm at most ``tol * |c|``.
    """
    basis = np.asarray(basis, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if candidate.ndim == 1:
        candidate = candidate[:, None]
    if basis.shape[0] != candidate.shape[0]:
        raise DimensionError("basis and candidate have different row counts")
    if not _full_column_rank(basis, tol) or not _full_column_rank(candidate, tol):
        raise RankDeficiencyError("basis and candidate must have full column rank")
    Q, _ = np.linalg.qr(basis)
    resid = candidate - Q @ (Q.T @ candidate)
    return bool(np.all(np.linalg.norm(resid, axis=0) <= tol * np.linalg.norm(candidate, axis=0)))
