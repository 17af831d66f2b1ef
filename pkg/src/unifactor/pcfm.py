"""Principal component factor model.

The loading columns are constrained to be scaled leading eigenvectors of
the implied covariance ``T + V``, with ``T = R1 diag(gamma) R1'`` and
``V = diag(v)``. The fit alternates between extracting the basis ``R1``
from the current ``T + V`` and minimizing over ``(gamma, v) >= 0`` for
that basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import (
    DegenerateBasisError,
    NonOrthonormalBasisError,
    SingularModelError,
    ValidationError,
)
from .matrix import (
    PSD_TOL,
    RANK_TOL,
    FitReport,
    as_symmetric,
    eigendecompose,
    subspace_contains,
)
from .objectives import eval_ls, eval_neg_loglik
from .search import DEFAULT_EPS, SearchProblem, default_step, unidirectional_search

ORTHONORMAL_TOL = 1e-8
SUPPORT_TOL = 1e-10
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 500
NNQP_MAX_ITERS = 200_000


@dataclass(frozen=True)
class QpProblem:
    """``min z'Hz - 2b'z`` over ``z >= 0``, with ``z = (gamma, v)``."""

    H: np.ndarray
    b: np.ndarray
    q: int

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.H @ z - 2.0 * self.b @ z)


def build_qp(r1, sigma) -> QpProblem:
    """Least squares objective for a fixed orthonormal basis as a QP.

    With ``G = R1 diag(gamma) R1' + diag(v)``,
    ``|sigma - G|_F^2 = z'Hz - 2b'z + |sigma|_F^2``. Orthonormal columns
    make the ``gamma`` block of ``H`` the identity; the cross blocks hold
    the squared basis entries ``r1[i, j]**2``.

    Raises
    ------
    NonOrthonormalBasisError
        If ``r1' r1`` differs from the identity by more than 1e-8.
    """
    r1 = np.asarray(r1, dtype=float)
    if r1.ndim == 1:
        r1 = r1[:, None]
    S = as_symmetric(sigma).entries
    p, q = r1.shape
    if S.shape[0] != p:
        raise ValidationError(f"basis has {p} rows but sigma is {S.shape[0]}x{S.shape[0]}")
    if np.max(np.abs(r1.T @ r1 - np.eye(q))) > ORTHONORMAL_TOL:
        raise NonOrthonormalBasisError("basis columns are not orthonormal")
    sq = r1 * r1
    H = np.zeros((q + p, q + p))
    H[:q, :q] = np.eye(q)
    H[:q, q:] = sq.T
    H[q:, :q] = sq
    H[q:, q:] = np.eye(p)
    b = np.concatenate([np.einsum("ij,ik,jk->k", S, r1, r1), np.diag(S)])
    return QpProblem(H=H, b=b, q=q)


@dataclass(frozen=True)
class NnqpResult:
    z: np.ndarray
    iterations: int
    converged: bool


def solve_nnqp(qp: QpProblem, tol: float = DEFAULT_TOL, max_iters: int = NNQP_MAX_ITERS,
               z0=None) -> NnqpResult:
    """Projected gradient with step ``1/L``, ``L`` the largest eigenvalue of ``H``.

    Stops at a point where every coordinate satisfies the projected
    stationarity test on ``2(Hz - b)`` with tolerance ``tol * (1 + |b|)``.
    """
    lead = eigendecompose(qp.H).values[0]
    z0 = np.zeros(qp.dim) if z0 is None else np.asarray(z0, dtype=float)
    if lead <= 0.0:
        # H = 0: any z >= 0 with b <= 0 is optimal; otherwise unbounded
        return NnqpResult(z=np.maximum(z0, 0.0), iterations=0, converged=bool(np.all(qp.b <= 0)))
    tol_abs = tol * (1.0 + float(np.linalg.norm(qp.b)))
    z, it, ok = _backend.nnqp_projected_gradient(qp.H, qp.b, z0, lead, tol_abs, max_iters)
    return NnqpResult(z=z, iterations=int(it), converged=bool(ok))


def residual_groups(basis, tol: float = SUPPORT_TOL) -> np.ndarray:
    """Label variables joined by a shared basis column.

    Two variables share a label when some chain of basis columns links
    them through nonzero entries. Holding ``v`` constant on each label
    keeps every basis column an eigenvector of ``T + diag(v)``.
    """
    basis = np.asarray(basis, dtype=float)
    p = basis.shape[0]
    parent = list(range(p))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for col in basis.T:
        idx = np.flatnonzero(np.abs(col) > tol)
        for i in idx[1:]:
            parent[find(i)] = find(idx[0])
    roots = [find(i) for i in range(p)]
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def _expansion(q: int, labels: np.ndarray) -> np.ndarray:
    """Matrix ``E`` with ``(gamma, v) = E @ (gamma, group values)``."""
    p = labels.size
    g = int(labels.max()) + 1
    E = np.zeros((q + p, q + g))
    E[:q, :q] = np.eye(q)
    E[q + np.arange(p), q + labels] = 1.0
    return E


def _leading_basis(m: np.ndarray, q: int) -> np.ndarray:
    es = eigendecompose(m)
    if es.values[q - 1] <= RANK_TOL * max(1.0, es.values[0]):
        raise DegenerateBasisError(
            f"q-th eigenvalue {es.values[q - 1]:g} of T + V is numerically zero")
    return es.vectors[:, :q].copy()


def _implied(basis, z, q):
    t = (basis * z[:q]) @ basis.T
    return t, np.diag(z[q:])


@dataclass(frozen=True)
class PcfmFit:
    gamma: np.ndarray
    v: np.ndarray
    basis: np.ndarray
    loading: np.ndarray
    objective: float
    report: FitReport

    @property
    def low_rank(self) -> np.ndarray:
        return (self.basis * self.gamma) @ self.basis.T

    def implied(self) -> np.ndarray:
        return self.low_rank + np.diag(self.v)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "v": self.v.tolist(),
            "basis": self.basis.tolist(),
            "loading": self.loading.tolist(),
            "objective": float(self.objective),
            "iterations": int(self.report.iterations),
            "converged": bool(self.report.converged),
        }


def _solve_ls(basis, S, E, tol, z0=None):
    qp = build_qp(basis, S)
    reduced = QpProblem(H=E.T @ qp.H @ E, b=E.T @ qp.b, q=qp.q)
    y0 = None if z0 is None else np.linalg.lstsq(E, z0, rcond=None)[0]
    res = solve_nnqp(reduced, tol=tol, z0=y0)
    return E @ res.z, res.converged


def _solve_ml(basis, S, E, y0, eps, max_evals):
    q = basis.shape[1]

    def objective(y):
        try:
            return eval_neg_loglik(*_implied(basis, E @ y, q), S)
        except SingularModelError:
            return np.inf

    def feasible(y):
        return bool(np.all(y >= 0.0)) and np.isfinite(objective(y))

    if not np.isfinite(objective(y0)):
        # lift a singular least squares start into the positive definite region
        y0 = y0.copy()
        y0[q:] = np.maximum(y0[q:], 1e-3 * float(np.mean(np.diag(S))))
    res = unidirectional_search(SearchProblem(
        objective=objective, initial=y0, feasible=feasible,
        step0=default_step(S), eps=eps, max_evals=max_evals))
    return E @ res.solution, res.converged


def fit_pcfm(sigma, q: int, objective: str = "ls", tol: float = DEFAULT_TOL,
             max_iters: int = DEFAULT_MAX_ITERS, *, tie_residuals: bool = True,
             search_eps: float = DEFAULT_EPS, max_evals: Optional[int] = None) -> PcfmFit:
    """Fit the principal component factor model by alternating updates.

    Each outer iteration takes ``R1`` as the leading ``q`` eigenvectors of
    the current ``T + V`` (``sigma`` at the start) and minimizes the least
    squares loss (``objective="ls"``, a nonnegative QP) or the negative
    log-likelihood (``"ml"``, direct search started from the least squares
    solution) over ``(gamma, v) >= 0``. Iteration stops once the objective
    falls by less than ``tol``; an iterate that would raise the objective
    is discarded so the recorded trace never increases.

    With ``tie_residuals`` (the default) ``v`` is held constant across
    variables linked by a basis column (see :func:`residual_groups`). Each
    basis column is then an eigenvector of ``T + V``, so the basis the
    fit returns is self-consistent. Setting it to ``False`` frees every
    ``v_i``; the alternation then need not settle on a consistent basis.

    ``gamma`` is returned in descending order with the basis and loading
    columns permuted to match.
    """
    if objective not in ("ls", "ml"):
        raise ValidationError(f"objective must be 'ls' or 'ml', got {objective!r}")
    sigma = as_symmetric(sigma)
    S = sigma.entries
    p = sigma.dim
    if not 1 <= q < p:
        raise ValidationError(f"q must satisfy 1 <= q < p={p}, got {q}")
    ev = eigendecompose(S).values
    if ev[-1] <= PSD_TOL * max(1.0, ev[0]):
        raise ValidationError("sigma must be positive definite")

    def score(basis, z):
        t, v = _implied(basis, z, q)
        if objective == "ls":
            return eval_ls(t, v, S)
        try:
            return eval_neg_loglik(t, v, S)
        except SingularModelError:
            return np.inf

    report = FitReport(tolerance=tol, message=f"max_iters={max_iters} reached")
    m = S
    best = None
    inner_ok = True
    for k in range(1, max_iters + 1):
        basis = _leading_basis(m, q)
        labels = residual_groups(basis) if tie_residuals else np.arange(p)
        E = _expansion(q, labels)
        z, ok = _solve_ls(basis, S, E, tol)
        if objective == "ml":
            y0 = np.linalg.lstsq(E, z, rcond=None)[0]
            z, ok = _solve_ml(basis, S, E, np.maximum(y0, 0.0), search_eps, max_evals)
        value = score(basis, z)
        decrease = np.inf if best is None else best[2] - value
        if decrease < 0:
            # roundoff-sized increases count as convergence; larger ones mean
            # the alternation has stalled and the last improving iterate stays
            report.converged = decrease > -tol
            report.message = ("objective decrease below tol" if report.converged
                              else "objective increased; previous iterate kept")
            break
        best = (basis, z, value)
        inner_ok = ok
        report.objective_trace.append(value)
        report.iterations = k
        if decrease < tol:
            report.converged = True
            report.message = "objective decrease below tol"
            break
        m = sum(_implied(basis, z, q))
    if not inner_ok:
        report.converged = False
        report.message += "; inner solver did not converge"

    basis, z, value = best
    gamma = z[:q]
    order = np.argsort(-gamma, kind="stable")
    gamma = gamma[order].copy()
    basis = basis[:, order].copy()
    return PcfmFit(gamma=gamma, v=z[q:].copy(), basis=basis,
                   loading=basis * np.sqrt(gamma), objective=value, report=report)


def principal_component_index(a, sigma, tol: float = RANK_TOL) -> int:
    """Smallest ``i >= q`` such that ``span(a)`` lies in the span of the first ``i`` eigenvectors."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    S = as_symmetric(sigma).entries
    p = S.shape[0]
    vectors = eigendecompose(S).vectors
    q = a.shape[1]
    for i in range(q, p + 1):
        if subspace_contains(vectors[:, :i], a, tol):
            return i
    return p
