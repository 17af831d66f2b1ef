"""Factor analysis fits: (penalized) least squares by coordinate descent and
maximum likelihood by direct search."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _backend
from .errors import ConvergenceError, SingularModelError, ValidationError
from .matrix import (
    PSD_TOL,
    Decomposition,
    FitReport,
    SymmetricMatrix,
    as_symmetric,
    eigendecompose,
    loewner_leq,
)
from .objectives import PD_TOL, eval_ls, eval_neg_loglik, eval_pls
from .pca import solve_pca, truncate
from .search import (
    DEFAULT_EPS,
    SearchProblem,
    default_step,
    unidirectional_search,
)

DEFAULT_CD_EPS = 1e-10
DEFAULT_CD_MAX_ITERS = 10_000


@dataclass(frozen=True)
class FaFit:
    decomposition: Decomposition
    report: FitReport

    @property
    def v(self) -> np.ndarray:
        return np.diag(self.decomposition.residual.entries).copy()

    @property
    def v_fro(self) -> float:
        return float(np.linalg.norm(self.v))


def _check_q(p: int, q: int) -> None:
    if not 1 <= q < p:
        raise ValidationError(f"q must satisfy 1 <= q < p={p}, got {q}")


def _initial_v(sigma: SymmetricMatrix, v0) -> np.ndarray:
    p = sigma.dim
    if v0 is None:
        return np.zeros(p)
    v0 = np.asarray(v0.entries if isinstance(v0, SymmetricMatrix) else v0, dtype=float)
    if v0.ndim == 2:
        if v0.shape != (p, p) or np.any(v0 - np.diag(np.diag(v0))):
            raise ValidationError("v0 must be a diagonal p x p matrix")
        v0 = np.diag(v0).copy()
    if v0.shape != (p,):
        raise ValidationError(f"v0 must have {p} diagonal entries")
    if np.any(v0 < 0):
        raise ValidationError("v0 must be nonnegative")
    if not loewner_leq(np.diag(v0), sigma):
        raise ValidationError("v0 must satisfy v0 <= sigma in the Loewner order")
    return v0


def t_step(sigma, v: np.ndarray, q: int) -> np.ndarray:
    """Best rank-``q`` PSD approximation of ``sigma - diag(v)``."""
    values, vectors = truncate(np.asarray(sigma) - np.diag(v), q)
    return (vectors * values) @ vectors.T


def v_step(sigma, t: np.ndarray, lam: float) -> np.ndarray:
    """Minimizer of the penalized loss over nonnegative diagonals for fixed ``t``."""
    return np.clip(np.diag(np.asarray(sigma) - t), 0.0, None) / (1.0 + lam)


def _descent_checked(S, q, lam, eps, max_iters, v):
    """Coordinate descent that also stops once ``V <= sigma`` fails."""
    p = S.shape[0]
    t = np.zeros((p, p))
    report = FitReport(objective_trace=[eval_pls(t, np.diag(v), S, lam)], tolerance=eps,
                       message=f"max_iters={max_iters} reached")
    resid = np.sqrt(eval_ls(t, np.diag(v), S))
    for k in range(1, max_iters + 1):
        t_new = t_step(S, v, q)
        v_new = v_step(S, t_new, lam)
        if not loewner_leq(np.diag(v_new), S):
            report.message = "V left the region V <= sigma; previous iterate returned"
            break
        t, v = t_new, v_new
        report.objective_trace.append(eval_pls(t, np.diag(v), S, lam))
        report.iterations = k
        resid_new = np.sqrt(eval_ls(t, np.diag(v), S))
        if resid - resid_new < eps:
            report.converged = True
            report.message = "residual decrease below eps"
            break
        resid = resid_new
    return t, v, report


def fit_fa_pls(sigma, q: int, lam: float, *, eps: float = DEFAULT_CD_EPS,
               max_iters: int = DEFAULT_CD_MAX_ITERS, v0=None,
               stop_on_loewner: bool = False) -> FaFit:
    """Penalized least squares factor analysis by coordinate descent.

    Alternates ``T <- top-q truncation of (sigma - V)`` and
    ``V <- max(diag(sigma - T), 0) / (1 + lam)``, starting from ``T = 0``
    and ``V = v0`` (zero by default). Iteration stops when the unsquared
    residual norm ``|sigma - T - V|_F`` drops by less than ``eps``.

    With ``stop_on_loewner`` the run also stops, keeping the previous
    iterate, as soon as a new ``V`` violates ``V <= sigma``. That check
    is off by default: early iterates can violate it transiently and the
    run then freezes far from a factor decomposition.

    The report's ``objective_trace`` holds the penalized loss, which is
    non-increasing.
    """
    sigma = as_symmetric(sigma)
    S = sigma.entries
    p = sigma.dim
    _check_q(p, q)
    if lam < 0:
        raise ValidationError("lambda must be nonnegative")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    v = _initial_v(sigma, v0)
    if stop_on_loewner:
        t, v, report = _descent_checked(S, q, lam, eps, max_iters, v)
    else:
        t, v, trace, iterations, status = _backend.coordinate_descent(S, q, lam, eps, max_iters, v)
        if status == 2:
            raise ConvergenceError("eigendecomposition failed inside coordinate descent")
        report = FitReport(objective_trace=trace.tolist(), iterations=int(iterations),
                           converged=status == 0, tolerance=eps,
                           message="residual decrease below eps" if status == 0
                           else f"max_iters={max_iters} reached")

    lv, lr = eigendecompose(t).leading(q)
    loading = lr * np.sqrt(np.clip(lv, 0.0, None))
    dec = Decomposition(low_rank=SymmetricMatrix(t), residual=SymmetricMatrix.diagonal(v),
                        rank=q, loading=loading)
    return FaFit(decomposition=dec, report=report)


def fit_fa_ls(sigma, q: int, **kwargs) -> FaFit:
    """Least squares factor analysis; :func:`fit_fa_pls` with ``lam = 0``."""
    return fit_fa_pls(sigma, q, 0.0, **kwargs)


@dataclass(frozen=True)
class SweepRow:
    lam: float
    v_fro: float
    ls_loss: float
    converged: bool


def regularization_sweep(sigma, q: int, lambdas: Iterable[float], **kwargs) -> list:
    """``|V|_F`` and the least squares loss of :func:`fit_fa_pls` per ``lambda``."""
    sigma = as_symmetric(sigma)
    rows = []
    for lam in lambdas:
        fit = fit_fa_pls(sigma, q, float(lam), **kwargs)
        dec = fit.decomposition
        rows.append(SweepRow(lam=float(lam), v_fro=fit.v_fro,
                             ls_loss=eval_ls(dec.low_rank, dec.residual, sigma),
                             converged=fit.report.converged))
    return rows


def emit_sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "v_fro", "ls_loss"])
    for r in rows:
        writer.writerow([repr(r.lam), repr(r.v_fro), repr(r.ls_loss)])
    return buf.getvalue()


def _ml_start(sigma: SymmetricMatrix, q: int) -> np.ndarray:
    S = sigma.entries
    pca = solve_pca(sigma, q)
    candidates = [
        (pca.loading, np.clip(np.diag(pca.residual.entries), 0.0, None)),
        (pca.loading, np.diag(S).copy()),
    ]
    for a, v in candidates:
        ev = eigendecompose(a @ a.T + np.diag(v)).values
        if ev[-1] > PD_TOL * max(1.0, ev[0]):
            return np.concatenate([a.reshape(-1), v])
    raise SingularModelError("no positive definite starting point for the likelihood search")


def fit_fa_ml(sigma, q: int, *, start=None, step0: Optional[float] = None,
              eps: float = DEFAULT_EPS, max_evals: Optional[int] = None) -> FaFit:
    """Maximum likelihood factor analysis by unidirectional search.

    The parameter vector is the row-major loading followed by the residual
    variances. Candidates must keep ``v >= 0`` and ``A A' + diag(v)``
    positive definite. The default start is the PCA loading with the
    diagonal of the PCA residual.
    """
    sigma = as_symmetric(sigma)
    S = sigma.entries
    p = sigma.dim
    _check_q(p, q)
    ev = eigendecompose(S).values
    if ev[-1] <= PSD_TOL * max(1.0, ev[0]):
        raise ValidationError("sigma must be positive definite")
    x0 = _ml_start(sigma, q) if start is None else np.asarray(start, dtype=float).ravel()
    if x0.size != p * q + p:
        raise ValidationError(f"start must have {p * q + p} entries")
    n_a = p * q

    def split(x):
        a = x[:n_a].reshape(p, q)
        return a @ a.T, np.diag(x[n_a:])

    def objective(x):
        try:
            return eval_neg_loglik(*split(x), S)
        except SingularModelError:
            return np.inf

    def feasible(x):
        return bool(np.all(x[n_a:] >= 0.0)) and np.isfinite(objective(x))

    problem = SearchProblem(objective=objective, initial=x0, feasible=feasible,
                            step0=default_step(S) if step0 is None else step0,
                            eps=eps, max_evals=max_evals)
    res = unidirectional_search(problem)
    a = res.solution[:n_a].reshape(p, q).copy()
    v = res.solution[n_a:].copy()
    report = FitReport(objective_trace=list(res.trace.iterates), iterations=len(res.trace.iterates) - 1,
                       converged=res.converged, tolerance=eps, final_step=res.trace.final_step,
                       message="evaluation budget exhausted" if res.budget_exhausted else "step below eps")
    dec = Decomposition(low_rank=SymmetricMatrix(a @ a.T), residual=SymmetricMatrix.diagonal(v),
                        rank=q, loading=a)
    return FaFit(decomposition=dec, report=report)
