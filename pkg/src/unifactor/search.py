"""Derivative-free unidirectional search with step halving.

Each iteration perturbs every coordinate by ``+step`` and ``-step``; among
the feasible candidates that strictly improve the objective the best one is
accepted (ties go to the lowest coordinate, then ``+step`` before
``-step``). When no candidate qualifies the step is halved, and the search
stops once the step drops below ``eps``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _backend
from .errors import InfeasibleStartError, ValidationError
from .matrix import (
    PSD_TOL,
    Decomposition,
    SymmetricMatrix,
    as_symmetric,
    eigendecompose,
)
from .objectives import ObjectiveSpec, evaluate
from .pca import solve_pca

DEFAULT_EPS = 1e-6
DEFAULT_MAX_EVALS = 200_000
MAX_EVALS_ENV = "UNIFACTOR_MAX_EVALS"


def resolve_max_evals(max_evals: Optional[int] = None) -> int:
    """An explicit budget wins; otherwise ``UNIFACTOR_MAX_EVALS``, then the default."""
    if max_evals is not None:
        return int(max_evals)
    raw = os.environ.get(MAX_EVALS_ENV, "").strip()
    if not raw:
        return DEFAULT_MAX_EVALS
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{MAX_EVALS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValidationError(f"{MAX_EVALS_ENV} must be positive, got {value}")
    return value


@dataclass
class SearchProblem:
    """Inputs of :func:`unidirectional_search`.

    ``screen`` is an optional fast path: given ``(x, step)`` it returns the
    objective of all ``2 * dim`` candidates in the order described in the
    module docstring. Screened values only rank candidates; a move is
    accepted after ``objective`` confirms the improvement.
    """

    objective: Callable[[np.ndarray], float]
    initial: np.ndarray
    feasible: Optional[Callable[[np.ndarray], bool]] = None
    step0: float = 0.1
    eps: float = DEFAULT_EPS
    max_evals: Optional[int] = None
    max_iters: Optional[int] = None
    screen: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        self.initial = np.array(self.initial, dtype=float).ravel()
        self.max_evals = resolve_max_evals(self.max_evals)
        if not self.eps > 0 or not self.step0 > self.eps:
            raise ValidationError(f"need step0 > eps > 0, got step0={self.step0}, eps={self.eps}")

    @property
    def dim(self) -> int:
        return self.initial.size


@dataclass
class SearchTrace:
    iterates: list = field(default_factory=list)
    final_step: float = 0.0
    evaluations: int = 0
    halvings: list = field(default_factory=list)


@dataclass
class SearchResult:
    solution: np.ndarray
    trace: SearchTrace
    converged: bool
    budget_exhausted: bool

    @property
    def objective(self) -> float:
        return self.trace.iterates[-1]


def unidirectional_search(problem: SearchProblem) -> SearchResult:
    x = problem.initial.copy()
    n = x.size
    feasible = problem.feasible or (lambda _: True)
    if not feasible(x):
        raise InfeasibleStartError("initial point is not feasible")
    fx = float(problem.objective(x))
    evals = 1
    trace = SearchTrace(iterates=[fx])
    step = float(problem.step0)
    halvings = 0
    budget_hit = False

    while step >= problem.eps:
        if evals >= problem.max_evals or (
                problem.max_iters is not None and len(trace.iterates) - 1 >= problem.max_iters):
            budget_hit = True
            break
        if problem.screen is not None:
            values = np.asarray(problem.screen(x, step), dtype=float)
            evals += 2 * n
        else:
            values = np.empty(2 * n)
            for k in range(n):
                for s, sign in enumerate((1.0, -1.0)):
                    y = x.copy()
                    y[k] += sign * step
                    values[2 * k + s] = problem.objective(y)
            evals += 2 * n
        # stable sort keeps lower index first on ties; 2k is +step, 2k+1 is -step
        better = np.flatnonzero(values < fx)
        order = better[np.argsort(values[better], kind="stable")]

        accepted = None
        for idx in order:
            k, s = divmod(int(idx), 2)
            y = x.copy()
            y[k] += step if s == 0 else -step
            fy = float(values[idx])
            if problem.screen is not None:
                fy = float(problem.objective(y))
                evals += 1
                if not fy < fx:
                    continue
            if feasible(y):
                accepted = (y, fy)
                break

        if accepted is None:
            step *= 0.5
            halvings += 1
        else:
            x, fx = accepted
            trace.iterates.append(fx)
            trace.halvings.append(halvings)
            halvings = 0

    trace.final_step = step
    trace.evaluations = evals
    return SearchResult(solution=x, trace=trace, converged=step < problem.eps,
                        budget_exhausted=budget_hit)


def linearize_loading(a) -> np.ndarray:
    """Row-major flattening of a ``p x q`` loading matrix."""
    return np.array(a, dtype=float).reshape(-1)


def delinearize(x, p: int, q: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size != p * q:
        raise ValidationError(f"vector of length {x.size} cannot form a {p}x{q} matrix")
    return x.reshape(p, q).copy()


def default_step(sigma) -> float:
    return 0.1 * float(np.sqrt(np.max(np.diag(np.asarray(sigma, dtype=float)))))


def loewner_feasible(sigma, tol: float = PSD_TOL) -> Callable[[np.ndarray], bool]:
    """Predicate ``x -> A A' <= sigma`` for a row-major loading vector ``x``."""
    s = np.asarray(sigma, dtype=float)
    p = s.shape[0]

    def feasible(x):
        a = x.reshape(p, -1)
        values = eigendecompose(s - a @ a.T).values
        return bool(values[-1] >= -tol * max(1.0, values[0]))

    return feasible


def _quadratic_weights(spec: ObjectiveSpec):
    """(w_full, w_off) when the loss is a weighted sum of squared residuals."""
    if spec.family == "frobenius_sq":
        return 1.0, 0.0
    if spec.family == "f_tau" and spec.tau == 2:
        return 0.0, 1.0
    if spec.family == "path":
        return spec.w, 1.0 - spec.w
    return None


@dataclass
class LoadingFit:
    decomposition: Decomposition
    result: SearchResult


def search_loading(spec: ObjectiveSpec, q: int, *, constrained: bool = True,
                   start=None, step0: Optional[float] = None, eps: float = DEFAULT_EPS,
                   max_evals: Optional[int] = None) -> LoadingFit:
    """Minimize a one-matrix loss ``F1(A A')`` over ``p x q`` loadings.

    ``constrained`` enforces ``A A' <= sigma``. The default start is the
    PCA loading, which is feasible (on the boundary) for the constraint.
    """
    if not spec.one_matrix:
        raise ValidationError(f"{spec.family!r} is not a one-matrix loss")
    sigma = spec.sigma.entries
    p = sigma.shape[0]
    if start is None:
        start = solve_pca(sigma, q).loading
    start = np.asarray(start, dtype=float)
    if start.shape != (p, q):
        raise ValidationError(f"start must be {p}x{q}, got {start.shape}")

    def objective(x):
        a = x.reshape(p, q)
        return evaluate(spec, a @ a.T)

    weights = _quadratic_weights(spec)

    def screen(x, step):
        return _backend.loading_candidates(sigma, x.reshape(p, q), step, *weights)

    problem = SearchProblem(
        objective=objective,
        initial=linearize_loading(start),
        feasible=loewner_feasible(sigma) if constrained else None,
        step0=default_step(sigma) if step0 is None else step0,
        eps=eps,
        max_evals=max_evals,
        screen=screen if weights is not None else None,
    )
    res = unidirectional_search(problem)
    a = delinearize(res.solution, p, q)
    t = SymmetricMatrix(a @ a.T)
    dec = Decomposition(low_rank=t, residual=as_symmetric(sigma) - t, rank=q, loading=a)
    return LoadingFit(decomposition=dec, result=res)
