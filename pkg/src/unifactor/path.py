"""Homotopy from PCA (``w = 1``) to factor analysis (``w = 0``).

Each grid point minimizes ``w * |sigma - T|_F^2 + (1 - w) * f_2(sigma - T)``
over ``T = A A' <= sigma`` of rank ``q``, warm-started from the loading of
the previous point.

A warm start on the boundary of ``A A' <= sigma`` (the PCA point always
is) is first scaled by ``sqrt(1 - interior_shrink)``. For ``q >= 2`` every
single-coordinate move from such a point typically leaves the feasible
set, so the search would never move.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .matrix import RANK_TOL, SymmetricMatrix, as_symmetric, eigendecompose
from .objectives import ObjectiveSpec, eval_f_tau
from .pca import solve_pca
from .search import DEFAULT_EPS, search_loading

DEFAULT_STEPS = 20


def default_grid(m: int = DEFAULT_STEPS) -> np.ndarray:
    """``m + 1`` evenly spaced weights from 1 down to 0."""
    if m < 1:
        raise ValidationError("grid needs at least one step")
    grid = np.linspace(1.0, 0.0, m + 1)
    grid[0], grid[-1] = 1.0, 0.0
    return grid


@dataclass(frozen=True)
class PathConfig:
    q: int
    grid: np.ndarray = field(default_factory=default_grid)
    step0: Optional[float] = None
    eps: float = DEFAULT_EPS
    max_evals: Optional[int] = None
    interior_shrink: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.interior_shrink < 1.0:
            raise ValidationError("interior_shrink must lie in [0, 1)")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise ValidationError("grid must be a nonempty sequence")
        if grid[0] != 1.0 or grid[-1] != 0.0:
            raise ValidationError("grid must start at 1 and end at 0")
        if np.any(np.diff(grid) >= 0):
            raise ValidationError("grid must be strictly decreasing")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class PathPoint:
    w: float
    t: SymmetricMatrix
    loading: np.ndarray
    pca_loss: float
    fa_loss: float
    converged: bool = True

    @property
    def combined(self) -> float:
        return self.w * self.pca_loss + (1.0 - self.w) * self.fa_loss


def _point(w: float, sigma: SymmetricMatrix, loading: np.ndarray,
           converged: bool = True) -> PathPoint:
    t = SymmetricMatrix(loading @ loading.T)
    r = sigma.entries - t.entries
    return PathPoint(w=float(w), t=t, loading=loading,
                     pca_loss=float(np.sum(r * r)), fa_loss=eval_f_tau(r, 2.0),
                     converged=converged)


def _interior(sigma: SymmetricMatrix, loading: np.ndarray, shrink: float) -> np.ndarray:
    S = sigma.entries
    lowest = eigendecompose(S - loading @ loading.T).values[-1]
    if lowest > RANK_TOL * max(1.0, eigendecompose(S).values[0]):
        return loading
    return loading * np.sqrt(1.0 - shrink)


def solve_path(sigma, config: PathConfig) -> list:
    """Solve the weighted problem at every grid weight, in grid order.

    The first point is the closed-form PCA solution; later points run a
    constrained unidirectional search from the previous loading, pulled
    into the interior when it sits on the boundary.
    """
    sigma = as_symmetric(sigma)
    q = config.q
    loading = solve_pca(sigma, q).loading
    points = [_point(1.0, sigma, loading)]
    for w in config.grid[1:]:
        start = _interior(sigma, loading, config.interior_shrink)
        fit = search_loading(ObjectiveSpec("path", sigma, w=float(w)), q, constrained=True,
                             start=start, step0=config.step0, eps=config.eps,
                             max_evals=config.max_evals)
        loading = fit.decomposition.loading
        points.append(_point(w, sigma, loading, fit.result.converged))
    return points


def emit_path_csv(points: Sequence[PathPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["w", "pca_loss", "fa_loss", "combined"])
    for pt in points:
        writer.writerow([repr(pt.w), repr(pt.pca_loss), repr(pt.fa_loss), repr(pt.combined)])
    return buf.getvalue()
