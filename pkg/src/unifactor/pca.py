"""Closed-form PCA: the rank-q truncation of the eigendecomposition."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NegativeSpectrumError, RankCollapseWarning, ValidationError
from .matrix import (
    PSD_TOL,
    RANK_TOL,
    Decomposition,
    SymmetricMatrix,
    as_symmetric,
    cumulative_proportion,
    eigendecompose,
)

WELL_REPRESENTED = 0.85


def truncate(s, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading ``q`` eigenpairs of ``s`` with eigenvalues clipped at zero.

    Returns ``(values, vectors)``. This is the best PSD rank-``q``
    approximation of any symmetric ``s`` in Frobenius and spectral norm.
    """
    es = eigendecompose(s)
    values, vectors = es.leading(q)
    return np.clip(values, 0.0, None), vectors


def solve_pca(sigma, q: int, tol: float = RANK_TOL) -> Decomposition:
    """Rank-``q`` PCA split ``sigma = R1 L1 R1' + R2 L2 R2'``.

    The loading is ``R1 * sqrt(L1)``. A :class:`RankCollapseWarning` is
    issued (not raised) when the q-th eigenvalue is at or below ``tol``
    relative to ``max(1, largest)``.
    """
    sigma = as_symmetric(sigma)
    p = sigma.dim
    if not 1 <= q < p:
        raise ValidationError(f"q must satisfy 1 <= q < p={p}, got {q}")
    es = eigendecompose(sigma)
    if es.values[-1] < -PSD_TOL * max(1.0, es.values[0]):
        raise NegativeSpectrumError(f"sigma is not PSD (min eigenvalue {es.values[-1]:g})")
    values, vectors = es.leading(q)
    if values[-1] <= tol * max(1.0, es.values[0]):
        warnings.warn(f"q-th eigenvalue {values[-1]:g} is numerically zero; "
                      "T has lower rank than requested", RankCollapseWarning, stacklevel=2)
    values = np.clip(values, 0.0, None)
    loading = vectors * np.sqrt(values)
    t = SymmetricMatrix(loading @ loading.T)
    return Decomposition(low_rank=t, residual=sigma - t, rank=q, loading=loading)


@dataclass(frozen=True)
class PcaReport:
    decomposition: Decomposition
    cumulative_proportion: float
    variances: np.ndarray
    well_represented: bool


def pca_report(sigma, q: int) -> PcaReport:
    """PCA fit plus the cumulative proportion of the leading ``q`` components."""
    sigma = as_symmetric(sigma)
    dec = solve_pca(sigma, q)
    es = eigendecompose(sigma)
    prop = cumulative_proportion(es, q)
    return PcaReport(
        decomposition=dec,
        cumulative_proportion=prop,
        variances=es.values.copy(),
        # 17/20 must count as 0.85
        well_represented=prop >= WELL_REPRESENTED - 1e-12,
    )
