"""Loss functions over symmetric matrices and (T, V) pairs.

One-matrix losses take the residual ``S = sigma - T``; two-matrix losses
take ``(T, V)`` and the reference ``sigma``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularModelError, ValidationError
from .matrix import (
    RANK_TOL,
    SymmetricMatrix,
    as_array,
    eigendecompose,
    numeric_rank,
)

ELEMENTARY = ("trace", "spectral", "frobenius", "rank")
FAMILIES = (
    "trace", "spectral", "frobenius", "frobenius_sq", "rank", "modified_l0",
    "f_tau", "f_offdiag", "neg_loglik", "penalized_ml_f", "penalized_ml_v2",
    "ls", "pls", "path", "wasserstein",
)
# families evaluated on T alone; the rest need V as well
ONE_MATRIX = (
    "trace", "spectral", "frobenius", "frobenius_sq", "rank", "modified_l0",
    "f_tau", "f_offdiag", "path", "wasserstein",
)

ZERO_TOL = 1e-8
DET_RTOL = 1e-10
PD_TOL = 1e-12


def eval_elementary(f: str, s) -> float:
    """trace, spectral norm (largest |eigenvalue|), Frobenius norm, or rank."""
    a = as_array(s)
    if f == "trace":
        return float(np.trace(a))
    if f == "spectral":
        return float(np.max(np.abs(eigendecompose(a).values)))
    if f == "frobenius":
        return float(np.sqrt(np.sum(a * a)))
    if f == "rank":
        return float(numeric_rank(a, RANK_TOL))
    raise ValidationError(f"unknown elementary loss {f!r}")


def eval_modified_l0(s, zero_tol: float = ZERO_TOL, det_rtol: float = DET_RTOL) -> float:
    """Entry count for nonsingular ``s``, ``p`` for singular nonzero ``s``, 0 for zero."""
    a = as_array(s)
    p = a.shape[0]
    nonzero = np.abs(a) > zero_tol
    if not nonzero.any():
        return 0.0
    det = abs(float(np.prod(eigendecompose(a).values)))
    if det <= det_rtol * (1.0 + np.sqrt(np.sum(a * a))) ** p:
        return float(p)
    return float(nonzero.sum())


def eval_f_tau(s, tau: float, zero_tol: float = ZERO_TOL) -> float:
    """Sum of ``|s_ij|**tau`` over the strict upper triangle.

    With ``tau == 0`` the sum counts entries above ``zero_tol`` (so ``0**0``
    contributes nothing).
    """
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    a = as_array(s)
    upper = np.abs(a[np.triu_indices(a.shape[0], 1)])
    if tau == 0:
        return float(np.sum(upper > zero_tol))
    return float(np.sum(upper ** tau))


def eval_f_offdiag(s, base_f: str) -> float:
    """``f(s) - f(diag(s))`` for the spectral or Frobenius norm."""
    if base_f not in ("spectral", "frobenius"):
        raise ValidationError(f"base_f must be 'spectral' or 'frobenius', got {base_f!r}")
    a = as_array(s)
    return eval_elementary(base_f, a) - eval_elementary(base_f, np.diag(np.diag(a)))


def eval_neg_loglik(t, v, sigma, pd_tol: float = PD_TOL) -> float:
    """``log|T + V| + trace((T + V)^{-1} sigma)``.

    Raises
    ------
    SingularModelError
        If the smallest eigenvalue of ``T + V`` is not above ``pd_tol``
        times ``max(1, largest)``.
    """
    m = as_array(t) + as_array(v)
    es = eigendecompose(m)
    lam = es.values
    if lam[-1] <= pd_tol * max(1.0, lam[0]):
        raise SingularModelError(f"model covariance not positive definite (min eigenvalue {lam[-1]:g})")
    R = es.vectors
    quad = np.einsum("ik,ij,jk->k", R, as_array(sigma), R)
    return float(np.sum(np.log(lam)) + np.sum(quad / lam))


def eval_ls(t, v, sigma) -> float:
    r = as_array(sigma) - as_array(t) - as_array(v)
    return float(np.sum(r * r))


def eval_pls(t, v, sigma, lam: float) -> float:
    vv = as_array(v)
    return eval_ls(t, v, sigma) + lam * float(np.sum(vv * vv))


def eval_path(t, sigma, w: float) -> float:
    """``w * |sigma - T|_F^2 + (1 - w) * f_2(sigma - T)``."""
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"w must lie in [0, 1], got {w}")
    r = as_array(sigma) - as_array(t)
    return w * float(np.sum(r * r)) + (1.0 - w) * eval_f_tau(r, 2.0)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    es = eigendecompose(a)
    root = np.sqrt(np.clip(es.values, 0.0, None))
    return (es.vectors * root) @ es.vectors.T


def eval_wasserstein(t, sigma) -> float:
    """Squared 2-Wasserstein distance between ``N(0, sigma)`` and ``N(0, T)``."""
    s = as_array(sigma)
    tt = as_array(t)
    rs = _psd_sqrt(s)
    cross = _psd_sqrt(rs @ tt @ rs)
    return max(0.0, float(np.trace(s) + np.trace(tt) - 2.0 * np.trace(cross)))


@dataclass(frozen=True)
class ObjectiveSpec:
    """A named loss family with its parameters and reference covariance.

    ``lam`` is the penalty weight (``lambda`` on the command line).
    """

    family: str
    sigma: SymmetricMatrix
    tau: Optional[float] = None
    lam: Optional[float] = None
    w: Optional[float] = None
    base_f: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown objective family {self.family!r}")
        if not isinstance(self.sigma, SymmetricMatrix):
            object.__setattr__(self, "sigma", SymmetricMatrix(self.sigma))
        needs = {
            "tau": self.family == "f_tau",
            "lam": self.family in ("penalized_ml_f", "penalized_ml_v2", "pls"),
            "w": self.family == "path",
            "base_f": self.family in ("f_offdiag", "penalized_ml_f"),
        }
        for name, required in needs.items():
            present = getattr(self, name) is not None
            if required and not present:
                raise ValidationError(f"family {self.family!r} requires {name}")
            if present and not required:
                raise ValidationError(f"family {self.family!r} does not take {name}")
        if self.tau is not None and self.tau < 0:
            raise ValidationError("tau must be nonnegative")
        if self.lam is not None and self.lam < 0:
            raise ValidationError("lambda must be nonnegative")
        if self.w is not None and not 0.0 <= self.w <= 1.0:
            raise ValidationError("w must lie in [0, 1]")
        if self.family == "f_offdiag" and self.base_f not in ("spectral", "frobenius"):
            raise ValidationError("f_offdiag needs base_f 'spectral' or 'frobenius'")
        if self.family == "penalized_ml_f" and self.base_f not in ("trace", "spectral", "frobenius"):
            raise ValidationError("penalized_ml_f needs base_f 'trace', 'spectral' or 'frobenius'")

    @property
    def one_matrix(self) -> bool:
        return self.family in ONE_MATRIX

    def __call__(self, t, v=None) -> float:
        return evaluate(self, t, v)


def eval_penalized(spec: ObjectiveSpec, t, v) -> float:
    """Negative log-likelihood plus ``lam * f(sigma - T)`` or ``lam * |V|_2^2``."""
    base = eval_neg_loglik(t, v, spec.sigma)
    if spec.family == "penalized_ml_f":
        return base + spec.lam * eval_elementary(spec.base_f, spec.sigma.entries - as_array(t))
    if spec.family == "penalized_ml_v2":
        return base + spec.lam * eval_elementary("spectral", v) ** 2
    raise ValidationError(f"{spec.family!r} is not a penalized family")


def evaluate(spec: ObjectiveSpec, t, v=None) -> float:
    """Evaluate ``spec`` at ``T`` (and ``V`` for two-matrix families)."""
    sigma = spec.sigma.entries
    fam = spec.family
    if fam in ONE_MATRIX:
        s = sigma - as_array(t)
        if fam in ELEMENTARY:
            return eval_elementary(fam, s)
        if fam == "frobenius_sq":
            return float(np.sum(s * s))
        if fam == "modified_l0":
            return eval_modified_l0(s)
        if fam == "f_tau":
            return eval_f_tau(s, spec.tau)
        if fam == "f_offdiag":
            return eval_f_offdiag(s, spec.base_f)
        if fam == "path":
            return eval_path(t, sigma, spec.w)
        return eval_wasserstein(t, sigma)
    if v is None:
        raise ValidationError(f"family {fam!r} needs both T and V")
    if fam == "neg_loglik":
        return eval_neg_loglik(t, v, sigma)
    if fam in ("penalized_ml_f", "penalized_ml_v2"):
        return eval_penalized(spec, t, v)
    if fam == "ls":
        return eval_ls(t, v, sigma)
    return eval_pls(t, v, sigma, spec.lam)
