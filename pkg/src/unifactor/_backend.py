"""Kernel selection.

The compiled ``_kernels`` extension is used when importable; otherwise the
numpy twins in ``_fallback`` take over. Setting ``UNIFACTOR_PURE_PYTHON=1``
forces the fallback.
"""
import importlib
import os

_FORCE_PURE = os.environ.get("UNIFACTOR_PURE_PYTHON", "").strip() not in ("", "0")


def load(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "cython":
        return importlib.import_module("unifactor._kernels")
    if name == "python":
        return importlib.import_module("unifactor._fallback")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if _FORCE_PURE:
    BACKEND = "python"
else:
    BACKEND = available()[0]

_impl = load(BACKEND)
jacobi_eigh = _impl.jacobi_eigh
loading_candidates = _impl.loading_candidates
nnqp_projected_gradient = _impl.nnqp_projected_gradient
coordinate_descent = _impl.coordinate_descent
