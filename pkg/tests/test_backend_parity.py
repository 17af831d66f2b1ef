"""The compiled kernels and their numpy twins must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrices import random_psd
from unifactor import BACKEND, _backend

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled extension not built")
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def kernels():
    return _backend.load("cython"), _backend.load("python")


def test_default_backend_is_compiled():
    if os.environ.get("UNIFACTOR_PURE_PYTHON", "") in ("", "0"):
        assert BACKEND == "cython"


def test_env_forces_fallback():
    env = dict(os.environ, UNIFACTOR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import unifactor; print(unifactor.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == "python"


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 8))
def test_jacobi(kernels, seed, p):
    fast, slow = kernels
    b = np.random.default_rng(seed).standard_normal((p, p))
    a = b + b.T
    d1, v1, s1 = fast.jacobi_eigh(a)
    d2, v2, s2 = slow.jacobi_eigh(a)
    assert s1 == s2
    np.testing.assert_allclose(d1, d2, atol=1e-12 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(v1, v2, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 7), st.integers(1, 3), st.floats(0.0, 1.0))
def test_loading_candidates(kernels, seed, p, q, w):
    fast, slow = kernels
    rng = np.random.default_rng(seed)
    sigma = random_psd(rng, p)
    a = rng.standard_normal((p, q))
    x = fast.loading_candidates(sigma, a, 0.05, w, 1 - w)
    y = slow.loading_candidates(sigma, a, 0.05, w, 1 - w)
    np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-10)
    # independent check against direct evaluation
    k = 0
    for i in range(p):
        for j in range(q):
            for d in (0.05, -0.05):
                b = a.copy()
                b[i, j] += d
                r = sigma - b @ b.T
                off = np.sum(np.triu(r, 1) ** 2)
                assert x[k] == pytest.approx(w * np.sum(r * r) + (1 - w) * off, rel=1e-10, abs=1e-10)
                k += 1


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_nnqp(kernels, seed, n):
    fast, slow = kernels
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    h = m @ m.T + 0.1 * np.eye(n)
    b = rng.standard_normal(n)
    lead = float(np.linalg.eigvalsh(h)[-1])
    z1, it1, ok1 = fast.nnqp_projected_gradient(h, b, np.zeros(n), lead, 1e-10, 5000)
    z2, it2, ok2 = slow.nnqp_projected_gradient(h, b, np.zeros(n), lead, 1e-10, 5000)
    assert (it1, ok1) == (it2, ok2)
    np.testing.assert_allclose(z1, z2, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 5), st.sampled_from([0.0, 1e-3, 1.0]))
def test_coordinate_descent(kernels, seed, p, lam):
    fast, slow = kernels
    rng = np.random.default_rng(seed)
    sigma = random_psd(rng, p)
    q = int(rng.integers(1, p))
    t1, v1, tr1, it1, st1 = fast.coordinate_descent(sigma, q, lam, 1e-10, 200, np.zeros(p))
    t2, v2, tr2, it2, st2 = slow.coordinate_descent(sigma, q, lam, 1e-10, 200, np.zeros(p))
    assert (it1, st1) == (it2, st2)
    np.testing.assert_allclose(t1, t2, atol=1e-9)
    np.testing.assert_allclose(v1, v2, atol=1e-9)
    np.testing.assert_allclose(tr1, tr2, rtol=1e-9, atol=1e-12)
