# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a numpy twin in ``_fallback.py`` with the same
signature and return convention; ``_backend`` picks one at import time.
"""
import numpy as np

from libc.float cimport DBL_EPSILON
from libc.math cimport fabs, sqrt


cdef int _jacobi(double[:, ::1] a, double[:, ::1] v, int max_sweeps) noexcept nogil:
    """In-place Jacobi sweeps on ``a``; rotations accumulate into ``v``.

    ``v`` must hold the identity on entry. Returns the number of sweeps
    used, or -1 without convergence.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k, p, q
    cdef int sweep
    cdef double fro = 0.0, off, apq, theta, t, c, s, akp, akq, g

    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = sqrt(fro)

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if sqrt(off) <= DBL_EPSILON * fro:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * fabs(apq)
                if sweep > 3 and fabs(a[p, p]) + g == fabs(a[p, p]) \
                        and fabs(a[q, q]) + g == fabs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - s * akq
                    a[q, k] = s * akp + c * akq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    akp = v[k, p]
                    akq = v[k, q]
                    v[k, p] = c * akp - s * akq
                    v[k, q] = s * akp + c * akq
    return -1


def jacobi_eigh(a_in, int max_sweeps=50):
    """Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix.

    Returns ``(diagonal, vectors, sweeps)`` in raw rotation order; ``sweeps``
    is -1 when the off-diagonal mass did not vanish within ``max_sweeps``.
    """
    a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] a = a_arr
    v_arr = np.eye(a.shape[0], dtype=np.float64)
    cdef int sweeps = _jacobi(a, v_arr, max_sweeps)
    return np.diagonal(a_arr).copy(), v_arr, sweeps


def loading_candidates(sigma_in, loading_in, double step, double w_full, double w_off):
    """Screening losses for every +/- ``step`` move of a loading matrix.

    The loss is ``w_full * sum_ij r_ij**2 + w_off * sum_{i<j} r_ij**2`` with
    ``r = sigma - A A'``. Output index ``2*k`` holds the ``+step`` move of
    the row-major coordinate ``k``, index ``2*k + 1`` the ``-step`` move.
    """
    cdef const double[:, ::1] sigma = np.ascontiguousarray(sigma_in, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(loading_in, dtype=np.float64)
    cdef Py_ssize_t p = A.shape[0], m = A.shape[1]
    cdef Py_ssize_t i, j, k, l, idx
    r_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] r = r_arr
    out_arr = np.empty(2 * p * m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, base_full = 0.0, base_off = 0.0
    cdef double old_full, old_off, new_full, new_off, d, rik, rii, sgn

    for i in range(p):
        for k in range(p):
            acc = 0.0
            for l in range(m):
                acc += A[i, l] * A[k, l]
            r[i, k] = sigma[i, k] - acc
    for i in range(p):
        base_full += r[i, i] * r[i, i]
        for k in range(i + 1, p):
            base_off += r[i, k] * r[i, k]
    base_full += 2.0 * base_off

    idx = 0
    for i in range(p):
        old_off = 0.0
        for k in range(p):
            if k != i:
                old_off += r[i, k] * r[i, k]
        old_full = 2.0 * old_off + r[i, i] * r[i, i]
        for j in range(m):
            for sgn in (1.0, -1.0):
                d = sgn * step
                new_off = 0.0
                for k in range(p):
                    if k != i:
                        rik = r[i, k] - d * A[k, j]
                        new_off += rik * rik
                rii = r[i, i] - 2.0 * d * A[i, j] - d * d
                new_full = 2.0 * new_off + rii * rii
                out[idx] = (w_full * (base_full - old_full + new_full)
                            + w_off * (base_off - old_off + new_off))
                idx += 1
    return out_arr


def nnqp_projected_gradient(H_in, b_in, z0_in, double lipschitz, double tol_abs,
                            long max_iters):
    """Projected gradient for ``min z'Hz - 2b'z`` subject to ``z >= 0``.

    Fixed step ``1/lipschitz`` on the half-gradient ``Hz - b``. Returns
    ``(z, iterations, converged)``.
    """
    cdef const double[:, ::1] H = np.ascontiguousarray(H_in, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    z_arr = np.array(z0_in, dtype=np.float64, copy=True)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t n = z.shape[0], i, j
    g_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef double acc, step = 1.0 / lipschitz, zi
    cdef long it
    cdef bint ok

    for i in range(n):
        if z[i] < 0.0:
            z[i] = 0.0
    for it in range(max_iters + 1):
        ok = True
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += H[i, j] * z[j]
            g[i] = acc - b[i]
            # stationarity is stated on the full gradient 2(Hz - b)
            if z[i] > 0.0:
                if fabs(2.0 * g[i]) > tol_abs:
                    ok = False
            elif 2.0 * g[i] < -tol_abs:
                ok = False
        if ok:
            return z_arr, it, True
        if it == max_iters:
            break
        for i in range(n):
            zi = z[i] - step * g[i]
            z[i] = zi if zi > 0.0 else 0.0
    return z_arr, max_iters, False


def coordinate_descent(sigma_in, int q, double lam, double eps, long max_iters, v0_in,
                       int max_sweeps=50):
    """Alternating rank-``q`` truncation and diagonal shrinkage.

    ``T <- top-q truncation of (sigma - diag(v))`` with eigenvalues clipped
    at zero, then ``v <- max(diag(sigma - T), 0) / (1 + lam)``, from
    ``T = 0``. Stops when ``|sigma - T - diag(v)|_F`` falls by less than
    ``eps``. Returns ``(T, v, trace, iterations, status)`` where ``trace``
    holds the penalized loss per iterate and ``status`` is 0 (converged),
    1 (``max_iters`` reached) or 2 (eigensolver failure).
    """
    cdef const double[:, ::1] S = np.ascontiguousarray(sigma_in, dtype=np.float64)
    cdef Py_ssize_t p = S.shape[0], i, j, l, best
    t_arr = np.zeros((p, p), dtype=np.float64)
    v_arr = np.array(v0_in, dtype=np.float64, copy=True)
    trace_arr = np.empty(max_iters + 1, dtype=np.float64)
    cdef double[:, ::1] t = t_arr
    cdef double[::1] v = v_arr
    cdef double[::1] trace = trace_arr
    cdef double[:, ::1] m = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] w = np.empty((p, p), dtype=np.float64)
    cdef Py_ssize_t[::1] pick = np.empty(q, dtype=np.intp)
    cdef double[::1] lead = np.empty(q, dtype=np.float64)
    cdef unsigned char[::1] used = np.zeros(p, dtype=np.uint8)
    cdef double ls, pen, r, resid, resid_new, acc
    cdef long k, iterations = 0
    cdef int status = 1

    ls = 0.0
    pen = 0.0
    for i in range(p):
        pen += v[i] * v[i]
        for j in range(p):
            r = S[i, j] - (v[i] if i == j else 0.0)
            ls += r * r
    trace[0] = ls + lam * pen
    resid = sqrt(ls)

    with nogil:
        for k in range(1, max_iters + 1):
            for i in range(p):
                used[i] = 0
                for j in range(p):
                    m[i, j] = S[i, j]
                    w[i, j] = 1.0 if i == j else 0.0
                m[i, i] -= v[i]
            if _jacobi(m, w, max_sweeps) < 0:
                status = 2
                break
            # descending order, lowest index first on ties
            for l in range(q):
                best = -1
                for i in range(p):
                    if not used[i] and (best < 0 or m[i, i] > m[best, best]):
                        best = i
                used[best] = 1
                pick[l] = best
                lead[l] = m[best, best] if m[best, best] > 0.0 else 0.0
            for i in range(p):
                for j in range(i, p):
                    acc = 0.0
                    for l in range(q):
                        acc += lead[l] * w[i, pick[l]] * w[j, pick[l]]
                    t[i, j] = acc
                    t[j, i] = acc
            for i in range(p):
                r = S[i, i] - t[i, i]
                v[i] = (r if r > 0.0 else 0.0) / (1.0 + lam)
            ls = 0.0
            pen = 0.0
            for i in range(p):
                pen += v[i] * v[i]
                for j in range(p):
                    r = S[i, j] - t[i, j] - (v[i] if i == j else 0.0)
                    ls += r * r
            trace[k] = ls + lam * pen
            iterations = k
            resid_new = sqrt(ls)
            if resid - resid_new < eps:
                status = 0
                break
            resid = resid_new

    return t_arr, v_arr, trace_arr[:iterations + 1].copy(), iterations, status
