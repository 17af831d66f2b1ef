"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

_EPS = np.finfo(float).eps


def jacobi_eigh(a_in, max_sweeps=50):
    a = np.array(a_in, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    fro = np.sqrt(np.sum(a * a))
    iu = np.triu_indices(n, 1)
    done = False
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(a[iu] ** 2))
        if off <= _EPS * fro:
            done = True
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                if (sweep > 3 and abs(a[p, p]) + g == abs(a[p, p])
                        and abs(a[q, q]) + g == abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                # overflow to inf gives t = 0, same as the compiled kernel
                with np.errstate(over="ignore"):
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, (sweep if done else -1)


def loading_candidates(sigma_in, loading_in, step, w_full, w_off):
    sigma = np.asarray(sigma_in, dtype=float)
    A = np.asarray(loading_in, dtype=float)
    p, m = A.shape
    r = sigma - A @ A.T
    r_off = r.copy()
    np.fill_diagonal(r_off, 0.0)
    base_off = 0.5 * np.sum(r_off ** 2)
    base_full = 2.0 * base_off + np.sum(np.diag(r) ** 2)
    old_off = np.sum(r_off ** 2, axis=1)                       # (p,)
    old_full = 2.0 * old_off + np.diag(r) ** 2

    d = np.array([step, -step])                                  # (2,)
    # candidate row i after moving a_ij by d: r_ik - d * a_kj, k != i
    new_rows = r_off[:, None, None, :] - d[None, None, :, None] * A.T[None, :, None, :]
    new_rows *= (1.0 - np.eye(p))[:, None, None, :]
    new_off = np.sum(new_rows ** 2, axis=3)                      # (p, m, 2)
    rii = np.diag(r)[:, None, None] - 2.0 * d[None, None, :] * A[:, :, None] - d[None, None, :] ** 2
    new_full = 2.0 * new_off + rii ** 2
    out = (w_full * (base_full - old_full[:, None, None] + new_full)
           + w_off * (base_off - old_off[:, None, None] + new_off))
    return out.reshape(-1)


def nnqp_projected_gradient(H_in, b_in, z0_in, lipschitz, tol_abs, max_iters):
    H = np.asarray(H_in, dtype=float)
    b = np.asarray(b_in, dtype=float)
    z = np.maximum(np.array(z0_in, dtype=float, copy=True), 0.0)
    step = 1.0 / lipschitz
    for it in range(max_iters + 1):
        g = H @ z - b
        pos = z > 0.0
        if (np.all(np.abs(2.0 * g[pos]) <= tol_abs)
                and np.all(2.0 * g[~pos] >= -tol_abs)):
            return z, it, True
        if it == max_iters:
            break
        z = np.maximum(z - step * g, 0.0)
    return z, max_iters, False


def coordinate_descent(sigma_in, q, lam, eps, max_iters, v0_in, max_sweeps=50):
    S = np.asarray(sigma_in, dtype=float)
    p = S.shape[0]
    t = np.zeros((p, p))
    v = np.array(v0_in, dtype=float, copy=True)
    r = S - np.diag(v)
    ls = float(np.sum(r * r))
    trace = [ls + lam * float(v @ v)]
    resid = np.sqrt(ls)
    iterations, status = 0, 1
    for k in range(1, max_iters + 1):
        diag, w, sweeps = jacobi_eigh(S - np.diag(v), max_sweeps)
        if sweeps < 0:
            status = 2
            break
        pick = np.argsort(-diag, kind="stable")[:q]
        lead = np.clip(diag[pick], 0.0, None)
        t = (w[:, pick] * lead) @ w[:, pick].T
        v = np.clip(np.diag(S - t), 0.0, None) / (1.0 + lam)
        r = S - t - np.diag(v)
        ls = float(np.sum(r * r))
        trace.append(ls + lam * float(v @ v))
        iterations = k
        resid_new = np.sqrt(ls)
        if resid - resid_new < eps:
            status = 0
            break
        resid = resid_new
    return t, v, np.array(trace), iterations, status
