"""Inner loops: Jacobi eigen/SVD sweeps, Lawson-Hanson NNLS, projected iteration.

Every kernel is written in the numpy subset numba understands, so the same
source runs compiled or interpreted (see ``_accel``).  Kernels never raise;
they hand back a status code and the Python wrappers decide what to do.
"""
import numpy as np

from ._accel import jit

# status codes shared with the wrappers
OK = 0
NOT_CONVERGED = 1

WHOLE_SPACE = 0
BOX = 1
BALL = 2
HALFSPACE = 3
AFFINE = 4


@jit
def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Returns the (unsorted) diagonal, the accumulated rotations, the number of
    sweeps used and a status code.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(n), v, 0, OK
    status = NOT_CONVERGED
    sweep = 0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if np.sqrt(off) <= tol * scale:
            status = OK
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweep, status


@jit
def jacobi_svd(a, tol, max_sweeps):
    """One-sided (Hestenes) Jacobi SVD of a tall matrix (rows >= cols).

    Returns ``u, s, v, sweeps, status`` with ``a = u @ diag(s) @ v.T``;
    singular values come back unsorted and columns of ``u`` belonging to
    zero singular values are left at zero.
    """
    m, n = a.shape
    # columns are stored as rows so every dot product runs on contiguous data
    ut = np.ascontiguousarray(a.T)
    vt = np.eye(n)
    status = NOT_CONVERGED
    sweep = 0
    for sweep in range(max_sweeps + 1):
        rotated = False
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = np.dot(ut[p], ut[p])
                beta = np.dot(ut[q], ut[q])
                gamma = np.dot(ut[p], ut[q])
                if alpha == 0.0 or beta == 0.0:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = 1.0 / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                    if zeta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                up = ut[p].copy()
                uq = ut[q].copy()
                ut[p] = c * up - s * uq
                ut[q] = s * up + c * uq
                vp = vt[p].copy()
                vq = vt[q].copy()
                vt[p] = c * vp - s * vq
                vt[q] = s * vp + c * vq
        if not rotated:
            status = OK
            break
    s = np.empty(n)
    for j in range(n):
        s[j] = np.sqrt(np.dot(ut[j], ut[j]))
        if s[j] > 0.0:
            ut[j] = ut[j] / s[j]
    return ut.T.copy(), s, vt.T.copy(), sweep, status


@jit
def nnls_active_set(a, b, tol, max_outer):
    """Lawson-Hanson active-set NNLS.

    ``tol`` is the dual-feasibility threshold: a column enters the passive
    set only if its gradient component exceeds it.  Returns
    ``x, rnorm, outer_iterations, status``.
    """
    m, n = a.shape
    x = np.zeros(n)
    passive = np.zeros(n, dtype=np.bool_)
    blocked = np.zeros(n, dtype=np.bool_)
    w = a.T @ b
    outer = 0
    status = OK
    while True:
        j_in = -1
        w_best = tol
        for j in range(n):
            if not passive[j] and not blocked[j] and w[j] > w_best:
                w_best = w[j]
                j_in = j
        if j_in < 0:
            break
        if outer >= max_outer:
            status = NOT_CONVERGED
            break
        outer += 1
        passive[j_in] = True
        first = True
        while True:
            idx = np.nonzero(passive)[0]
            z = np.zeros(n)
            if idx.size > 0:
                sol = np.linalg.lstsq(a[:, idx], b, 1e-13)[0]
                for k in range(idx.size):
                    z[idx[k]] = sol[k]
            if first and z[j_in] <= 0.0:
                # roundoff put the new column at a non-positive value; undo
                passive[j_in] = False
                blocked[j_in] = True
                break
            first = False
            feasible = True
            for k in range(idx.size):
                if z[idx[k]] <= 0.0:
                    feasible = False
            if feasible:
                x = z
                blocked[:] = False
                break
            step = 1.0
            j_out = idx[0]
            for k in range(idx.size):
                j = idx[k]
                if z[j] <= 0.0:
                    r = x[j] / (x[j] - z[j])
                    if r < step:
                        step = r
                        j_out = j
            x = x + step * (z - x)
            x[j_out] = 0.0
            x_max = np.max(np.abs(x))
            for k in range(idx.size):
                j = idx[k]
                if x[j] <= 1e-15 * x_max:
                    passive[j] = False
                    x[j] = 0.0
            if not np.any(passive):
                blocked[:] = False
                break
        w = a.T @ (b - a @ x)
    r = b - a @ x
    return x, np.sqrt(np.dot(r, r)), outer, status


@jit
def project_point(kind, v, vec_a, vec_b, basis, scalar):
    """Euclidean projection of ``v`` onto one of the built-in convex sets."""
    n = v.shape[0]
    if kind == BOX:
        out = v.copy()
        for i in range(n):
            if out[i] < vec_a[i]:
                out[i] = vec_a[i]
            elif out[i] > vec_b[i]:
                out[i] = vec_b[i]
        return out
    if kind == BALL:
        d = v - vec_a
        dn = np.sqrt(np.dot(d, d))
        if dn <= scalar:
            return v.copy()
        return vec_a + d * (scalar / dn)
    if kind == HALFSPACE:
        excess = np.dot(vec_a, v) - scalar
        if excess <= 0.0:
            return v.copy()
        return v - (excess / np.dot(vec_a, vec_a)) * vec_a
    if kind == AFFINE:
        d = v - vec_a
        out = vec_a.copy()
        for j in range(basis.shape[1]):
            coef = 0.0
            for i in range(n):
                coef += basis[i, j] * d[i]
            for i in range(n):
                out[i] += coef * basis[i, j]
        return out
    return v.copy()


@jit
def projected_iteration(lam, g, gamma, resid_scale, kind, vec_a, vec_b, basis,
                        scalar, v0, tol, max_iter):
    """Iterate ``v <- P_C(v + gamma * (g - lam @ v))`` from ``v0``.

    Stops once the step norm ``s`` satisfies both ``s <= tol*(1+|v|)`` and
    ``resid_scale*s <= tol*(1+|v|)``.  Returns ``v, iterations,
    step_norms, status``.
    """
    steps = np.zeros(max_iter)
    v = v0.copy()
    status = NOT_CONVERGED
    it = 0
    while it < max_iter:
        y = v + gamma * (g - lam @ v)
        v_next = project_point(kind, y, vec_a, vec_b, basis, scalar)
        d = v_next - v
        step = np.sqrt(np.dot(d, d))
        steps[it] = step
        it += 1
        v = v_next
        bound = tol * (1.0 + np.sqrt(np.dot(v, v)))
        if step <= bound and resid_scale * step <= bound:
            status = OK
            break
    return v, it, steps[:it], status
