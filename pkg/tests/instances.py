"""Random instance generators and brute-force oracles shared by the tests."""
import numpy as np

from kframekit import Frame, KOperator, PiecewiseScaling, Projection


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def orthonormal_rows(rng, n, m):
    """``n x m`` matrix with orthonormal rows (needs m >= n)."""
    q, _ = np.linalg.qr(rng.standard_normal((m, n)))
    return q.T


def random_frame(rng, n, m):
    return Frame(rng.standard_normal((n, m)))


def random_k(rng, n, rank_deficient=False):
    k = rng.standard_normal((n, n))
    if rank_deficient and n > 1:
        u, s, vt = np.linalg.svd(k)
        s[-1] = 0.0
        k = (u * s) @ vt
    return k


def parseval_kframe(rng, k, m):
    """Columns ``K W`` with ``W`` having orthonormal rows, so ``S = K K^T``."""
    n = k.shape[0]
    return Frame(k @ orthonormal_rows(rng, n, m))


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def commuting_pair(rng, n):
    """Symmetric ``K = B diag(d) B^T`` with eigenvalues in pairs and an orthogonal
    ``T = B R B^T`` (``R`` rotates inside each pair), so ``TK = KT``."""
    b = random_orthogonal(rng, n)
    d = np.empty(n)
    r = np.eye(n)
    for i in range(0, n - 1, 2):
        d[i] = d[i + 1] = rng.uniform(0.5, 2.0)
        r[i:i + 2, i:i + 2] = rotation(rng.uniform(0, 2 * np.pi))
    if n % 2:
        d[-1] = rng.uniform(0.5, 2.0)
        r[-1, -1] = rng.choice([-1.0, 1.0])
    return (b * d) @ b.T, b @ r @ b.T, b, d


def piecewise_instance(rng, n, m, kind="valid", basis=None, k_blocks=None, split=None):
    """Random ``(frame, K, pw)`` with ``PK = KP`` built in a basis adapted to P.

    ``kind``:
      * ``"valid"``   -- piecewise scalable
      * ``"cross"``   -- both pieces exact, cross term nonzero
      * ``"piece_x"`` / ``"piece_y"`` -- one piece rescaled, cross term zero
      * ``"random"``  -- arbitrary positive a, b
    """
    if basis is None:
        basis = random_orthogonal(rng, n)
    if split is None:
        split = int(rng.integers(1, n))
    bx, by = basis[:, :split], basis[:, split:]
    if k_blocks is None:
        k1 = rng.standard_normal((split, split))
        k2 = rng.standard_normal((n - split, n - split))
    else:
        k1, k2 = k_blocks
    zero = np.zeros((split, n - split))
    k = basis @ np.block([[k1, zero], [zero.T, k2]]) @ basis.T
    p = bx @ bx.T

    w = orthonormal_rows(rng, n, m)
    wx, wy = w[:split], w[split:]
    if kind == "cross":
        wy = orthonormal_rows(rng, n - split, m)
        # keep rows orthonormal but correlated with wx
        mix = wx[: min(split, n - split)]
        wy = wy.copy()
        wy[: mix.shape[0]] = 0.6 * wy[: mix.shape[0]] + 0.8 * mix
        q, _ = np.linalg.qr(wy.T)
        wy = q.T
    gx = bx @ k1 @ wx
    gy = by @ k2 @ wy
    if kind == "piece_x":
        gx = 1.3 * gx
    elif kind == "piece_y":
        gy = 0.7 * gy
    a = rng.uniform(0.3, 3.0, m)
    b = rng.uniform(0.3, 3.0, m)
    f = gx / a + gy / b
    if kind == "random":
        a = rng.uniform(0.3, 3.0, m)
        b = rng.uniform(0.3, 3.0, m)
    return Frame(f), KOperator(k), PiecewiseScaling(a, b, Projection(p))


def grid_nnls(a, b, step=1e-3, upper=None):
    """Smallest ``|A w - b|`` over the grid ``w in step * N^cols`` (cols <= 2),
    ``0 <= w <= upper``.

    Two columns: every grid value of ``w_1`` is enumerated; for the convex
    1-D profile in ``w_2`` the grid minimum is one of the two grid points
    around the clamped continuous minimizer, so the result equals full
    enumeration.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    cols = a.shape[1]
    if upper is None:
        lo = np.linalg.svd(a, compute_uv=False)[-1]
        upper = 2.0 * np.linalg.norm(b) / lo if lo > 0 else 10.0
    n_pts = int(np.ceil(upper / step)) + 1
    g = step * np.arange(n_pts)
    if cols == 1:
        r = np.outer(a[:, 0], g) - b[:, None]
        res = np.sqrt((r * r).sum(axis=0))
        i = int(np.argmin(res))
        return np.array([g[i]]), float(res[i])
    if cols != 2:
        raise ValueError("grid oracle handles at most two columns")
    a1, a2 = a[:, 0], a[:, 1]
    rem = b[:, None] - np.outer(a1, g)                  # rows x n_pts
    a2n = a2 @ a2
    cont = np.clip((a2 @ rem) / a2n if a2n > 0 else np.zeros(n_pts), 0.0, g[-1])
    best_res, best_w = np.inf, None
    for cand in (np.floor(cont / step), np.ceil(cont / step)):
        w2 = np.clip(cand, 0, n_pts - 1) * step
        r = rem - np.outer(a2, w2)
        res = np.sqrt((r * r).sum(axis=0))
        i = int(np.argmin(res))
        if res[i] < best_res:
            best_res, best_w = float(res[i]), np.array([g[i], w2[i]])
    return best_w, best_res
