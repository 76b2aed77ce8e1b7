"""Dense small-matrix primitives: symmetric eigensolver, PSD square root,
pseudoinverse, NNLS and spectral norm.

Everything here is real, dense and meant for n up to a few dozen.  Inputs
are validated (finite, right shape); outputs are fresh arrays.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (AsymmetricInput, ConvergenceFailure, DimensionMismatch,
                     IterationCapExceeded, NonFiniteInput, NonSquare, NotPSD)

EIG_TOL = 1e-14
EIG_MAX_SWEEPS = 100
SVD_MAX_SWEEPS = 100
SYMMETRY_RTOL = 1e-10
CLIP_RTOL = 1e-12
ZERO_SCALE_ATOL = 1e-12


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D float64 array (copy)."""
    arr = np.array(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} has NaN or infinite entries")
    return arr


def as_vector(v, name="vector", dim=None):
    arr = np.array(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} has NaN or infinite entries")
    return arr


def frob(m):
    return float(np.sqrt(np.sum(np.square(m))))


def _require_square(m, name):
    if m.shape[0] != m.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {m.shape}")


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues in ascending order and matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrized before factoring; asymmetry beyond
    ``1e-10 * |M|_F`` is rejected.

    >>> sym_eig([[0.0, 1.0], [1.0, 0.0]]).eigenvalues
    array([-1.,  1.])
    """
    a = as_matrix(m)
    _require_square(a, "matrix")
    scale = frob(a)
    if frob(a - a.T) > SYMMETRY_RTOL * scale:
        raise AsymmetricInput(
            f"asymmetry {frob(a - a.T):.3e} exceeds {SYMMETRY_RTOL:g} * |M|_F")
    a = 0.5 * (a + a.T)
    w, v, _, status = _kernels.jacobi_eigh(a, EIG_TOL, EIG_MAX_SWEEPS)
    if status != _kernels.OK:
        raise ConvergenceFailure(f"Jacobi eigensolver did not converge in {EIG_MAX_SWEEPS} sweeps")
    order = np.argsort(w, kind="stable")
    return SymEig(w[order], np.ascontiguousarray(v[:, order]))


def sqrt_psd(m):
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues in ``[-1e-12 * lambda_max, 0)`` are treated as roundoff and
    clipped to zero; anything more negative raises ``NotPSD``.
    """
    eig = sym_eig(m)
    lam = eig.eigenvalues
    lam_max = max(float(lam[-1]), 0.0)
    clip = CLIP_RTOL * lam_max if lam_max > 0 else ZERO_SCALE_ATOL
    if lam[0] < -clip:
        raise NotPSD(f"eigenvalue {lam[0]:.3e} below clipping threshold {-clip:.3e}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    q = eig.eigenvectors
    r = (q * root) @ q.T
    return 0.5 * (r + r.T)


def svd(m):
    """Thin SVD ``M = U diag(s) V^T`` with ``s`` sorted descending (one-sided Jacobi)."""
    a = as_matrix(m)
    rows, cols = a.shape
    tall = rows >= cols
    work = a if tall else np.ascontiguousarray(a.T)
    tol = 4.0 * np.finfo(float).eps * max(work.shape)
    u, s, v, _, status = _kernels.jacobi_svd(work, tol, SVD_MAX_SWEEPS)
    if status != _kernels.OK:
        raise ConvergenceFailure(f"Jacobi SVD did not converge in {SVD_MAX_SWEEPS} sweeps")
    order = np.argsort(-s, kind="stable")
    u, s, v = u[:, order], s[order], v[:, order]
    if not tall:
        u, v = v, u
    return u, s, v


def singular_values(m):
    return svd(m)[1]


def operator_norm(m):
    """Spectral norm (largest singular value)."""
    s = singular_values(m)
    return float(s[0]) if s.size else 0.0


def numerical_rank(m, rtol=1e-10):
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def pinv(m, rtol=1e-12, atol=0.0):
    """Moore-Penrose pseudoinverse.

    Singular values at or below ``max(rtol * s_max, atol)`` are treated as zero.
    """
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    u, s, v = svd(m)
    s_max = float(s[0]) if s.size else 0.0
    cutoff = max(rtol * s_max, atol)
    keep = s > cutoff
    if not np.any(keep):
        return np.zeros((v.shape[0], u.shape[0]))
    return (v[:, keep] / s[keep]) @ u[:, keep].T


def nnls(a, b, tol=None, max_iter=None):
    """Nonnegative least squares ``min |A w - b|`` over ``w >= 0`` (Lawson-Hanson).

    Parameters
    ----------
    a : array_like, shape (rows, cols)
    b : array_like, shape (rows,)
    tol : float, optional
        Dual-feasibility threshold on the gradient. Defaults to
        ``1e-12 * |A|_F * |b|``.
    max_iter : int, optional
        Cap on outer (column-adding) iterations, default ``3 * cols``.

    Returns
    -------
    w : ndarray
    residual : float
        ``|A w - b|_2``.
    """
    a = as_matrix(a, "A")
    b = as_vector(b, "b", a.shape[0])
    if tol is None:
        tol = max(1e-12 * frob(a) * float(np.linalg.norm(b)), 1e-300)
    if max_iter is None:
        max_iter = 3 * a.shape[1]
    w, rnorm, _, status = _kernels.nnls_active_set(np.ascontiguousarray(a), b, float(tol),
                                                   int(max_iter))
    if status != _kernels.OK:
        raise IterationCapExceeded(f"NNLS exceeded {max_iter} outer iterations")
    return w, float(rnorm)


def nnls_kkt_violation(a, b, w):
    """Largest violation of the NNLS optimality conditions at ``w``.

    With ``grad = A^T (A w - b)``: positive coordinates need ``grad == 0``,
    zero coordinates need ``grad >= 0``.
    """
    a = np.asarray(a, dtype=float)
    grad = a.T @ (a @ w - b)
    pos = w > 0
    viol = 0.0
    if np.any(pos):
        viol = max(viol, float(np.max(np.abs(grad[pos]))))
    if np.any(~pos):
        viol = max(viol, float(np.max(-grad[~pos], initial=0.0)))
    return viol
