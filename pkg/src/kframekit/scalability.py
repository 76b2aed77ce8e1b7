"""Scalable K-frames: weights ``c_j`` that turn ``{c_j f_j}`` into a Parseval
K-frame, and operator transforms that carry such scalings along.

Weights are kept nonnegative; the defining identity only sees ``c_j**2``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, LengthMismatch, NotCoisometry, NotCommuting,
                     NotKsFrame, SingularT)
from .frames import (PARSEVAL_TOL, Frame, KOperator, ParsevalReport, _check_dims,
                     _readonly, as_koperator, frame_operator, parseval_k_check, sym)
from .linalg import as_matrix, frob, nnls, numerical_rank, singular_values

__all__ = [
    "Scaling", "ScalingSolveResult", "FrameOperatorIdentity", "SwapCheck", "vech",
    "vech_columns", "solve_scaling", "verify_scaling", "transform_frame",
    "power_transform", "commuting_isometry_transform", "check_frame_operator_identity",
    "check_shared_scaling_swap",
]

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Scaling:
    weights: np.ndarray

    def __post_init__(self):
        c = np.array(self.weights, dtype=np.float64)
        if c.ndim != 1:
            raise DimensionMismatch(f"weights must be 1-D, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("weights must be finite")
        if np.any(c < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", _readonly(c))

    def __len__(self):
        return self.weights.shape[0]

    @property
    def squared(self):
        return self.weights ** 2


def as_scaling(c):
    return c if isinstance(c, Scaling) else Scaling(c)


@dataclass(frozen=True)
class ScalingSolveResult:
    """Outcome of :func:`solve_scaling`.

    ``residual`` is the Frobenius norm of ``sum c_j^2 f_j f_j^T - KK^T``.
    ``nonunique`` flags a rank-deficient system on the support (plus zero
    weights whose gradient vanishes), where other optimal weights may exist.
    """

    scaling: Scaling
    residual: float
    feasible: bool
    threshold: float
    nonunique: bool


def vech(m):
    """Upper triangle of a symmetric matrix, off-diagonals scaled by sqrt(2),
    so that ``|vech(M)|_2 == |M|_F``."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    rows, cols = np.triu_indices(n)
    out = m[rows, cols].copy()
    out[rows != cols] *= SQRT2
    return out


def vech_columns(frame):
    """Matrix whose column j is ``vech(f_j f_j^T)``."""
    f = frame.synthesis
    n = frame.dim
    rows, cols = np.triu_indices(n)
    out = f[rows, :] * f[cols, :]
    out[rows != cols, :] *= SQRT2
    return out


def _flag_nonunique(a, b, w):
    grad = a.T @ (a @ w - b)
    kkt_tol = 1e-10 * frob(a) * max(float(np.linalg.norm(b)), 1.0)
    cols = (w > 0) | (np.abs(grad) <= kkt_tol)
    if not np.any(cols):
        return False
    return numerical_rank(a[:, cols], 1e-10) < int(np.count_nonzero(cols))


def solve_scaling(frame, k, tol=PARSEVAL_TOL):
    """Find ``c >= 0`` with ``sum_j c_j^2 f_j f_j^T = K K^T`` as closely as possible.

    The matrix identity is linear in ``w = c**2``; it is vectorized with
    :func:`vech` and solved by NNLS.  The returned scaling is the
    deterministic active-set solution, feasible when the residual is at most
    ``tol * (1 + |KK^T|_F)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    kop = as_koperator(k)
    _check_dims(frame, kop)
    a = vech_columns(frame)
    b = vech(kop.kkstar)
    w, residual = nnls(a, b)
    threshold = tol * (1.0 + frob(kop.kkstar))
    return ScalingSolveResult(
        scaling=Scaling(np.sqrt(w)),
        residual=residual,
        feasible=residual <= threshold,
        threshold=threshold,
        nonunique=_flag_nonunique(a, b, w),
    )


def verify_scaling(frame, k, scaling, tol=PARSEVAL_TOL):
    """Parseval K-frame check on ``{c_j f_j}``."""
    c = as_scaling(scaling)
    if len(c) != frame.count:
        raise LengthMismatch(f"scaling has {len(c)} weights for {frame.count} frame vectors")
    return parseval_k_check(frame.scaled(c.weights), k, tol)


def _square(u, n, name):
    u = as_matrix(u, name)
    if u.shape != (n, n):
        raise DimensionMismatch(f"{name} must be {n}x{n}, got {u.shape}")
    return u


def transform_frame(frame, scaling, u):
    """Map ``{f_j} -> {U f_j}`` and keep the scaling.

    If ``(f_j, c_j)`` makes a Parseval frame then ``(U f_j, c_j)`` is a
    ``U``-scaling; if it is a ``U0``-scaling then the image is a
    ``U U0``-scaling.  Pair the result with the operator accordingly.
    """
    c = as_scaling(scaling)
    if len(c) != frame.count:
        raise LengthMismatch(f"scaling has {len(c)} weights for {frame.count} frame vectors")
    u = _square(u, frame.dim, "U")
    return frame.mapped(u), c


def _require_ks(frame, kop, c, tol):
    report = verify_scaling(frame, kop, c, tol)
    if not report:
        raise NotKsFrame(f"(frame, scaling) is not a K_s-frame: defect {report.defect:.3e} "
                         f"> {report.threshold:.3e}")
    return report


def power_transform(frame, scaling, k, exponent, tol=PARSEVAL_TOL):
    """``{K^N f_j}`` with the same scaling, paired with ``K^(N+1)``."""
    if int(exponent) != exponent or exponent < 1:
        raise ValueError("exponent must be a positive integer")
    kop = as_koperator(k)
    c = as_scaling(scaling)
    _check_dims(frame, kop)
    _require_ks(frame, kop, c, tol)
    k_n = np.linalg.matrix_power(kop.k, int(exponent))
    return frame.mapped(k_n), KOperator(k_n @ kop.k)


def commuting_isometry_transform(frame, scaling, k, t, tol=PARSEVAL_TOL):
    """``{T f_j}`` for ``T`` commuting with ``K`` and ``T T^T = I``; the scaling
    still works against ``K``."""
    kop = as_koperator(k)
    c = as_scaling(scaling)
    _check_dims(frame, kop)
    t = _square(t, frame.dim, "T")
    comm = frob(t @ kop.k - kop.k @ t)
    if comm > tol * (1.0 + frob(t) * frob(kop.k)):
        raise NotCommuting(f"|TK - KT|_F = {comm:.3e}")
    iso = frob(t @ t.T - np.eye(frame.dim))
    if iso > tol * (1.0 + frame.dim):
        raise NotCoisometry(f"|T T^T - I|_F = {iso:.3e}")
    _require_ks(frame, kop, c, tol)
    return frame.mapped(t)


@dataclass(frozen=True)
class FrameOperatorIdentity:
    """Both sides of: ``(T f_j, c_j)`` is K_s  <=>  ``S_c = (T^-1 K)(T^-1 K)^T``."""

    transformed_is_ks: bool
    transformed_defect: float
    operator_matches: bool
    operator_defect: float

    @property
    def agree(self):
        return self.transformed_is_ks == self.operator_matches


def check_frame_operator_identity(frame, scaling, k, t, tol=PARSEVAL_TOL):
    """Evaluate both sides of the frame-operator criterion for ``{c_j T f_j}``.

    ``S_c`` is the frame operator of ``{c_j f_j}``.
    """
    kop = as_koperator(k)
    c = as_scaling(scaling)
    _check_dims(frame, kop)
    t = _square(t, frame.dim, "T")
    sv = singular_values(t)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > 1e12:
        raise SingularT("T is singular or has condition number above 1e12")
    lhs = verify_scaling(frame.mapped(t), kop, c, tol)
    s_c = frame_operator(frame.scaled(c.weights))
    tk = np.linalg.solve(t, kop.k)
    target = sym(tk @ tk.T)
    defect = frob(s_c - target)
    return FrameOperatorIdentity(
        transformed_is_ks=lhs.is_parseval,
        transformed_defect=lhs.defect,
        operator_matches=defect <= tol * (1.0 + frob(target)),
        operator_defect=defect,
    )


@dataclass(frozen=True)
class SwapCheck:
    """If ``(f_j, c_j)`` and ``(U f_j, c_j)`` are both K_s then ``(f_j, c_j)`` is UK_s."""

    hypothesis: bool
    conclusion: ParsevalReport

    @property
    def consistent(self):
        return (not self.hypothesis) or self.conclusion.is_parseval


def check_shared_scaling_swap(frame, scaling, k, u, tol=PARSEVAL_TOL):
    kop = as_koperator(k)
    c = as_scaling(scaling)
    u = _square(u, frame.dim, "U")
    hyp = bool(verify_scaling(frame, kop, c, tol)) and bool(
        verify_scaling(frame.mapped(u), kop, c, tol))
    return SwapCheck(hyp, verify_scaling(frame, KOperator(u @ kop.k), c, tol))
