"""Piecewise scalable K-frames.

A frame is piecewise scalable for ``K`` when, for an orthogonal projection
``P`` and nonnegative pairs ``(a_j, b_j)``, the vectors
``a_j P f_j + b_j (I - P) f_j`` form a Parseval K-frame.

Subspace statements ("a K_s-frame for X = ran P") are realized by
compression: ``P S_P P == P KK^T P`` instead of working in a basis of X.
Index sets are 0-based.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (BadIndexSet, DimensionMismatch, InfeasiblePiece, IntertwiningFailed,
                     LengthMismatch, NotCommuting, NotKps, NotUnitary, PreconditionFailed)
from .frames import (PARSEVAL_TOL, Frame, _check_dims, _readonly, as_koperator,
                     frame_operator, parseval_k_check, sym)
from .linalg import as_matrix, frob, svd
from .scalability import solve_scaling

PROJECTION_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Projection:
    """Orthogonal projection (symmetric and idempotent to ``1e-10 * (1 + |P|_F)``)."""

    p: np.ndarray

    def __post_init__(self):
        p = as_matrix(self.p, "P")
        if p.shape[0] != p.shape[1]:
            raise DimensionMismatch(f"P must be square, got {p.shape}")
        scale = PROJECTION_RTOL * (1.0 + frob(p))
        if frob(p - p.T) > scale:
            raise ValueError("P is not symmetric")
        if frob(p @ p - p) > scale:
            raise ValueError("P is not idempotent")
        object.__setattr__(self, "p", _readonly(sym(p)))

    @classmethod
    def onto(cls, basis):
        """Projection onto the column span of ``basis`` (orthonormalized first)."""
        basis = as_matrix(basis, "basis")
        u, s, _ = svd(basis)
        u = u[:, s > 1e-12 * (s[0] if s.size else 0.0)]
        return cls(u @ u.T)

    @property
    def dim(self):
        return self.p.shape[0]

    @property
    def complement(self):
        return np.eye(self.dim) - self.p


def as_projection(p):
    return p if isinstance(p, Projection) else Projection(p)


@dataclass(frozen=True, eq=False)
class PiecewiseScaling:
    a: np.ndarray
    b: np.ndarray
    projection: Projection

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise LengthMismatch(f"a and b must be 1-D of equal length, got {a.shape}, {b.shape}")
        if np.any(a < 0) or np.any(b < 0) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("a and b must be finite and nonnegative")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "projection", as_projection(self.projection))


def _check_pw(frame, pw):
    if pw.projection.dim != frame.dim:
        raise DimensionMismatch(f"P acts on R^{pw.projection.dim}, frame lives in R^{frame.dim}")
    if pw.a.shape[0] != frame.count:
        raise DimensionMismatch(f"{pw.a.shape[0]} weight pairs for {frame.count} frame vectors")


def apply_piecewise(frame, pw):
    """Frame with columns ``a_j P f_j + b_j (I - P) f_j``."""
    _check_pw(frame, pw)
    f = frame.synthesis
    pf = pw.projection.p @ f
    return Frame(pf * pw.a + (f - pf) * pw.b)


@dataclass(frozen=True)
class PiecewiseCheckReport:
    """Defects behind the piecewise-scalability test.

    ``piece_x_defect``/``piece_y_defect`` compare the scaled pieces with
    the compressed ``KK^T``; the cross defects are the Frobenius norms of the
    symmetric part and of the whole of ``T1^T D1 D2 T2``.
    """

    is_kps: bool
    total_defect: float
    piece_x_defect: float
    piece_y_defect: float
    cross_sym_defect: float
    cross_full_defect: float
    threshold: float
    commutator_defect: float
    commutes: bool
    pieces_ok: bool
    cross_ok: bool

    @property
    def equivalence_holds(self):
        """``is_kps <=> (pieces_ok and cross_ok)``; only meaningful when ``PK = KP``."""
        return self.is_kps == (self.pieces_ok and self.cross_ok)


def check_piecewise(frame, k, pw, tol=PARSEVAL_TOL):
    if tol <= 0:
        raise ValueError("tol must be positive")
    kop = as_koperator(k)
    _check_dims(frame, kop)
    _check_pw(frame, pw)
    p = pw.projection.p
    q = pw.projection.complement
    f = frame.synthesis
    pf = p @ f
    qf = f - pf
    kk = kop.kkstar

    combined = parseval_k_check(apply_piecewise(frame, pw), kop, tol)
    px = pf * pw.a
    qy = qf * pw.b
    dx = frob(sym(px @ px.T) - p @ kk @ p)
    dy = frob(sym(qy @ qy.T) - q @ kk @ q)
    # T1^T D1 D2 T2 = sum_j a_j b_j (P f_j)((I-P) f_j)^T
    cross = (pf * (pw.a * pw.b)) @ qf.T
    cs = frob(sym(cross))
    cf = frob(cross)
    comm = frob(p @ kop.k - kop.k @ p)
    thr = combined.threshold
    return PiecewiseCheckReport(
        is_kps=combined.is_parseval,
        total_defect=combined.defect,
        piece_x_defect=dx,
        piece_y_defect=dy,
        cross_sym_defect=cs,
        cross_full_defect=cf,
        threshold=thr,
        commutator_defect=comm,
        commutes=comm <= tol * (1.0 + frob(kop.k)),
        pieces_ok=dx <= thr and dy <= thr,
        cross_ok=cs <= thr,
    )


def _index_mask(index_set, m):
    try:
        idx = np.array(sorted(set(int(i) for i in index_set)), dtype=int)
    except (TypeError, ValueError):
        raise BadIndexSet("index set must contain integers") from None
    if idx.size and (idx[0] < 0 or idx[-1] >= m):
        raise BadIndexSet(f"indices must lie in 0..{m - 1}")
    if idx.size == 0 or idx.size == m:
        raise BadIndexSet("index set must be a proper nonempty subset")
    mask = np.zeros(m, dtype=bool)
    mask[idx] = True
    return mask


def build_disjoint_piecewise(frame, k, p, index_set, tol=PARSEVAL_TOL):
    """Piecewise scaling with ``a_j b_j = 0``: scale ``{P f_j}`` on ``index_set``
    against ``PK`` and ``{(I-P) f_j}`` off it against ``(I-P)K``.

    Raises ``InfeasiblePiece`` when either restricted scaling problem has no
    exact solution.
    """
    kop = as_koperator(k)
    _check_dims(frame, kop)
    proj = as_projection(p)
    if proj.dim != frame.dim:
        raise DimensionMismatch(f"P acts on R^{proj.dim}, frame lives in R^{frame.dim}")
    mask = _index_mask(index_set, frame.count)
    f = frame.synthesis
    pf = proj.p @ f
    qf = f - pf

    x_res = solve_scaling(Frame(pf[:, mask]), proj.p @ kop.k, tol)
    if not x_res.feasible:
        raise InfeasiblePiece("no scaling of {P f_j : j in I} matches P KK^T P",
                              piece="X", residual=x_res.residual)
    y_res = solve_scaling(Frame(qf[:, ~mask]), proj.complement @ kop.k, tol)
    if not y_res.feasible:
        raise InfeasiblePiece("no scaling of {(I-P) f_j : j not in I} matches (I-P) KK^T (I-P)",
                              piece="Y", residual=y_res.residual)
    a = np.zeros(frame.count)
    b = np.zeros(frame.count)
    a[mask] = x_res.scaling.weights
    b[~mask] = y_res.scaling.weights
    return PiecewiseScaling(a, b, proj)


@dataclass(frozen=True)
class RestrictionReport:
    holds: bool
    defect: float
    threshold: float
    range_inclusion: bool
    max_angle: float


def restrict_check_lemma(frame, k, p, tol=PARSEVAL_TOL):
    """For a Parseval K-frame and ``PK = KP``, check that ``{P f_j}`` is Parseval
    for K on ``X = ran P`` (``|P (S_P - KK^T) P|_F`` small).

    Also reports whether ``ran K^T`` sits inside ``ran P``, measured by the
    largest principal angle between ``ran K^T`` and ``ran P``.
    """
    kop = as_koperator(k)
    _check_dims(frame, kop)
    proj = as_projection(p)
    if proj.dim != frame.dim:
        raise DimensionMismatch(f"P acts on R^{proj.dim}, frame lives in R^{frame.dim}")
    if not parseval_k_check(frame, kop, tol):
        raise PreconditionFailed("frame is not a Parseval K-frame")
    comm = frob(proj.p @ kop.k - kop.k @ proj.p)
    if comm > tol * (1.0 + frob(kop.k)):
        raise PreconditionFailed(f"P and K do not commute: |PK - KP|_F = {comm:.3e}")
    pframe = frame.mapped(proj.p)
    s_p = frame_operator(pframe)
    defect = frob(proj.p @ (s_p - kop.kkstar) @ proj.p)
    threshold = tol * (1.0 + frob(kop.kkstar))

    if kop.rank == 0:
        angle = 0.0
    else:
        u, s, _ = svd(kop.k.T)
        basis = u[:, :kop.rank]
        leak = proj.complement @ basis
        sin_max = min(float(svd(leak)[1][0]), 1.0)
        angle = float(np.arcsin(sin_max))
    return RestrictionReport(
        holds=defect <= threshold,
        defect=defect,
        threshold=threshold,
        range_inclusion=angle <= 1e-8,
        max_angle=angle,
    )


def transport_piecewise(frame, k, pw, u, q, tol=PARSEVAL_TOL):
    """Carry a piecewise scaling along a unitary ``U`` with ``UP = QU`` and ``UK = KU``.

    The returned scaling (same ``a``, ``b``, projection ``Q``) works for the
    frame ``{U f_j}``.
    """
    kop = as_koperator(k)
    _check_dims(frame, kop)
    _check_pw(frame, pw)
    n = frame.dim
    u = as_matrix(u, "U")
    if u.shape != (n, n):
        raise DimensionMismatch(f"U must be {n}x{n}, got {u.shape}")
    qp = as_projection(q)
    if qp.dim != n:
        raise DimensionMismatch(f"Q must be {n}x{n}")
    if frob(u.T @ u - np.eye(n)) > tol * (1.0 + n):
        raise NotUnitary(f"|U^T U - I|_F = {frob(u.T @ u - np.eye(n)):.3e}")
    inter = frob(u @ pw.projection.p - qp.p @ u)
    if inter > tol * (1.0 + n):
        raise IntertwiningFailed(f"|UP - QU|_F = {inter:.3e}")
    comm = frob(u @ kop.k - kop.k @ u)
    if comm > tol * (1.0 + frob(kop.k)):
        raise NotCommuting(f"|UK - KU|_F = {comm:.3e}")
    report = check_piecewise(frame, kop, pw, tol)
    if not report.is_kps:
        raise NotKps(f"input is not piecewise scalable: defect {report.total_defect:.3e}")
    return PiecewiseScaling(pw.a, pw.b, qp)
