"""Frames, K-operators, frame operators and optimal K-frame bounds."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .linalg import as_matrix, frob, numerical_rank, pinv, sqrt_psd, sym_eig

RANK_RTOL = 1e-10
PARSEVAL_TOL = 1e-9


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def sym(m):
    return 0.5 * (m + m.T)


@dataclass(frozen=True, eq=False)
class Frame:
    """An ordered family of ``m`` vectors in R^n, stored as the columns of an
    ``n x m`` synthesis matrix.  Zero vectors are allowed."""

    synthesis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "synthesis", _readonly(as_matrix(self.synthesis, "synthesis")))

    @classmethod
    def from_vectors(cls, vectors):
        """Build from a sequence of ``m`` vectors of length ``n`` (one per row)."""
        return cls(as_matrix(vectors, "frame vectors").T)

    @property
    def dim(self):
        return self.synthesis.shape[0]

    @property
    def count(self):
        return self.synthesis.shape[1]

    @property
    def vectors(self):
        """The frame vectors as rows (``m x n``)."""
        return self.synthesis.T.copy()

    def scaled(self, weights):
        c = np.asarray(weights, dtype=float)
        if c.shape != (self.count,):
            raise DimensionMismatch(f"need {self.count} weights, got shape {c.shape}")
        return Frame(self.synthesis * c)

    def mapped(self, op):
        """The frame ``{op f_j}``."""
        op = as_matrix(op, "operator")
        if op.shape[1] != self.dim:
            raise DimensionMismatch(f"operator of shape {op.shape} cannot act on R^{self.dim}")
        return Frame(op @ self.synthesis)


@dataclass(frozen=True, eq=False)
class KOperator:
    """A square operator ``K`` together with ``K K^T`` and its numerical rank."""

    k: np.ndarray
    kkstar: np.ndarray = field(init=False)
    rank: int = field(init=False)

    def __post_init__(self):
        k = as_matrix(self.k, "K")
        if k.shape[0] != k.shape[1]:
            raise DimensionMismatch(f"K must be square, got shape {k.shape}")
        object.__setattr__(self, "k", _readonly(k))
        object.__setattr__(self, "kkstar", _readonly(sym(k @ k.T)))
        rank = numerical_rank(k, RANK_RTOL) if frob(k) > 0 else 0
        object.__setattr__(self, "rank", rank)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def dim(self):
        return self.k.shape[0]

    @property
    def adjoint(self):
        return self.k.T

    def power(self, exponent):
        return KOperator(np.linalg.matrix_power(self.k, exponent))

    def compose(self, other):
        """``self @ other`` as a new operator (``other`` may be a matrix)."""
        m = other.k if isinstance(other, KOperator) else as_matrix(other, "operator")
        return KOperator(self.k @ m)


def as_koperator(k):
    return k if isinstance(k, KOperator) else KOperator(k)


def _check_dims(frame, kop):
    if kop.dim != frame.dim:
        raise DimensionMismatch(f"K acts on R^{kop.dim} but the frame lives in R^{frame.dim}")


@dataclass(frozen=True)
class FrameOps:
    analysis: np.ndarray
    frame_op: np.ndarray
    gram: np.ndarray


def frame_operator(frame):
    """``S = F F^T = sum_j f_j f_j^T``."""
    f = frame.synthesis
    return sym(f @ f.T)


def build_ops(frame):
    """Analysis matrix (rows ``f_j^T``), frame operator and Gram matrix."""
    f = frame.synthesis
    return FrameOps(analysis=f.T.copy(), frame_op=frame_operator(frame), gram=sym(f.T @ f))


@dataclass(frozen=True)
class FrameBounds:
    """Optimal constants in ``A |K^T f|^2 <= sum <f, f_j>^2 <= B |f|^2``.

    ``witness`` is a vector attaining the lower bound (``None`` when the
    infimum is vacuous because ``K = 0``).
    """

    lower_A: float
    upper_B: float
    is_k_frame: bool
    degenerate_k: bool = False
    witness: np.ndarray = None
    witness_ratio: float = float("nan")


def kframe_bounds(frame, k, rtol=RANK_RTOL):
    """Optimal lower and upper K-frame bounds.

    The lower bound ``inf {<Sf, f> : |K^T f| = 1}`` is obtained by splitting
    R^n into ``ran(KK^T)`` (basis V) and its orthogonal complement (basis W):
    minimizing over the W component leaves the generalized Schur complement
    ``S11 - S12 S22^+ S21`` on V, and the infimum is the smallest eigenvalue
    of that complement whitened by ``(V^T KK^T V)^(-1/2)``.
    """
    kop = as_koperator(k)
    _check_dims(frame, kop)
    s = frame_operator(frame)
    s_eig = sym_eig(s).eigenvalues
    upper = max(float(s_eig[-1]), 0.0)

    m_eig = sym_eig(kop.kkstar)
    mu = m_eig.eigenvalues
    mu_max = float(mu[-1])
    if mu_max <= 0.0:
        return FrameBounds(lower_A=float("inf"), upper_B=upper, is_k_frame=True,
                           degenerate_k=True)

    in_range = mu > rtol * mu_max
    v = m_eig.eigenvectors[:, in_range]
    w = m_eig.eigenvectors[:, ~in_range]
    mu_v = mu[in_range]

    s11 = v.T @ s @ v
    if w.shape[1]:
        s12 = v.T @ s @ w
        s22 = sym(w.T @ s @ w)
        s22_pinv = pinv(s22, rtol=rtol, atol=rtol * upper)
        schur = s11 - s12 @ s22_pinv @ s12.T
    else:
        s22_pinv = None
        schur = s11
    whiten = 1.0 / np.sqrt(mu_v)
    g = sym(schur * np.outer(whiten, whiten))
    g_eig = sym_eig(g)
    lower = float(g_eig.eigenvalues[0])

    x = whiten * g_eig.eigenvectors[:, 0]
    witness = v @ x
    if s22_pinv is not None:
        witness = witness - w @ (s22_pinv @ (s12.T @ x))
    num = float(witness @ s @ witness)
    den = float(witness @ kop.kkstar @ witness)
    ratio = num / den if den > 0 else float("nan")

    # roundoff in <Sf, f> on the unit K^T-sphere scales like |S| / min(mu_v)
    zero_tol = 1e-12 * max(upper, 1e-300) / float(mu_v.min())
    if lower <= zero_tol:
        lower = 0.0
    return FrameBounds(lower_A=lower, upper_B=upper, is_k_frame=lower > 0.0,
                       witness=witness, witness_ratio=ratio)


@dataclass(frozen=True)
class ParsevalReport:
    is_parseval: bool
    defect: float
    threshold: float

    def __bool__(self):
        return self.is_parseval


def parseval_k_check(frame, k, tol=PARSEVAL_TOL):
    """Is ``{f_j}`` a Parseval K-frame, i.e. ``S == K K^T``?

    Passes when ``|S - KK^T|_F <= tol * (1 + |KK^T|_F)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    kop = as_koperator(k)
    _check_dims(frame, kop)
    defect = frob(frame_operator(frame) - kop.kkstar)
    threshold = tol * (1.0 + frob(kop.kkstar))
    return ParsevalReport(defect <= threshold, defect, threshold)


def canonical_k(frame):
    """``K = S^(1/2)``, the operator for which the frame is a Parseval K-frame."""
    return KOperator(sqrt_psd(frame_operator(frame)))
