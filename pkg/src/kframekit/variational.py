"""Variational inequalities for coercive bilinear forms on R^n.

Find ``u0`` in a closed convex set ``C`` with

    <Lam u0, v - u0> >= <K K^T f0, v - u0>   for all v in C,

by iterating the contraction ``v <- P_C(v + gamma (K K^T f0 - Lam v))`` with
``gamma = alpha / beta**2``, where ``alpha`` is the coercivity constant and
``beta`` the continuity constant of ``Lam``.  For symmetric ``Lam`` the same
point minimizes ``J(v) = 1/2 <Lam v, v> - <K K^T f0, v>`` over ``C``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (DimensionMismatch, InvalidConvexSet, MaxIterExceeded, NotCoercive,
                     NotSymmetric, SingularFrameOperator, ZeroTarget)
from .frames import _readonly, as_koperator, frame_operator, kframe_bounds, sym
from .linalg import as_matrix, as_vector, frob, operator_norm, sym_eig

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
CERT_SAMPLES = 100
CERT_SLACK = 10.0
SANDWICH_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class BilinearForm:
    """``sigma(u, v) = <Lam u, v>`` with its coercivity and continuity constants.

    ``alpha`` is the smallest eigenvalue of the symmetric part of ``Lam`` and
    ``beta`` its spectral norm, the tightest constants available.
    """

    lambda_mat: np.ndarray
    alpha: float = field(init=False)
    beta: float = field(init=False)
    symmetric: bool = field(init=False)

    def __post_init__(self):
        lam = as_matrix(self.lambda_mat, "Lambda")
        if lam.shape[0] != lam.shape[1]:
            raise DimensionMismatch(f"Lambda must be square, got {lam.shape}")
        object.__setattr__(self, "lambda_mat", _readonly(lam))
        object.__setattr__(self, "alpha", float(sym_eig(sym(lam)).eigenvalues[0]))
        object.__setattr__(self, "beta", operator_norm(lam))
        object.__setattr__(self, "symmetric",
                           frob(lam - lam.T) <= 1e-10 * (1.0 + frob(lam)))

    @property
    def dim(self):
        return self.lambda_mat.shape[0]

    @property
    def coercive(self):
        return self.alpha > 1e-12 * max(self.beta, 1e-300)

    def __call__(self, u, v):
        return float(v @ (self.lambda_mat @ u))


_KIND_CODES = {
    "whole_space": _kernels.WHOLE_SPACE,
    "box": _kernels.BOX,
    "ball": _kernels.BALL,
    "halfspace": _kernels.HALFSPACE,
    "affine": _kernels.AFFINE,
}


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """Nonempty closed convex set with a Euclidean projection.

    Build with the classmethods.  ``halfspace(normal, offset)`` is
    ``{x : <normal, x> <= offset}``; ``affine(point, directions)`` is
    ``point + span(directions)``; ``custom`` wraps a user projection.
    """

    kind: str
    dim: int
    vec_a: np.ndarray = None
    vec_b: np.ndarray = None
    basis: np.ndarray = None
    scalar: float = 0.0
    oracle: object = None

    @classmethod
    def whole_space(cls, n):
        return cls("whole_space", int(n))

    @classmethod
    def box(cls, lo, hi):
        lo = as_vector(lo, "lo")
        hi = as_vector(hi, "hi", lo.shape[0])
        if np.any(lo > hi):
            raise InvalidConvexSet("box needs lo <= hi in every coordinate")
        return cls("box", lo.shape[0], vec_a=_readonly(lo), vec_b=_readonly(hi))

    @classmethod
    def ball(cls, center, radius):
        center = as_vector(center, "center")
        radius = float(radius)
        if not radius >= 0 or not math.isfinite(radius):
            raise InvalidConvexSet("ball radius must be finite and >= 0")
        return cls("ball", center.shape[0], vec_a=_readonly(center), scalar=radius)

    @classmethod
    def halfspace(cls, normal, offset):
        normal = as_vector(normal, "normal")
        if not np.any(normal):
            raise InvalidConvexSet("halfspace normal must be nonzero")
        return cls("halfspace", normal.shape[0], vec_a=_readonly(normal), scalar=float(offset))

    @classmethod
    def affine(cls, point, directions=None):
        """``point + span(directions)``; ``directions`` has one direction per column."""
        point = as_vector(point, "point")
        n = point.shape[0]
        if directions is None or np.size(directions) == 0:
            basis = np.zeros((n, 0))
        else:
            d = np.array(directions, dtype=float).reshape(n, -1)
            q, r = np.linalg.qr(d)
            keep = np.abs(np.diag(r)) > 1e-12 * max(np.abs(r).max(), 1e-300)
            basis = np.ascontiguousarray(q[:, keep])
        return cls("affine", n, vec_a=_readonly(point), basis=_readonly(basis))

    @classmethod
    def custom(cls, projection, dim, samples=50, seed=0, tol=1e-9):
        """Wrap a user projection after checking idempotence and nonexpansiveness
        on random samples."""
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            v, w = rng.standard_normal((2, dim)) * 3.0
            pv, pw = np.asarray(projection(v), float), np.asarray(projection(w), float)
            if pv.shape != (dim,):
                raise InvalidConvexSet(f"projection returned shape {pv.shape}")
            if np.linalg.norm(np.asarray(projection(pv), float) - pv) > tol * (1 + np.linalg.norm(pv)):
                raise InvalidConvexSet("projection oracle is not idempotent")
            if np.linalg.norm(pv - pw) > np.linalg.norm(v - w) * (1 + tol) + tol:
                raise InvalidConvexSet("projection oracle is expansive")
        return cls("custom", int(dim), oracle=projection)

    def _kernel_args(self):
        n = self.dim
        a = self.vec_a if self.vec_a is not None else np.zeros(n)
        b = self.vec_b if self.vec_b is not None else np.zeros(n)
        basis = self.basis if self.basis is not None else np.zeros((n, 0))
        return _KIND_CODES[self.kind], a, b, basis, float(self.scalar)

    def project(self, v):
        v = as_vector(v, "v", self.dim)
        if self.kind == "custom":
            return np.asarray(self.oracle(v), dtype=float)
        code, a, b, basis, s = self._kernel_args()
        return _kernels.project_point(code, v, a, b, basis, s)

    def describe(self):
        out = {"kind": self.kind}
        if self.kind == "box":
            out.update(lo=self.vec_a.tolist(), hi=self.vec_b.tolist())
        elif self.kind == "ball":
            out.update(center=self.vec_a.tolist(), radius=self.scalar)
        elif self.kind == "halfspace":
            out.update(normal=self.vec_a.tolist(), offset=self.scalar)
        elif self.kind == "affine":
            out.update(point=self.vec_a.tolist(), directions=self.basis.tolist())
        elif self.kind == "whole_space":
            out.update(dimension=self.dim)
        return out


def project(convex_set, v):
    """Closest point of ``convex_set`` to ``v``."""
    return convex_set.project(v)


@dataclass(frozen=True, eq=False)
class VIProblem:
    form: BilinearForm
    set: ConvexSet
    f0: np.ndarray
    k: object

    def __post_init__(self):
        form = self.form if isinstance(self.form, BilinearForm) else BilinearForm(self.form)
        object.__setattr__(self, "form", form)
        n = form.dim
        object.__setattr__(self, "f0", _readonly(as_vector(self.f0, "f0", n)))
        kop = as_koperator(self.k)
        if kop.dim != n:
            raise DimensionMismatch(f"K acts on R^{kop.dim}, Lambda on R^{n}")
        object.__setattr__(self, "k", kop)
        if self.set.dim != n:
            raise DimensionMismatch(f"convex set lives in R^{self.set.dim}, Lambda on R^{n}")

    @property
    def dim(self):
        return self.form.dim

    @property
    def target(self):
        """``K K^T f0``, the Riesz vector of the linear term."""
        return self.k.kkstar @ self.f0


@dataclass(frozen=True)
class VISolveResult:
    """Fixed point of the projected iteration.

    ``error_bound`` is ``rho / (1 - rho) * final_step_norm``, the a-posteriori
    distance to the exact solution.  ``J_value`` is ``None`` for
    nonsymmetric forms.
    """

    u0: np.ndarray
    iterations: int
    gamma: float
    contraction_rho: float
    final_step_norm: float
    J_value: float
    error_bound: float
    step_norms: np.ndarray

    def step_ratios(self, floor=0.0):
        """Successive step-norm ratios, restricted to steps above ``floor``."""
        s = self.step_norms
        if s.size < 2:
            return np.empty(0)
        ok = (s[:-1] > floor) & (s[1:] > floor)
        return s[1:][ok] / s[:-1][ok]


def j_functional(problem, v):
    """``J(v) = 1/2 <Lam v, v> - <K K^T f0, v>``."""
    v = as_vector(v, "v", problem.dim)
    return float(0.5 * v @ (problem.form.lambda_mat @ v) - problem.target @ v)


def _rates(form):
    gamma = form.alpha / form.beta ** 2
    rho2 = 1.0 - 2.0 * gamma * form.alpha + gamma ** 2 * form.beta ** 2
    return gamma, math.sqrt(min(max(rho2, 0.0), 1.0))


def _iterate_python(problem, gamma, resid_scale, v0, tol, max_iter):
    lam, g, c = problem.form.lambda_mat, problem.target, problem.set
    steps = np.zeros(max_iter)
    v = v0
    for it in range(1, max_iter + 1):
        v_next = c.project(v + gamma * (g - lam @ v))
        step = float(np.linalg.norm(v_next - v))
        steps[it - 1] = step
        v = v_next
        bound = tol * (1.0 + np.linalg.norm(v))
        if step <= bound and resid_scale * step <= bound:
            return v, it, steps[:it], _kernels.OK
    return v, max_iter, steps, _kernels.NOT_CONVERGED


def auto_max_iter(form, tol):
    """Iteration budget that lets the a-priori rate reach ``tol * 1e-3``."""
    _, rho = _rates(form)
    if rho <= 0.0:
        return 10
    if rho >= 1.0:
        return DEFAULT_MAX_ITER
    return int(min(math.ceil(math.log(tol * 1e-3) / math.log(rho)) + 1000, 50_000_000))


def solve_vi(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Projected fixed-point solve from ``v0 = P_C(0)``.

    Stops when the step norm ``s`` satisfies ``s <= tol (1 + |v|)`` and
    ``(1/gamma + beta) s <= tol (1 + |v|)``; the second test bounds the VI
    residual, not just the step.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    form = problem.form
    if not form.coercive:
        raise NotCoercive(f"smallest eigenvalue of the symmetric part is {form.alpha:.3e}")
    gamma, rho = _rates(form)
    resid_scale = 1.0 / gamma + form.beta
    v0 = problem.set.project(np.zeros(problem.dim))
    if problem.set.kind == "custom":
        v, iters, steps, status = _iterate_python(problem, gamma, resid_scale, v0, tol, max_iter)
    else:
        code, a, b, basis, s = problem.set._kernel_args()
        v, iters, steps, status = _kernels.projected_iteration(
            np.ascontiguousarray(form.lambda_mat), problem.target, gamma, resid_scale,
            code, a, b, basis, s, v0, float(tol), int(max_iter))
    last = float(steps[iters - 1])
    if status != _kernels.OK:
        bound = rho ** iters * float(steps[0]) / (1.0 - rho) if rho < 1 else float("inf")
        raise MaxIterExceeded(
            f"no convergence after {iters} iterations: last step {last:.3e}, "
            f"distance to solution <= {bound:.3e}",
            iterate=v, iterations=iters, last_step=last, error_bound=bound)
    j_val = j_functional(problem, v) if form.symmetric else None
    err = rho / (1.0 - rho) * last if rho < 1 else float("inf")
    return VISolveResult(u0=v, iterations=int(iters), gamma=gamma, contraction_rho=rho,
                         final_step_norm=last, J_value=j_val, error_bound=err,
                         step_norms=np.asarray(steps))


def _sample_set(convex_set, center, rng, count):
    scale = 1.0 + float(np.linalg.norm(center))
    pts = center + scale * rng.standard_normal((count, convex_set.dim))
    return np.array([convex_set.project(p) for p in pts])


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    worst_slack: float
    samples: int


def vi_certificate(problem, u0, tol=DEFAULT_TOL, samples=CERT_SAMPLES, seed=42):
    """Check ``<Lam u0 - KK^T f0, v - u0> >= -10 tol (1 + |v - u0|)`` on sampled ``v`` in C."""
    rng = np.random.default_rng(seed)
    r = problem.form.lambda_mat @ u0 - problem.target
    worst = float("inf")
    for v in _sample_set(problem.set, u0, rng, samples):
        d = v - u0
        worst = min(worst, float(r @ d) + CERT_SLACK * tol * (1.0 + np.linalg.norm(d)))
    return CertificateReport(worst >= 0.0, worst, samples)


def minimality_certificate(problem, u0, tol=DEFAULT_TOL, samples=CERT_SAMPLES, seed=42):
    """Check ``J(u0) <= J(u0 + t d) + 10 tol`` for random feasible ``u0 + t d``."""
    rng = np.random.default_rng(seed)
    j0 = j_functional(problem, u0)
    worst = float("inf")
    ts = rng.uniform(0.0, 1.0, samples)
    for t, w in zip(ts, _sample_set(problem.set, u0, rng, samples)):
        worst = min(worst, j_functional(problem, u0 + t * (w - u0)) - j0 + CERT_SLACK * tol)
    return CertificateReport(worst >= 0.0, worst, samples)


def minimize_symmetric(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Minimize ``J`` over the convex set for a symmetric coercive form."""
    if not problem.form.symmetric:
        raise NotSymmetric("minimize_symmetric needs a symmetric bilinear form")
    return solve_vi(problem, tol, max_iter)


@dataclass(frozen=True)
class BoundsReport:
    """Two-sided bounds on ``min_v J(v)`` for ``sigma(u, v) = <S u, v>``.

    ``upper`` carries ``|K^T f0|**4``; ``upper_as_printed`` is the same
    expression with ``|K^T f0|**2`` (kept for comparison only).
    """

    lower: float
    upper: float
    j_min: float
    holds: bool
    lower_A: float
    upper_B: float
    j_closed_form: float
    upper_as_printed: float
    printed_upper_holds: bool
    iterations: int


def bounds_report(frame, k, f0, tol=DEFAULT_TOL, max_iter=None):
    """Minimize ``J`` for ``Lam = S`` over R^n and compare with the K-frame bounds
    ``-|K^T f0|^2 / (2A) <= min J <= -(7/32) |K^T f0|^4 / (B |f0|^2)``."""
    kop = as_koperator(k)
    s = frame_operator(frame)
    f0 = as_vector(f0, "f0", frame.dim)
    if kop.dim != frame.dim:
        raise DimensionMismatch(f"K acts on R^{kop.dim}, frame lives in R^{frame.dim}")
    s_eig = sym_eig(s)
    if s_eig.eigenvalues[0] <= tol:
        raise SingularFrameOperator(
            f"frame operator is not positive definite (lambda_min = {s_eig.eigenvalues[0]:.3e})")
    f0_norm = float(np.linalg.norm(f0))
    if f0_norm == 0.0:
        raise ZeroTarget("f0 is zero")
    kt_f0 = float(np.linalg.norm(kop.k.T @ f0))
    if kt_f0 <= tol:
        raise ZeroTarget(f"|K^T f0| = {kt_f0:.3e} is below tol")

    fb = kframe_bounds(frame, kop)
    a_low, b_up = fb.lower_A, fb.upper_B
    problem = VIProblem(BilinearForm(s), ConvexSet.whole_space(frame.dim), f0, kop)
    if max_iter is None:
        max_iter = auto_max_iter(problem.form, tol)
    res = minimize_symmetric(problem, tol, max_iter)
    g = problem.target
    q = s_eig.eigenvectors
    j_closed = -0.5 * float(g @ (q @ ((q.T @ g) / s_eig.eigenvalues)))

    lower = -kt_f0 ** 2 / (2.0 * a_low)
    upper = -(7.0 / 32.0) * kt_f0 ** 4 / (b_up * f0_norm ** 2)
    printed = -(7.0 / 32.0) * kt_f0 ** 2 / (b_up * f0_norm ** 2)
    j_min = res.J_value
    return BoundsReport(
        lower=lower, upper=upper, j_min=j_min,
        holds=lower - SANDWICH_SLACK <= j_min <= upper + SANDWICH_SLACK,
        lower_A=a_low, upper_B=b_up, j_closed_form=j_closed,
        upper_as_printed=printed,
        printed_upper_holds=j_min <= printed + SANDWICH_SLACK,
        iterations=res.iterations,
    )
