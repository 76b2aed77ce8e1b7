"""Numerical toolkit for K-frames: frame operators, optimal K-frame bounds,
scalings, piecewise scalings and a projected-contraction VI solver."""
from ._accel import USING_NUMBA, backend_name
from .errors import *  # noqa: F401,F403
from .frames import (Frame, FrameBounds, FrameOps, KOperator, ParsevalReport, build_ops,
                     canonical_k, frame_operator, kframe_bounds, parseval_k_check)
from .linalg import SymEig, nnls, operator_norm, pinv, sqrt_psd, sym_eig
from .piecewise import (PiecewiseCheckReport, PiecewiseScaling, Projection, apply_piecewise,
                        build_disjoint_piecewise, check_piecewise, restrict_check_lemma,
                        transport_piecewise)
from .scalability import (Scaling, ScalingSolveResult, check_frame_operator_identity,
                          check_shared_scaling_swap, commuting_isometry_transform,
                          power_transform, solve_scaling, transform_frame, verify_scaling)
from .variational import (BilinearForm, ConvexSet, VIProblem, VISolveResult, bounds_report,
                          j_functional, minimize_symmetric, project, solve_vi, vi_certificate)

__version__ = "0.1.0"
