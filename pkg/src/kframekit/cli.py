"""``kframekit`` command line.

Exit codes: 0 checked and true, 1 checked and false (or infeasible),
2 bad input, 3 numerical failure.
"""
import argparse
import hashlib
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import InfeasiblePiece, InputError, KFrameError, NumericalFailure, SchemaError
from .frames import Frame, KOperator, build_ops, kframe_bounds, parseval_k_check
from .piecewise import PiecewiseScaling, Projection, build_disjoint_piecewise, check_piecewise
from .problem import dumps, parse_problem
from .scalability import solve_scaling, verify_scaling
from .variational import (DEFAULT_MAX_ITER, DEFAULT_TOL, BilinearForm, ConvexSet, VIProblem,
                          bounds_report, minimality_certificate, solve_vi, vi_certificate)

EXIT_TRUE, EXIT_FALSE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("analyze", "parseval", "scale", "piecewise-check", "piecewise-build",
            "vi-solve", "bounds")


def _require(pf, name):
    value = pf.lambda_ if name == "lambda" else getattr(pf, name)
    if value is None:
        raise SchemaError(name, "missing field (required by this command)")
    return value


def _frame(pf):
    return Frame.from_vectors(pf.frame)


def _k(pf):
    return KOperator(np.array(pf.k_or_identity()))


def _projection(pf):
    try:
        return Projection(np.array(_require(pf, "P")))
    except ValueError as exc:
        if isinstance(exc, KFrameError):
            raise
        raise SchemaError("P", str(exc)) from None


def _convex_set(pf):
    desc = pf.convex_set or {"kind": "whole_space"}
    kind = desc["kind"]
    if kind == "whole_space":
        return ConvexSet.whole_space(pf.dimension)
    if kind == "box":
        return ConvexSet.box(desc["lo"], desc["hi"])
    if kind == "ball":
        return ConvexSet.ball(desc["center"], desc["radius"])
    if kind == "halfspace":
        return ConvexSet.halfspace(desc["normal"], desc["offset"])
    dirs = np.array(desc["directions"], dtype=float).reshape(-1, pf.dimension).T
    return ConvexSet.affine(desc["point"], dirs)


def cmd_analyze(pf, opts):
    frame, kop = _frame(pf), _k(pf)
    ops = build_ops(frame)
    fb = kframe_bounds(frame, kop)
    result = {
        "dimension": frame.dim,
        "count": frame.count,
        "frame_operator": ops.frame_op,
        "trace": float(np.trace(ops.frame_op)),
        "gram": ops.gram,
        "k_rank": kop.rank,
        "lower_A": fb.lower_A,
        "upper_B": fb.upper_B,
        "is_k_frame": fb.is_k_frame,
        "degenerate_k": fb.degenerate_k,
        "witness": fb.witness,
        "witness_ratio": fb.witness_ratio,
    }
    return result, EXIT_TRUE if fb.is_k_frame else EXIT_FALSE


def cmd_parseval(pf, opts):
    rep = parseval_k_check(_frame(pf), _k(pf), opts.tol)
    result = {"is_parseval": rep.is_parseval, "defect": rep.defect, "threshold": rep.threshold}
    return result, EXIT_TRUE if rep.is_parseval else EXIT_FALSE


def cmd_scale(pf, opts):
    frame, kop = _frame(pf), _k(pf)
    res = solve_scaling(frame, kop, opts.tol)
    check = verify_scaling(frame, kop, res.scaling, 10 * opts.tol)
    result = {
        "feasible": res.feasible,
        "residual": res.residual,
        "threshold": res.threshold,
        "weights": res.scaling.weights,
        "nonunique": res.nonunique,
        "verify": {"passed": check.is_parseval, "defect": check.defect,
                   "threshold": check.threshold},
    }
    ok = res.feasible and check.is_parseval
    if pf.c is not None:
        given = verify_scaling(frame, kop, pf.c, opts.tol)
        result["given_scaling"] = {"passed": given.is_parseval, "defect": given.defect,
                                   "threshold": given.threshold}
    return result, EXIT_TRUE if ok else EXIT_FALSE


def _pw_report(rep):
    return {
        "is_kps": rep.is_kps,
        "total_defect": rep.total_defect,
        "piece_x_defect": rep.piece_x_defect,
        "piece_y_defect": rep.piece_y_defect,
        "cross_sym_defect": rep.cross_sym_defect,
        "cross_full_defect": rep.cross_full_defect,
        "threshold": rep.threshold,
        "commutes": rep.commutes,
        "commutator_defect": rep.commutator_defect,
        "pieces_ok": rep.pieces_ok,
        "cross_ok": rep.cross_ok,
        "equivalence_holds": rep.equivalence_holds,
    }


def cmd_piecewise_check(pf, opts):
    pw = PiecewiseScaling(np.array(_require(pf, "a")), np.array(_require(pf, "b")),
                          _projection(pf))
    rep = check_piecewise(_frame(pf), _k(pf), pw, opts.tol)
    return _pw_report(rep), EXIT_TRUE if rep.is_kps else EXIT_FALSE


def cmd_piecewise_build(pf, opts):
    frame, kop, proj = _frame(pf), _k(pf), _projection(pf)
    try:
        pw = build_disjoint_piecewise(frame, kop, proj, _require(pf, "index_set"), opts.tol)
    except InfeasiblePiece as exc:
        return {"feasible": False, "piece": exc.piece, "residual": exc.residual}, EXIT_FALSE
    rep = check_piecewise(frame, kop, pw, opts.tol)
    result = {"feasible": True, "a": pw.a, "b": pw.b, "check": _pw_report(rep)}
    return result, EXIT_TRUE if rep.is_kps else EXIT_FALSE


def cmd_vi_solve(pf, opts):
    frame = _frame(pf)
    lam = np.array(pf.lambda_) if pf.lambda_ is not None else build_ops(frame).frame_op
    problem = VIProblem(BilinearForm(lam), _convex_set(pf), np.array(_require(pf, "f0")), _k(pf))
    res = solve_vi(problem, opts.tol, opts.max_iter)
    cert = vi_certificate(problem, res.u0, opts.tol, seed=opts.seed)
    result = {
        "u0": res.u0,
        "iterations": res.iterations,
        "gamma": res.gamma,
        "contraction_rho": res.contraction_rho,
        "final_step_norm": res.final_step_norm,
        "error_bound": res.error_bound,
        "symmetric": problem.form.symmetric,
        "alpha": problem.form.alpha,
        "beta": problem.form.beta,
        "J_value": res.J_value,
        "vi_certificate": {"passed": cert.passed, "worst_slack": cert.worst_slack},
    }
    ok = cert.passed
    if problem.form.symmetric:
        mcert = minimality_certificate(problem, res.u0, opts.tol, seed=opts.seed)
        result["min_certificate"] = {"passed": mcert.passed, "worst_slack": mcert.worst_slack}
        ok = ok and mcert.passed
    return result, EXIT_TRUE if ok else EXIT_FALSE


def cmd_bounds(pf, opts):
    rep = bounds_report(_frame(pf), _k(pf), np.array(_require(pf, "f0")), opts.tol,
                        opts.max_iter_explicit)
    result = {
        "lower": rep.lower,
        "upper": rep.upper,
        "j_min": rep.j_min,
        "j_closed_form": rep.j_closed_form,
        "holds": rep.holds,
        "lower_A": rep.lower_A,
        "upper_B": rep.upper_B,
        "upper_as_printed": rep.upper_as_printed,
        "printed_upper_holds": rep.printed_upper_holds,
        "iterations": rep.iterations,
    }
    return result, EXIT_TRUE if rep.holds else EXIT_FALSE


HANDLERS = {
    "analyze": cmd_analyze,
    "parseval": cmd_parseval,
    "scale": cmd_scale,
    "piecewise-check": cmd_piecewise_check,
    "piecewise-build": cmd_piecewise_build,
    "vi-solve": cmd_vi_solve,
    "bounds": cmd_bounds,
}


class _Opts:
    """Effective options for one problem: command-line flags override file values."""

    def __init__(self, args, pf):
        self.tol = args.tol if args.tol is not None else (pf.tol or DEFAULT_TOL)
        explicit = args.max_iter if args.max_iter is not None else pf.max_iter
        self.max_iter_explicit = explicit
        self.max_iter = explicit if explicit is not None else DEFAULT_MAX_ITER
        self.seed = args.seed


def run_one(command, path, args):
    """Run ``command`` on one file; returns ``(report_dict, exit_code, message)``."""
    report = {"command": command, "input": None, "input_digest": None}
    t0 = time.perf_counter()
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        report["input_digest"] = "sha256:" + hashlib.sha256(raw).hexdigest()
        pf = parse_problem(path)
        opts = _Opts(args, pf)
        report["input"] = {"dimension": pf.dimension, "count": pf.count}
        # bounds picks its own budget when none is given; null records that
        max_iter = opts.max_iter_explicit if command == "bounds" else opts.max_iter
        report["options"] = {"tol": opts.tol, "max_iter": max_iter, "seed": opts.seed}
        result, code = HANDLERS[command](pf, opts)
        report["result"] = result
        message = None
    except OSError as exc:
        report["error"] = {"type": "IoError", "message": str(exc)}
        code, message = EXIT_INPUT, f"{path}: {exc}"
    except NumericalFailure as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code, message = EXIT_NUMERIC, f"{path}: {type(exc).__name__}: {exc}"
    except (InputError, KFrameError, ValueError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code, message = EXIT_INPUT, f"{path}: {type(exc).__name__}: {exc}"
    report["exit_code"] = code
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - t0
    return report, code, message


def _text(obj, prefix=""):
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict):
                lines.extend(_text(v, key))
            else:
                lines.append(f"{key}: {_text_value(v)}")
    return lines


def _text_value(v):
    if hasattr(v, "tolist"):
        v = v.tolist()
    if isinstance(v, float):
        return format(v, ".10g")
    if isinstance(v, list):
        return "[" + ", ".join(_text_value(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v).lower() if isinstance(v, bool) else str(v)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problems", nargs="+", metavar="problem.json")
    common.add_argument("--tol", type=float, default=None, help="tolerance (default 1e-9)")
    common.add_argument("--max-iter", type=int, default=None,
                        help="iteration cap (default 10000)")
    common.add_argument("--output", choices=("json", "text"), default="text")
    common.add_argument("--seed", type=int, default=42,
                        help="seed for sampled certificate checks")
    common.add_argument("--jobs", type=int, default=1,
                        help="process problem files in parallel")
    common.add_argument("--timing", action="store_true",
                        help="add wall time to reports (breaks byte-identical output)")
    parser = argparse.ArgumentParser(prog="kframekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    helps = {
        "analyze": "frame/Gram operators and optimal K-frame bounds",
        "parseval": "Parseval K-frame check",
        "scale": "solve for a K-scaling and verify it",
        "piecewise-check": "check a piecewise scaling (P, a, b)",
        "piecewise-build": "build a disjoint piecewise scaling from an index set",
        "vi-solve": "projected contraction VI solve",
        "bounds": "K-frame bounds on the minimum energy",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _run_star(item):
    return run_one(*item)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    if args.max_iter is not None and args.max_iter < 1:
        parser.error("--max-iter must be >= 1")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")

    items = [(args.command, p, args) for p in args.problems]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_star, items))
    else:
        outcomes = [run_one(*it) for it in items]

    for _, _, message in outcomes:
        if message:
            print(f"kframekit: {message}", file=sys.stderr)
    reports = [r for r, _, _ in outcomes]
    if args.output == "json":
        sys.stdout.write(dumps(reports[0] if len(reports) == 1 else reports))
    else:
        blocks = []
        for rep in reports:
            blocks.append("\n".join(_text(rep)))
        sys.stdout.write("\n\n".join(blocks) + "\n")
    return max(code for _, code, _ in outcomes)


if __name__ == "__main__":
    sys.exit(main())
