"""Compare the numba-compiled kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``KFRAMEKIT_DISABLE_NUMBA``.  Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
import kframekit as kf
from kframekit.scalability import vech, vech_columns

rng = np.random.default_rng(0)
x = rng.standard_normal((16, 16))
sym16 = x + x.T
frame = kf.Frame(rng.standard_normal((6, 12)))
a, b = vech_columns(frame), vech(rng.standard_normal((6, 6)) @ rng.standard_normal((6, 6)).T)
q = np.linalg.qr(rng.standard_normal((8, 8)))[0]
lam = (q * np.linspace(1.0, 10.0, 8)) @ q.T
vi = kf.VIProblem(kf.BilinearForm(lam), kf.ConvexSet.ball(np.zeros(8), 0.5),
                  rng.standard_normal(8), np.eye(8))

cases = {
    "sym_eig 16x16": lambda: kf.sym_eig(sym16),
    "svd 16x16": lambda: kf.operator_norm(x),
    "nnls 21x12": lambda: kf.nnls(a, b),
    "solve_vi n=8 ball": lambda: kf.solve_vi(vi, max_iter=100000),
}
repeat = int(sys.argv[1])
out = {"backend": kf.backend_name()}
for name, fn in cases.items():
    fn()  # warm-up (includes compilation or cache load)
    out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["KFRAMEKIT_DISABLE_NUMBA"] = "1"
    else:
        env.pop("KFRAMEKIT_DISABLE_NUMBA", None)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':<20} {fast['backend']:>12} {slow['backend']:>12} {'speedup':>9}")
    for name in fast:
        if name == "backend":
            continue
        print(f"{name:<20} {fast[name] * 1e3:10.3f}ms {slow[name] * 1e3:10.3f}ms "
              f"{slow[name] / fast[name]:8.1f}x")


if __name__ == "__main__":
    main()
