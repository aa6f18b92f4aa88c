"""Time the numba and numpy kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--T 20000] [--repeat 5]

Each backend runs in its own interpreter because the choice is made at import.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from obsalloc import _kernels
from obsalloc.harness import build_model1

T, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
m, d, p = 20, 39, 5
u = rng.standard_normal((T + 1, m))
y = rng.standard_normal((T + 2, p))
A = build_model1().A
drive = rng.standard_normal((T + 1, 20))

def best(fn, *args):
    fn(*args)  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)

print(json.dumps({
    "backend": _kernels.BACKEND,
    "simulate": best(_kernels.simulate_states, A, drive),
    "gram": best(_kernels.gram, u, d),
    "cross": best(_kernels.cross, y, u, d),
}))
"""


def run(disable, T, repeat):
    env = dict(os.environ, OBSALLOC_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(T), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    results = [run(False, args.T, args.repeat), run(True, args.T, args.repeat)]
    print(f"{'kernel':<10}" + "".join(f"{r['backend']:>12}" for r in results))
    for key in ("simulate", "gram", "cross"):
        print(f"{key:<10}" + "".join(f"{r[key] * 1e3:>10.2f}ms" for r in results))


if __name__ == "__main__":
    main()
