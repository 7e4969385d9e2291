"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times the cyclic tridiagonal solve (one FD elliptic solve) and the periodic
cubic interpolation used by the characteristic tracer, checks that both
backends return the same numbers, and prints the speedup.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from bpwave import _kernels_py

try:
    from bpwave import _kernels as _compiled
except ImportError:
    _compiled = None


def _tridiag_case(n, rng):
    lower = -rng.uniform(0.1, 1.0, n)
    upper = -rng.uniform(0.1, 1.0, n)
    diag = np.abs(lower) + np.abs(upper) + 1.0
    return lower, diag, upper, rng.standard_normal(n)


def _interp_case(n, q, rng):
    return rng.standard_normal(n), 0.0, 0.05, rng.uniform(-10, 10 + n * 0.05, q)


CASES = {
    "cyclic_tridiag_solve n=512": ("cyclic_tridiag_solve", lambda rng: _tridiag_case(512, rng)),
    "cyclic_tridiag_solve n=4096": ("cyclic_tridiag_solve", lambda rng: _tridiag_case(4096, rng)),
    "periodic_cubic_interp 1 point": ("periodic_cubic_interp", lambda rng: _interp_case(512, 1, rng)),
    "periodic_cubic_interp 2048 points": ("periodic_cubic_interp", lambda rng: _interp_case(512, 2048, rng)),
}


def best_of(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1

    rows = []
    print(f"{'kernel':<36} {'python':>12} {'cython':>12} {'speedup':>9}")
    for label, (name, make) in CASES.items():
        case = make(np.random.default_rng(0))
        py, cy = getattr(_kernels_py, name), getattr(_compiled, name)
        diff = np.max(np.abs(np.asarray(py(*case)) - np.asarray(cy(*case))))
        if diff > 1e-10:
            print(f"{label}: backends disagree by {diff:.3g}", file=sys.stderr)
            return 1
        t_py, t_cy = best_of(py, case, args.repeat), best_of(cy, case, args.repeat)
        rows.append({"kernel": label, "python_s": t_py, "cython_s": t_cy, "speedup": t_py / t_cy})
        print(f"{label:<36} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {t_py / t_cy:>8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
