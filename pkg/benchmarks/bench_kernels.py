"""Compare the numba and numpy kernel backends on the hot paths.

Run as a script:

    python benchmarks/bench_kernels.py [--d 12] [--classes 5] [--repeats 20]

The numba backend is what ``import limetree`` picks up by default; setting
LIMETREE_DISABLE_NUMBA=1 switches the whole package to the numpy fallback.
This script times both implementations directly in one process.
"""

import argparse
import time

import numpy as np

from limetree._kernels import (HAVE_NUMBA, _route_numpy, _split_gains_numpy,
                               backend_name)
from limetree.sampling import enumerate_domain
from limetree.tree import fit_tree


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--d", type=int, default=12)
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(enumerate_domain(args.d).astype(np.float64))
    Y = np.ascontiguousarray(rng.random((2 ** args.d, args.classes)))
    w = np.ascontiguousarray(rng.random(2 ** args.d) + 0.01)
    active = np.ones(args.d, dtype=np.bool_)
    tree = fit_tree(X, Y, w, min(args.d, 8))

    print("default backend: %s  (n=%d, d=%d, k=%d)"
          % (backend_name(), len(X), args.d, args.classes))

    rows = [("split_gains[numpy]",
             timeit(lambda: _split_gains_numpy(X, Y, w, active), args.repeats)),
            ("route[numpy]",
             timeit(lambda: _route_numpy(tree.feature, tree.left,
                                         tree.right, X), args.repeats))]
    if HAVE_NUMBA:
        from limetree._kernels import _route_numba, _split_gains_numba

        _split_gains_numba(X, Y, w, active)     # warm the JIT cache
        _route_numba(tree.feature, tree.left, tree.right, X)
        rows.append(("split_gains[numba]",
                     timeit(lambda: _split_gains_numba(X, Y, w, active),
                            args.repeats)))
        rows.append(("route[numba]",
                     timeit(lambda: _route_numba(tree.feature, tree.left,
                                                 tree.right, X),
                            args.repeats)))
        a = _split_gains_numba(X, Y, w, active)
        b = _split_gains_numpy(X, Y, w, active)
        print("backend agreement: max |gain diff| = %.3e"
              % float(np.abs(a - b).max()))
    else:
        print("numba unavailable or disabled; numpy timings only")

    for name, best in rows:
        print("%-22s %10.3f us" % (name, best * 1e6))


if __name__ == "__main__":
    main()
