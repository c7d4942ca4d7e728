"""Compare the compiled kernel extension against the numpy fallback.

Times the three hot kernels (B-spline basis batch, tree growth, tree
traversal) on representative workloads and checks that both backends return
bit-identical results. Run from the repository root:

    python3 benchmarks/bench_kernels.py [--reps 5]
"""

import argparse
import time

import numpy as np

from divlate import _pykernels

try:
    from divlate import _ckernels
except ImportError:
    _ckernels = None


def best_of(reps, fn, *args):
    best = float("inf")
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def check_equal(name, a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for u, v in zip(a, b):
        if not np.array_equal(np.asarray(u), np.asarray(v)):
            raise AssertionError(f"{name}: backends disagree")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return

    rng = np.random.default_rng(0)
    xs = rng.normal(0.0, 1.5, size=50_000)
    Xt = rng.normal(size=(4000, 5))
    yt = ((Xt[:, 0] + 0.5 * Xt[:, 1] ** 2 + rng.normal(0.0, 0.5, 4000)) > 0.5).astype(
        np.float64
    )
    Xq = rng.normal(size=(100_000, 5))

    cases = [
        ("bspline_basis_batch (50k pts, grid 4, order 3)",
         lambda im: (im.bspline_basis_batch, xs, -3.0, 3.0, 4, 3)),
        ("grow_tree (4000 x 5, depth 12)",
         lambda im: (im.grow_tree, Xt, yt, 12, 5, 3, 7)),
    ]

    print(f"{'kernel':<44} {'compiled':>10} {'python':>10} {'speedup':>8}")
    tree = None
    for name, make in cases:
        fn_c, *a = make(_ckernels)
        fn_p, *_ = make(_pykernels)
        tc, out_c = best_of(args.reps, fn_c, *a)
        tp, out_p = best_of(args.reps, fn_p, *a)
        check_equal(name, out_c, out_p)
        print(f"{name:<44} {tc * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tc:>7.1f}x")
        if name.startswith("grow_tree"):
            tree = out_c

    feature, threshold, left, right, value, _ = tree
    name = "tree_apply (100k rows)"
    tc, out_c = best_of(
        args.reps, _ckernels.tree_apply, feature, threshold, left, right, value, Xq
    )
    tp, out_p = best_of(
        args.reps, _pykernels.tree_apply, feature, threshold, left, right, value, Xq
    )
    check_equal(name, out_c, out_p)
    print(f"{name:<44} {tc * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tc:>7.1f}x")
    print("agreement: all outputs bit-identical")


if __name__ == "__main__":
    main()
