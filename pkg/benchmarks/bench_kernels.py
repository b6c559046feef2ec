"""Time the numba kernels against their numpy fallbacks.

Inputs come from a labeled swiss roll so the constraint counts match a real
ISM run.  With ``--solve`` the script also times one full embedding per
backend, each in a fresh interpreter (the backend is fixed at import time
through ``ISMAP_DISABLE_NUMBA``).

    python3 benchmarks/bench_kernels.py --n 1500 --rank 3 --solve
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ismap import SwissRollSpec, build_constraints, build_knn, gen_swiss_roll, select_anchors
from ismap import _kernels as K

SOLVE_SNIPPET = """
import time
from ismap import SolverConfig, SwissRollSpec, embed_dataset, gen_swiss_roll, BACKEND
ds = gen_swiss_roll(SwissRollSpec(n_points={n}, labeling="two_class_patches", seed=1))
t = time.perf_counter()
res = embed_dataset(ds, k=5, config=SolverConfig(rank={rank}, max_outer={outer}))
r = res.report
print(BACKEND, time.perf_counter() - t, r.eq_rrmse, r.inner_iterations)
"""


def kernel_cases(n, rank, seed=0):
    ds = gen_swiss_roll(SwissRollSpec(n_points=n, labeling="two_class_patches", seed=1))
    graph = build_knn(ds, 5)
    cs = build_constraints(graph, ds, select_anchors(ds))
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, rank))
    lam = rng.standard_normal(cs.n_eq)
    mu = np.abs(rng.standard_normal(cs.n_sep))
    ew = 1.0 / cs.eq_d
    G = np.zeros_like(R)
    h = np.empty(cs.n_eq)
    g = np.empty(cs.n_sep)
    C = R.T @ R
    args = {
        "eq_penalty": (R, cs.eq_i, cs.eq_j, cs.eq_d, ew, lam, 10.0, G, h),
        "sep_penalty": (R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin, mu, 10.0, G, g),
        "pair_spread": (R, np.arange(n), graph.far_j, 1.0, G),
        "eq_residuals": (R, cs.eq_i, cs.eq_j, cs.eq_d),
        "sep_values": (R, cs.sep_a, cs.sep_i, cs.sep_sign, cs.sep_margin),
        "knn_scan": (ds.points, 5),
        "jacobi_eigh": (C, 1e-12, 100),
    }
    return args


def time_kernel(fn, args, repeat):
    fn(*args)  # warm-up (triggers compilation on the numba path)
    t = timeit.repeat(lambda: fn(*args), number=1, repeat=repeat)
    return min(t)


def bench_kernels(n, rank, repeat):
    cases = kernel_cases(n, rank)
    print(f"kernels at N={n}, rank={rank} (best of {repeat}, milliseconds)")
    print(f"{'kernel':<14}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, args in cases.items():
        t_np = time_kernel(getattr(K, name + "_np"), args, repeat)
        if K.HAS_NUMBA:
            t_nb = time_kernel(getattr(K, name + "_nb"), args, repeat)
            print(f"{name:<14}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<14}{1e3 * t_np:>12.3f}{'n/a':>12}{'':>10}")


def bench_solve(n, rank, outer):
    code = SOLVE_SNIPPET.format(n=n, rank=rank, outer=outer)
    print(f"\nfull ISM solve at N={n}, rank={rank}, max_outer={outer}")
    for disable in ("1", "0"):
        env = dict(os.environ, ISMAP_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs, rr, inner = out.stdout.split()
        print(f"{backend:<8} {float(secs):8.2f}s  eq_rrmse={float(rr):.4f}%  inner={inner}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--rank", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--solve", action="store_true", help="also time complete solves")
    ap.add_argument("--max-outer", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"backend in this process: {K.BACKEND}")
    bench_kernels(args.n, args.rank, args.repeat)
    if args.solve:
        bench_solve(args.n, args.rank, args.max_outer)


if __name__ == "__main__":
    main()
