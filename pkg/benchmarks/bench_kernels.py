"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import sys
import timeit

import numpy as np

from causalfair import _kernels_py as py

try:
    from causalfair import _kernels as cy
except ImportError:
    cy = None


def cases(rng):
    d, h, B, k = 11, 22, 64, 10
    mask = np.triu(rng.random((d, d)) < 0.3, 1).T.astype(np.float64)
    order = np.arange(d)
    gp = [rng.normal(size=(h, d + 1)) * 0.3, np.zeros(h), rng.normal(size=(1, d, h, h)) * 0.2,
          np.zeros((1, d, h)), rng.normal(size=(d, h)) * 0.2, np.zeros(d)]
    Ws = [rng.normal(size=(h, d)) * 0.3, rng.normal(size=(h, h)) * 0.2, rng.normal(size=(1, h)) * 0.2]
    bs = [np.zeros(h), np.zeros(h), np.zeros(1)]
    tau = np.where(rng.random(d) < 0.6, 0.2, 0.0)
    Zf = rng.normal(size=(B * k, d))
    Sf = rng.logistic(size=(B * k, d))
    Zg, Sg = Zf[:B], Sf[:B]
    real = rng.normal(size=(B, d))
    ref = rng.normal(size=(4000, d))
    query = rng.normal(size=(4000, d))
    radii = np.full(4000, 1.5)

    n = 60
    adj = np.triu(rng.random((n, n)) < 0.08, 1)
    pa = [np.flatnonzero(adj[:, j]) for j in range(n)]
    ch = [np.flatnonzero(adj[j]) for j in range(n)]
    pa_ptr = np.concatenate([[0], np.cumsum([len(p) for p in pa])]).astype(np.int64)
    ch_ptr = np.concatenate([[0], np.cumsum([len(c) for c in ch])]).astype(np.int64)
    pa_idx = np.concatenate(pa).astype(np.int64)
    ch_idx = np.concatenate(ch).astype(np.int64)
    src = np.zeros(n, np.uint8)
    src[0] = 1
    obs = (rng.random(n) < 0.2).astype(np.uint8)
    obs[0] = 0

    return {
        "gen_forward (B*k rows)": lambda m: m.gen_forward(gp, mask, order, Zf, Sf, 0.2, tau),
        "gen_grads (B rows)": lambda m: m.gen_grads(gp, mask, order, Zg, Sg, Ws, bs, 0.2, tau),
        "disc_grads": lambda m: m.disc_grads(Ws, bs, real, Zf[:B], 0.2),
        "knn_coverage 4k x 4k": lambda m: m.knn_coverage(ref, radii, query),
        "reachable (60 nodes)": lambda m: m.reachable(pa_ptr, pa_idx, ch_ptr, ch_idx, src, obs),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="write timings here")
    args = parser.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<24}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        number = 3
        t_py = min(timeit.repeat(lambda: fn(py), number=number, repeat=args.repeat)) / number * 1e3
        t_cy = min(timeit.repeat(lambda: fn(cy), number=number, repeat=args.repeat)) / number * 1e3 if cy else float("nan")
        rows.append({"kernel": name, "python_ms": t_py, "cython_ms": t_cy, "speedup": t_py / t_cy})
        print(f"{name:<24}{t_py:>12.3f}{t_cy:>12.3f}{t_py / t_cy:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
