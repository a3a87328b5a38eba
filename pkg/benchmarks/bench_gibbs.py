"""Throughput of the compiled heat-bath kernel against the pure-Python fallback.

    python3 benchmarks/bench_gibbs.py [--sizes 200,200] [--sweeps 200] [--repeat 3]

Both kernels consume the same uniforms, so the benchmark also checks that
their margin traces agree exactly.
"""

import argparse
import time

import numpy as np

from council_weights import kernels
from council_weights.model import GroupSizes, ModelSpec, build_coupling
from council_weights.sim import ChainConfig, gibbs_sample


def make_spec(sizes, beta):
    N = sum(sizes)
    alphas = [n / N for n in sizes]
    alphas[-1] = 1.0 - sum(alphas[:-1])
    return ModelSpec(GroupSizes(tuple(alphas), tuple(sizes)),
                     build_coupling("homogeneous", {"beta": beta}, len(sizes)))


def time_backend(spec, cfg, backend, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = gibbs_sample(spec, cfg, backend=backend, workers=1)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="200,200", help="comma-separated group sizes")
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",")]
    spec = make_spec(sizes, args.beta)
    cfg = ChainConfig(sweeps=args.sweeps, seed=1)
    updates = args.sweeps * sum(sizes)
    rows = []
    traces = {}
    for backend in sorted(kernels.KERNELS):
        secs, res = time_backend(spec, cfg, backend, args.repeat)
        traces[backend] = res.margins
        rows.append((backend, secs, updates / secs))
    print(f"N = {sum(sizes)} in {len(sizes)} groups, {args.sweeps} sweeps ({updates} site updates)")
    print(f"{'backend':<10}{'seconds':>12}{'updates/s':>16}")
    for name, secs, rate in rows:
        print(f"{name:<10}{secs:>12.4f}{rate:>16.3e}")
    if len(rows) == 2:
        speedup = rows[1][1] / rows[0][1] if rows[0][0] == "cython" else rows[0][1] / rows[1][1]
        same = np.array_equal(traces["cython"], traces["python"])
        print(f"speedup (python / cython): {speedup:.1f}x; identical traces: {same}")
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
