"""Compiled vs numpy kernels: wall time per call and agreement.

    python benchmarks/bench_kernels.py [--sizes 64,128,256] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from plapsys import kernels


def bench(n, dim, p, eps, repeat):
    rng = np.random.default_rng(0)
    u = np.zeros((n + 1,) * dim)
    u[(slice(1, -1),) * dim] = rng.standard_normal((n - 1,) * dim)
    spacing = (1.0 / n,) * dim
    times, results = {}, {}
    for name in kernels.available_backends():
        kernels.use_backend(name)
        results[name] = kernels.p_energy_grad(u, spacing, p, eps)
        call = lambda: kernels.p_energy_grad(u, spacing, p, eps)
        number = max(1, int(0.2 / max(timeit.timeit(call, number=1), 1e-6)))
        times[name] = min(timeit.repeat(call, number=number, repeat=repeat)) / number
    return times, results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,128,256")
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    previous = kernels.backend()
    names = kernels.available_backends()
    if "compiled" not in names:
        print("compiled extension not built; timing the python backend only")
    print(f"{'n':>6} " + " ".join(f"{b + ' [ms]':>16}" for b in names) + f" {'speedup':>9} {'max rel diff':>13}")
    rows = []
    try:
        for n in (int(s) for s in args.sizes.split(",")):
            times, res = bench(n, args.dim, args.p, 1e-8, args.repeat)
            speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
            diff = 0.0
            if "compiled" in res:
                (ec, gc), (ep, gp) = res["compiled"], res["python"]
                diff = max(abs(ec - ep) / abs(ep), np.abs(gc - gp).max() / np.abs(gp).max())
            print(f"{n:>6} " + " ".join(f"{1e3 * times[b]:>16.3f}" for b in names)
                  + f" {speedup:>9.2f} {diff:>13.2e}")
            rows.append((n, times, diff))
    finally:
        kernels.use_backend(previous)
    return rows


if __name__ == "__main__":
    main()
