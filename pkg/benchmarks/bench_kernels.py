#!/usr/bin/env python3
"""Benchmark the compiled pairwise kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 500,2000,5000] [--dim 20]

Also times the desk-scale partition census end to end under each backend,
since the intra-region distance scan is where the kernels matter.
"""

import argparse
import time

import numpy as np

from unrectify import _kernels
from unrectify._kernels import _pairwise_np


def _load_compiled():
    if _kernels.BACKEND == "cython":
        from unrectify._kernels import _pairwise_cy

        return _pairwise_cy
    return None


def time_call(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="500,2000,5000")
    parser.add_argument("--dim", type=int, default=20)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    compiled = _load_compiled()
    backends = [("numpy", _pairwise_np)]
    if compiled is not None:
        backends.append(("cython", compiled))
    else:
        print("compiled kernels not built; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>7}{'dim':>5}" + "".join(f"{name:>12}" for name, _ in backends))
    for n in sizes:
        x = rng.normal(size=(n, args.dim))
        y = rng.normal(size=(n, args.dim + 4))
        for label, call_args in (
            ("max_pairwise_dist", (x,)),
            ("max_pair_gain", (y, x)),
        ):
            times = []
            values = []
            for _, mod in backends:
                t, v = time_call(getattr(mod, label), *call_args)
                times.append(t)
                values.append(v)
            assert all(abs(v - values[0]) <= 1e-9 * max(1.0, values[0]) for v in values)
            print(
                f"{label:<18}{n:>7}{args.dim:>5}"
                + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
            )

    # end-to-end: census of the first fusion layer at desk scale
    import unrectify as ur
    from unrectify.partition import partition_census

    net = ur.build_fusion_stack(5, 14, 7)
    xs = ur.rng.standard_normal((5_000, 14), 7, "partition/samples")
    for name, mod in backends:
        saved = _kernels.max_pairwise_dist
        _kernels.max_pairwise_dist = mod.max_pairwise_dist
        try:
            t, _ = time_call(partition_census, net, "t01", xs, repeats=2)
        finally:
            _kernels.max_pairwise_dist = saved
        print(f"census layer-1 top channel, 5000 samples [{name}]: {t * 1e3:.0f}ms")


if __name__ == "__main__":
    main()
