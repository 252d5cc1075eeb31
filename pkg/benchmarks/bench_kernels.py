"""Compare the compiled and pure-Python twin integrators.

Usage: python3 benchmarks/bench_kernels.py [--days 5] [--repeats 5]
"""

import argparse
import timeit

import numpy as np

from attnbo.objectives import TRUE_THETA, twin
from attnbo.objectives import _twin_fallback

try:
    from attnbo.objectives import _twin_kernel
except ImportError:
    _twin_kernel = None


def run_with(kernel, days):
    saved = twin._integrate
    twin._integrate = kernel.integrate
    try:
        return twin.simulate_twin(TRUE_THETA, days).values
    finally:
        twin._integrate = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    kernels = {"python": _twin_fallback}
    if _twin_kernel is not None:
        kernels["cython"] = _twin_kernel
    else:
        print("compiled extension not built; timing the fallback only")

    outputs, best = {}, {}
    for name, mod in kernels.items():
        outputs[name] = run_with(mod, args.days)
        number = 1 if name == "python" else 20
        times = timeit.repeat(lambda m=mod: run_with(m, args.days), number=number, repeat=args.repeats)
        best[name] = min(times) / number
        print(f"{name:>7}: {best[name] * 1e3:10.3f} ms per {args.days}-day simulation")

    if len(kernels) == 2:
        same = np.array_equal(outputs["python"], outputs["cython"])
        print(f"speed-up: {best['python'] / best['cython']:.1f}x, outputs bit-identical: {same}")


if __name__ == "__main__":
    main()
