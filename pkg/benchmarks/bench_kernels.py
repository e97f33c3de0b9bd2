"""Compare the compiled and pure-Python gap-moment kernels.

Usage: python benchmarks/bench_kernels.py [--sizes 10,100,1000] [--repeat 5]

Also times a bound extraction end to end, since the kernels sit inside every
residual evaluation of the bisection and delta search.
"""
import argparse
import timeit

import numpy as np

from buckspec import _kernels_py, kernels
from buckspec.core import RuleParams
from buckspec.inequalities import DeltaPolicy, bound_from_rule


def _time(fn, repeat):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="10,100,1000,10000")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled extension not built; only the fallback is available")
        return 1
    from buckspec import _kernels

    rng = np.random.default_rng(0)
    print(f"{'size':>7} {'python (us)':>12} {'cython (us)':>12} {'speedup':>8}")
    for size in (int(s) for s in args.sizes.split(",")):
        values = np.sort(rng.uniform(1.0, 100.0, size))
        target = 150.0
        py = _time(lambda: _kernels_py.gap_moment(values, target, 2, 0.5), args.repeat)
        cy = _time(lambda: _kernels.gap_moment(values, target, 2, 0.5), args.repeat)
        assert _kernels_py.gap_moment(values, target, 2, 0.5) == _kernels.gap_moment(values, target, 2, 0.5)
        print(f"{size:>7} {py * 1e6:>12.1f} {cy * 1e6:>12.1f} {py / cy:>8.1f}")

    values = list(np.sort(rng.uniform(1.0, 3.0, 200)))
    for rule, policy in (("thm31", DeltaPolicy.FIXED), ("thm11", DeltaPolicy.OPTIMIZE_UNIFORM)):
        times = {}
        for name, impl in (("python", _kernels_py), ("cython", _kernels)):
            kernels.gap_moment, kernels.ordered_sum = impl.gap_moment, impl.ordered_sum
            times[name] = _time(lambda: bound_from_rule(rule, RuleParams(3), values, policy), args.repeat)
        kernels.gap_moment, kernels.ordered_sum = _kernels.gap_moment, _kernels.ordered_sum
        print(f"bound {rule} k=200: python {times['python'] * 1e3:.2f} ms, cython {times['cython'] * 1e3:.2f} ms, "
              f"speedup {times['python'] / times['cython']:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
