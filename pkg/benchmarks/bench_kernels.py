"""Compare the compiled and pure-numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. The first part times the
kernels in-process; the second runs one CLI experiment end to end in a
fresh interpreter per backend, so compile time is included there.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from qtb import kernels, optimize
from qtb.sampling import random_hermitian, random_measurement


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    d = 4
    m = random_measurement(rng, d, 3, 2)
    obj = optimize.StateObjective(m.kraus_groups(), 1.0, random_hermitian(rng, d), 1.0)
    args = (obj.kraus, obj.outcome, 3, obj.h, 1.0, 1.0)
    x = rng.standard_normal((64, 2 * d * d))
    mats = np.stack([random_hermitian(rng, 8) for _ in range(256)])
    return {
        "eigh_batch 256x8x8": lambda b: b.eigh_batch(mats),
        "objective_batch 64 states d=4": lambda b: b.objective_batch(x, *args),
        "objective_grad d=4": lambda b: b.objective_grad(x[0], *args, 1e-5),
    }


def end_to_end(flag):
    env = dict(os.environ, QTB_NUMBA=flag)
    cmd = [sys.executable, "-m", "qtb", "measure-benefit", "--measurement", "basis3"]
    t0 = time.perf_counter()
    subprocess.run(cmd, env=env, check=True, capture_output=True)
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-e2e", action="store_true")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    backends = [("numpy", kernels.numpy_backend)]
    if kernels.numba_backend is not None:
        backends.append(("numba", kernels.numba_backend))
    for _, b in backends:
        for fn in cases.values():
            fn(b)  # warm-up / compile
    print(f"{'kernel':34s}" + "".join(f"{name:>12s}" for name, _ in backends))
    for label, fn in cases.items():
        row = [best_of(lambda: fn(b), args.repeat) for _, b in backends]
        print(f"{label:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in row))
    if not args.skip_e2e:
        print()
        for flag, name in (("0", "numpy"), ("1", "numba")):
            print(f"end-to-end measure-benefit basis3 [{name}]: {end_to_end(flag):.2f}s")


if __name__ == "__main__":
    main()
