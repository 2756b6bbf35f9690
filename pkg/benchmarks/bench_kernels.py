"""Benchmark the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeats 20]

The first numba call of each kernel is untimed (JIT warmup).
"""

import argparse
import time

import numpy as np

from replyauction import _kernels


def timeit(fn, args, repeats):
    fn(*args)  # warmup / JIT
    times = np.empty(repeats)
    for i in range(repeats):
        start = time.perf_counter()
        fn(*args)
        times[i] = time.perf_counter() - start
    return times.mean() * 1e3, times.std() * 1e3


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if not _kernels._HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)

    k, m = 4, 10  # 4^10 = ~1M ordered tuples
    gen = rng.dirichlet(np.ones(k))
    logits = rng.normal(0, 1, k)
    weights = np.exp(logits - logits.max())
    cases = [
        ("induced_exact (K=4, m=10)",
         _kernels.induced_exact_numba, _kernels.induced_exact_numpy,
         (gen, weights, m)),
    ]

    k = 8
    logit_table = rng.normal(0, 1, k)
    cand = rng.integers(0, k, size=(200_000, 32))
    u = rng.random(200_000)
    cases.append(
        ("run_trials (T=200k, M=32, K=8)",
         _kernels.run_trials_numba, _kernels.run_trials_numpy,
         (cand, logit_table, u))
    )

    opt = rng.dirichlet(np.ones(k))
    wt = np.exp(logit_table - logit_table.max())
    cases.append(
        ("batch_tv (T=200k, M=32, K=8)",
         _kernels.batch_tv_numba, _kernels.batch_tv_numpy,
         (cand, wt, opt))
    )

    for name, fast, slow, case_args in cases:
        numba_mean, numba_std = timeit(fast, case_args, args.repeats)
        numpy_mean, numpy_std = timeit(slow, case_args, args.repeats)
        print(f"{name}")
        print(f"  numba  {numba_mean:9.3f} ± {numba_std:.3f} ms")
        print(f"  numpy  {numpy_mean:9.3f} ± {numpy_std:.3f} ms   ({numpy_mean / numba_mean:.1f}x)")


if __name__ == "__main__":
    main()
